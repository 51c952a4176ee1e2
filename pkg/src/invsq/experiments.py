"""Named experiments behind the command line; each returns tables and pass/fail checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import coeffs as cf
from . import nls as nl
from . import propagators as pr
from . import scattering as sc
from . import strichartz as st
from .config import ExperimentConfig
from .packets import gaussian_shell
from .spectral import boundary_mass, bessel_j, build_basis, nu_order

BOUNDARY_TOL = 1e-6


@dataclass
class Table:
    name: str
    columns: list[str]   # "name[unit]"
    rows: list[tuple]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Result:
    tables: list[Table] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    def check(self, name: str, passed, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def fundamental(cfg: ExperimentConfig) -> cf.FundamentalSolution:
    p = cfg["profile"]
    return cf.power_solution(cf.make_profile(p["kind"], p["sigma1"], p["r0"]), c=p["c"])


def _plan(cfg, fs, R, K, Lambda=None):
    s = cfg["sector"]
    lam = s["Lambda"] if Lambda is None else Lambda
    return pr.make_plan(fs, s["n"], s["ell"], lam, R, K, s["lambda0"])


def _packet(plan, rc, w, k):
    return gaussian_shell(plan.basis, plan.n, plan.ell, plan.Lambda, rc, w, k,
                          lambda0=plan.lambda0)


# ------------------------------------------------------------------ experiments

def check_assumptions(cfg: ExperimentConfig) -> Result:
    res = Result()
    fs = fundamental(cfg)
    a = cfg["assumptions"]
    r0 = fs.r0
    grid = np.geomspace(r0, a["t_max"], a["grid_points"])
    a1 = cf.check_assumption_a1(fs.profile, grid)
    res.check("A1 difference-quotient bound finite", a1["pass"], f"max_ratio={a1['max_ratio']:.6g}")
    a2 = cf.check_assumption_a2(fs, a["T_list"])
    res.check("A2 integral of zeta^-2 diverges (heuristic)", a2["diverging"],
              "integrals=" + ", ".join(f"{x:.6g}" for x in a2["integrals"]))
    lam = fs.lam
    res.check("2 lambda <= 1", 0 < lam and 2 * lam <= 1, f"lambda={lam:.12g}")

    num = cf.solve_zeta(fs.profile, (r0, a["ode_t_max"]), a["ode_dt"], c=fs.c)
    err = float(np.max(np.abs(num.z - fs.zeta(num.t)) / np.abs(fs.zeta(num.t))))
    res.check("numeric zeta matches analytic branch (1e-8)", err <= 1e-8, f"max_rel_err={err:.3e}")

    f = np.array([cf.phase_time(fs, r0, t) for t in grid])
    back = np.array([cf.phase_time_inv(fs, r0, x) for x in f])
    rt = float(np.max(np.abs(back - grid) / grid))
    res.check("phase_time_inv round trip (1e-9)", rt <= 1e-9, f"max_rel_err={rt:.3e}")
    res.check("phase_time increasing", bool(np.all(np.diff(f) > 0)))

    rows = [(t, fs.profile(t), fs.zeta(t), fs.dzeta(t), x) for t, x in zip(grid, f)]
    res.tables.append(Table("profile", ["t[time]", "sigma[time^-2]", "zeta[1]", "dzeta[time^-1]",
                                        "f_t_r0[time]"], rows))
    res.tables.append(Table("assumption_a2", ["T[time]", "integral_zeta_m2[time]"],
                            list(zip(a["T_list"], a2["integrals"]))))
    return res


def basis_info(cfg: ExperimentConfig) -> Result:
    res = Result()
    s, b = cfg["sector"], cfg["basis"]
    nu = nu_order(s["n"], s["ell"], s["Lambda"], s["lambda0"])
    basis = build_basis(nu, b["R"], b["K"])
    B = basis.transform
    corrected = float(np.abs(B.T @ B - np.eye(basis.K)).max())
    zj = np.abs(bessel_j(nu, basis.zeros))
    dj = np.abs(bessel_j(nu + 1, basis.zeros))
    zero_err = float(np.max(zj / (dj * basis.zeros)))
    res.check("zeros: |J_nu(j_k)| <= 1e-12 |J_nu'(j_k)| j_k", zero_err <= 1e-12, f"max={zero_err:.3e}")
    res.check("zeros strictly increasing", bool(np.all(np.diff(basis.zeros) > 0)))
    res.check("discrete orthogonality (1e-10)", corrected <= 1e-10,
              f"raw={basis.ortho_residual:.3e} corrected={corrected:.3e}")
    res.check("reduced eigenvalues positive", bool(np.all(basis.eigenvalues > 0)))
    res.tables.append(Table("basis", ["k[1]", "zero[1]", "node[length]", "weight[length]",
                                      "eigenvalue[length^-2]"],
                            [(k + 1, basis.zeros[k], basis.nodes[k], basis.weights[k],
                              basis.eigenvalues[k]) for k in range(basis.K)]))
    res.tables.append(Table("basis_summary", ["nu[1]", "R[length]", "K[1]", "raw_residual[1]",
                                              "corrected_residual[1]"],
                            [(nu, basis.R, basis.K, basis.ortho_residual, corrected)]))
    return res


def evolve(cfg: ExperimentConfig) -> Result:
    res = Result()
    fs = fundamental(cfg)
    b, p, e, s = cfg["basis"], cfg["packet"], cfg["evolve"], cfg["sector"]
    plan = _plan(cfg, fs, b["R"], b["K"])
    u0 = _packet(plan, p["rc"], p["w"], p["k"])
    grid = pr.FDGrid(e["oracle_M"], b["R"])
    v = pr.spectral_to_fd(u0, grid)
    t_prev = e["s"]
    rows = []
    states = pr.trajectory(plan, e["s"], e["times"], u0)
    for t, u in zip(e["times"], states):
        v = pr.cn_oracle(fs.profile, s["Lambda"], s["n"], s["ell"], grid, t_prev, t,
                         e["oracle_dt"], v, s["lambda0"])
        t_prev = t
        disc = pr.relative_l2(v, pr.spectral_to_fd(u, grid))
        rows.append((t, u.norm(), boundary_mass(u), disc))
    arr = np.array(rows)
    res.check("unitarity |norm - 1| <= 1e-8", np.max(np.abs(arr[:, 1] - 1)) <= 1e-8,
              f"max={np.max(np.abs(arr[:, 1] - 1)):.3e}")
    res.check(f"boundary mass <= {BOUNDARY_TOL:g}", np.max(arr[:, 2]) <= BOUNDARY_TOL,
              f"max={np.max(arr[:, 2]):.3e}")
    res.check("discrepancy vs Crank-Nicolson <= 1e-3", np.max(arr[:, 3]) <= 1e-3,
              f"max={np.max(arr[:, 3]):.3e}")
    res.tables.append(Table("evolve", ["t[time]", "norm[1]", "boundary_mass[1]",
                                       "discrepancy_vs_oracle[1]"], rows))
    return res


def compare_oracle(cfg: ExperimentConfig) -> Result:
    res = Result()
    fs = fundamental(cfg)
    b, p, o, s = cfg["basis"], cfg["packet"], cfg["oracle"], cfg["sector"]
    plan = _plan(cfg, fs, b["R"], b["K"])
    u0 = _packet(plan, p["rc"], p["w"], p["k"])
    ref = pr.factorized_U(plan, o["s"], o["t"], u0)
    grid = pr.FDGrid(o["M"], b["R"])
    v0 = pr.spectral_to_fd(u0, grid)
    target = pr.spectral_to_fd(ref, grid)
    rows, prev = [], None
    for dt in o["dt"]:
        v = pr.cn_oracle(fs.profile, s["Lambda"], s["n"], s["ell"], grid, o["s"], o["t"], dt, v0,
                         s["lambda0"])
        d = pr.relative_l2(v, target)
        if prev is None:
            rows.append((dt, d, math.nan))
        else:
            shrink = prev[1] / d
            expected = (prev[0] / dt) ** 2
            rows.append((dt, d, shrink))
            res.check(f"dt {prev[0]:g} -> {dt:g}: discrepancy shrinks by {expected:.3g} (+-20%)",
                      0.8 <= shrink / expected <= 1.2, f"shrink={shrink:.4f}")
        prev = (dt, d)
    res.tables.append(Table("compare_oracle", ["dt[time]", "discrepancy[1]", "shrink_factor[1]"], rows))
    return res


def _waveop_setup(cfg):
    fs = fundamental(cfg)
    w = cfg["waveop"]
    plan = _plan(cfg, fs, w["R"], w["K"])
    plan0 = _plan(cfg, fs, w["R"], w["K"], Lambda=0.0)
    return plan, plan0, w


def waveop(cfg: ExperimentConfig) -> Result:
    res = Result()
    plan, plan0, w = _waveop_setup(cfg)
    phi = _packet(plan, w["rc"], w["w"], w["k"])
    rep = sc.cauchy_tails(plan, plan0, phi, w["taus"])
    taus = rep.tau_grid
    ctrl_phi = _packet(plan0, w["rc"], w["w"], w["k"])
    ctrl = sc.cauchy_tails(plan0, plan0, ctrl_phi, taus)
    psi = _packet(plan0, w["rc"], w["w"], w["k"])
    rt = sc.completeness_roundtrip(plan, plan0, psi, float(taus[-1]))
    bm = boundary_mass(pr.reduced_propagate(plan, phi, float(taus[-1])))
    res.check("Cauchy tails strictly decreasing", rep.strictly_decreasing,
              " ".join(f"{x:.4e}" for x in rep.cauchy_norms))
    res.check("last/first tail <= 0.1 (engineering threshold)", rep.decay_ratio <= sc.TAIL_DECAY,
              f"ratio={rep.decay_ratio:.4f}")
    res.check("Lambda = 0 control tails <= 1e-8", np.max(ctrl.cauchy_norms) <= 1e-8,
              f"max={np.max(ctrl.cauchy_norms):.3e}")
    res.check("completeness round trip <= 1e-2", rt <= 1e-2, f"defect={rt:.3e}")
    res.check("isometry of W(tau) (1e-7)", np.max(rep.isometry_defects) <= 1e-7,
              f"max={np.max(rep.isometry_defects):.3e}")
    res.check(f"boundary mass at tau={taus[-1]:g} <= {BOUNDARY_TOL:g}", bm <= BOUNDARY_TOL, f"{bm:.3e}")
    rows = [(a, b, c) for a, b, c in zip(taus[:-1], taus[1:], rep.cauchy_norms)]
    res.tables.append(Table("waveop", ["tau[time]", "tau_next[time]", "cauchy_norm[1]"], rows))
    return res


def smoothing(cfg: ExperimentConfig) -> Result:
    res = Result()
    plan, _, w = _waveop_setup(cfg)
    sm = cfg["smoothing"]
    phi = _packet(plan, w["rc"], w["w"], w["k"])
    n2 = phi.norm() ** 2
    vals = [sc.smoothing_integral(plan, phi, T, sm["dt"]) for T in sm["T"]]
    rows = [(T, v, v / n2) for T, v in zip(sm["T"], vals)]
    res.check("integral nondecreasing in T", bool(np.all(np.diff(vals) >= 0)))
    if len(vals) >= 2:
        ch = abs(vals[-1] - vals[-2]) / vals[-2]
        res.check(f"saturation T={sm['T'][-2]:g} -> {sm['T'][-1]:g} (<= 5%)", ch <= 0.05,
                  f"change={ch:.4%}")
    dbl = sc.smoothing_integral(plan, phi.with_coeffs(2 * phi.coeffs), sm["T"][-1], sm["dt"])
    hom = abs(dbl - 4 * vals[-1]) / (4 * vals[-1])
    res.check("quadratic homogeneity (1e-12)", hom <= 1e-12, f"rel={hom:.3e}")
    res.tables.append(Table("smoothing", ["T[time]", "integral[time length^-2]",
                                          "ratio_to_norm_sq[time length^-2]"], rows))
    return res


def strichartz(cfg: ExperimentConfig) -> Result:
    res = Result()
    fs = fundamental(cfg)
    c, p, n = cfg["strichartz"], cfg["packet"], cfg["sector"]["n"]
    plan = _plan(cfg, fs, c["R"], c["K"])
    phi = _packet(plan, p["rc"], p["w"], p["k"])
    pairs = st.pair_family(n, c["pairs"])
    Ts = c["T"]
    Q = st.quotient_table(plan, [phi], pairs, Ts, c["per_octave"])[:, 0, :]
    rows = []
    for pair, qs in zip(pairs, Q):
        for i, T in enumerate(Ts):
            rows.append((pair.q, pair.r, T, qs[i], qs[i] / qs[i - 1] if i else math.nan))
    l2 = float(np.max(np.abs(Q[0] - 1)))
    res.check("(inf, 2) quotient = 1 (1e-8)", l2 <= 1e-8, f"max|Q-1|={l2:.3e}")
    if len(Ts) >= 2:
        drift = abs(Q[-1, -1] / Q[-1, -2] - 1)
        res.check(f"endpoint quotient drift T={Ts[-2]:g} -> {Ts[-1]:g} (<= 10%)", drift <= 0.10,
                  f"drift={drift:.4%}")
    ident = max(max(abs(pr_.scaling_exponent() - 2) for pr_ in pairs if math.isfinite(pr_.q)),
                max(abs(pr_.dual_identity()) for pr_ in pairs))
    res.check("exponent identities (1e-12)", ident <= 1e-12, f"max={ident:.3e}")
    cov = st.change_of_variables_check(fs, plan, phi, pairs[-1], Ts[-1])
    res.check("change of variables (1e-6)", cov <= 1e-6, f"rel={cov:.3e}")
    lb = st.quotient_lower_bound(plan, pairs[-1], Ts[-1], cfg.seed, c["sup_count"])
    res.tables.append(Table("strichartz", ["q[1]", "r[1]", "T[time]", "quotient[1]",
                                           "saturation_ratio[1]"], rows))
    res.tables.append(Table("strichartz_sup", ["q[1]", "r[1]", "T[time]", "members[1]",
                                               "lower_bound[1]"],
                            [(pairs[-1].q, pairs[-1].r, Ts[-1], c["sup_count"], lb)]))
    return res


def nls_run(cfg: ExperimentConfig) -> Result:
    res = Result()
    fs = fundamental(cfg)
    c, p, n = cfg["nls"], cfg["packet"], cfg["sector"]["n"]
    plan = _plan(cfg, fs, c["R"], c["K"])
    u0 = _packet(plan, p["rc"], p["w"], p["k"])
    ncfg = nl.NLSConfig(c["lambda_nl"], c["theta"], c["s"], c["T"], c["dt"], n)
    traj = nl.nls_solve(plan, fs, u0, ncfg, samples=c["samples"])
    ep = st.endpoint(n)
    norms = np.array([st.lr_norm(u, ep.r, n) for u in traj.states])
    w = traj.time_weights
    partial = [math.nan]
    for m in range(1, len(traj.times)):
        d = np.diff(traj.times[: m + 1])
        ww = np.zeros(m + 1)
        ww[:-1] += d / 2
        ww[1:] += d / 2
        partial.append(float(np.sum(ww * norms[: m + 1] ** 2) ** 0.5))
    full = float(np.sum(w * norms**2) ** 0.5)
    res.check("mass drift <= 1e-8", traj.mass_drift <= 1e-8, f"drift={traj.mass_drift:.3e}")
    res.check("endpoint mixed norm finite", math.isfinite(full), f"value={full:.6g}")
    m2 = nl.mixed_norm_of_solution(traj, st.AdmissiblePair(math.inf, 2.0, n))
    res.check("(inf, 2) mixed norm = initial mass (1e-8)", abs(m2 - u0.norm()) <= 1e-8,
              f"value={m2:.12f}")
    res.check("self-convergence dt vs dt/2 reported", math.isfinite(traj.self_convergence),
              f"||u_dt - u_dt/2||={traj.self_convergence:.3e}")
    rows = [(t, m, l, q) for t, m, l, q in zip(traj.times, traj.masses, traj.linf, partial)]
    res.tables.append(Table("nls", ["t[time]", "mass[1]", "linf_proxy[length^-n/2]",
                                    "mixed_norm_partial[1]"], rows))
    return res


EXPERIMENTS = {
    "check-assumptions": check_assumptions,
    "basis-info": basis_info,
    "evolve": evolve,
    "compare-oracle": compare_oracle,
    "waveop": waveop,
    "smoothing": smoothing,
    "strichartz": strichartz,
    "nls": nls_run,
}
