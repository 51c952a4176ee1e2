"""Strang-split solver for i u_t = H(t) u + lambda |u|^theta u on radial data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coeffs as cf
from .propagators import PropagatorPlan, apply_J, apply_J_star, factorized_U, reduced_propagate
from .spectral import WaveFunction, analyze, radial_weight, synthesize
from .strichartz import AdmissiblePair, _combine

BLOWUP_LINF = 1e6


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class NLSConfig:
    lambda_nl: float
    theta: float
    s: float
    T: float
    dt: float
    n: int = 3
    linear_control: bool = False   # permits lambda_nl == 0 for the linear reference run

    def __post_init__(self):
        if not 1.0 < self.theta < 4.0 / self.n:
            raise ValueError(f"theta={self.theta} outside the mass-subcritical window (1, {4 / self.n:.4g})")
        if self.lambda_nl == 0 and not self.linear_control:
            raise ValueError("lambda_nl must be nonzero")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T > self.s:
            raise ValueError("need s < T")

    @property
    def steps(self) -> int:
        return max(1, int(round((self.T - self.s) / self.dt)))


def _radial_only(u: WaveFunction) -> None:
    if u.ell != 0:
        raise ValueError("the nonlinear flow is implemented for radial (ell = 0) data only")


def _phase_kick(wf: WaveFunction, h: float, lam: float, theta: float, scale: float = 1.0):
    """v -> v exp(-i h lam scale |u|^theta) on the nodes, u the R^n profile; returns (state, max|u|)."""
    b = wf.basis
    v = synthesize(b, wf.coeffs)
    amp = np.abs(v) * radial_weight(b.nodes, wf.n)
    linf = float(amp.max()) if amp.size else 0.0
    if lam == 0 or h == 0:
        return wf, linf
    v = v * np.exp(-1j * h * lam * scale * amp**theta)
    return wf.with_coeffs(analyze(b, v)), linf


def nls_step(plan: PropagatorPlan, fs: cf.FundamentalSolution, u: WaveFunction, t: float,
             dt: float, cfg: NLSConfig) -> WaveFunction:
    """One Strang step in the physical frame: kick(dt/2), U(t+dt, t), kick(dt/2)."""
    _radial_only(u)
    if fs is not plan.fs:
        raise ValueError("fs must be the plan's fundamental solution")
    u, _ = _phase_kick(u, dt / 2, cfg.lambda_nl, cfg.theta)
    u = factorized_U(plan, t, t + dt, u)
    u, _ = _phase_kick(u, dt / 2, cfg.lambda_nl, cfg.theta)
    return u


@dataclass
class NLSTrajectory:
    times: np.ndarray
    states: list
    masses: np.ndarray
    linf: np.ndarray
    mass_drift: float
    self_convergence: float = float("nan")

    @property
    def time_weights(self) -> np.ndarray:
        t = self.times
        if t.size == 1:
            return np.ones(1)
        w = np.zeros(t.size)
        d = np.diff(t)
        w[:-1] += d / 2
        w[1:] += d / 2
        return w


def _reduced_run(plan: PropagatorPlan, u_s: WaveFunction, cfg: NLSConfig, sample_every: int):
    """Strang splitting for w = J(t)^* u, which obeys i w_t = zeta^-2 H w + lambda zeta^{-n theta/2} |w|^theta w.

    Conjugating the physical kick by J(t) only rescales its strength, so
    the dilations are applied once at the start and at sampled times.
    """
    fs = plan.fs
    n, th, lam = u_s.n, cfg.theta, cfg.lambda_nl
    N = cfg.steps
    h = (cfg.T - cfg.s) / N
    times = cfg.s + h * np.arange(N + 1)
    f = np.array([cf.phase_time(fs, cfg.s, t) for t in times])
    zeta = np.asarray(fs.zeta(times))
    scale = zeta ** (-n * th / 2.0)
    w = apply_J_star(fs, cfg.s, u_s)
    samp_t, samp_u, samp_lin = [], [], []
    for m in range(N + 1):
        if m > 0:
            w, _ = _phase_kick(w, h / 2, lam, th, scale[m - 1])
            w = reduced_propagate(plan, w, f[m] - f[m - 1])
            w, lin = _phase_kick(w, h / 2, lam, th, scale[m])
        else:
            _, lin = _phase_kick(w, 0.0, lam, th)
        lin *= zeta[m] ** (-n / 2.0)
        if not math.isfinite(lin) or lin > BLOWUP_LINF:
            raise BlowUpError(f"L^inf proxy {lin:.3e} exceeded {BLOWUP_LINF:g} at t={times[m]:.6g}")
        if m % sample_every == 0 or m == N:
            samp_t.append(times[m])
            samp_u.append(u_s if m == 0 else apply_J(fs, times[m], w))
            samp_lin.append(lin)
    return np.array(samp_t), samp_u, np.array(samp_lin), w


def nls_solve(plan: PropagatorPlan, fs: cf.FundamentalSolution, u_s: WaveFunction, cfg: NLSConfig,
              samples: int = 64, self_convergence: bool = True) -> NLSTrajectory:
    """Iterate Strang steps from s to T; returns about ``samples`` snapshots.

    The self-convergence entry is ||u_dt(T) - u_{dt/2}(T)|| (the second run is
    skipped when ``self_convergence`` is false).
    """
    _radial_only(u_s)
    plan.check(u_s)
    if fs is not plan.fs:
        raise ValueError("fs must be the plan's fundamental solution")
    every = max(1, cfg.steps // max(1, samples))
    t, states, lin, _ = _reduced_run(plan, u_s, cfg, every)
    m0 = u_s.norm()
    masses = np.array([x.norm() for x in states])
    drift = float(np.abs(masses - m0).max() / m0) if m0 > 0 else 0.0
    traj = NLSTrajectory(t, states, masses, lin, drift)
    if self_convergence:
        half = NLSConfig(cfg.lambda_nl, cfg.theta, cfg.s, cfg.T, cfg.dt / 2, cfg.n, cfg.linear_control)
        fine = _reduced_run(plan, u_s, half, 2 * cfg.steps)[1][-1]
        traj.self_convergence = float(np.linalg.norm(fine.coeffs - states[-1].coeffs))
    return traj


def final_state(plan: PropagatorPlan, u_s: WaveFunction, cfg: NLSConfig) -> WaveFunction:
    return _reduced_run(plan, u_s, cfg, cfg.steps)[1][-1]


def strang_order(plan: PropagatorPlan, u_s: WaveFunction, cfg: NLSConfig) -> float:
    """log2 of e(dt)/e(dt/2) with e(h) = ||u_h(T) - u_{h/2}(T)|| (three resolutions)."""
    runs = []
    for k in range(3):
        c = NLSConfig(cfg.lambda_nl, cfg.theta, cfg.s, cfg.T, cfg.dt / 2**k, cfg.n, cfg.linear_control)
        runs.append(final_state(plan, u_s, c).coeffs)
    e1 = np.linalg.norm(runs[0] - runs[1])
    e2 = np.linalg.norm(runs[1] - runs[2])
    return float(math.log2(e1 / e2))


def mixed_norm_of_solution(traj: NLSTrajectory, pair: AdmissiblePair, n: int | None = None) -> float:
    from .spectral import lr_norm
    n = pair.n if n is None else n
    norms = np.array([lr_norm(u, pair.r, n) for u in traj.states])
    return _combine(norms, pair.q, traj.time_weights)
