"""Admissible exponents, mixed L^q_t L^r_x norms and Strichartz quotient experiments."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import coeffs as cf
from .packets import shell_family
from .propagators import (PropagatorPlan, apply_J, apply_J_star, factorized_U,
                          reduced_propagate, trajectory, trajectory_coeffs)
from .spectral import WaveFunction, lr_norm, lr_norms

INF = math.inf
DIRECT_DUHAMEL_LIMIT = 200


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def conjugate(p: float) -> float:
    """Hoelder conjugate p' with 1/p + 1/p' = 1."""
    if p == 1:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def is_admissible(q: float, r: float, n: int) -> bool:
    if q < 2 or r < 2:
        return False
    if n == 2 and q == 2 and math.isinf(r):
        return False   # excluded endpoint
    return abs(_inv(q) + n * _inv(r) / 2.0 - n / 4.0) <= 1e-12


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float
    n: int

    def __post_init__(self):
        if not is_admissible(self.q, self.r, self.n):
            raise ValueError(f"(q, r) = ({self.q}, {self.r}) is not admissible in n={self.n}")

    @property
    def dual(self) -> tuple[float, float]:
        return conjugate(self.q), conjugate(self.r)

    def scaling_exponent(self) -> float:
        """q n (1/2 - 1/r); equals 2 for admissible pairs with finite q."""
        return self.q * self.n * (0.5 - _inv(self.r))

    def dual_identity(self) -> float:
        """2 q' - 2 + q' n (1/2 - 1/r') evaluated with the conjugates of this pair (zero)."""
        qd, rd = self.dual
        return 2.0 * qd - 2.0 + qd * self.n * (0.5 - _inv(rd))


def endpoint(n: int) -> AdmissiblePair:
    return AdmissiblePair(2.0, 2.0 * n / (n - 2.0), n)


def pair_family(n: int, count: int) -> list[AdmissiblePair]:
    """``count`` pairs with 1/q evenly spaced in [0, 1/2]; both endpoints included."""
    if count < 2:
        raise ValueError("count must be >= 2")
    if n < 3:
        raise ValueError("pair_family is provided for n >= 3")
    out = []
    for a in np.linspace(0.0, 0.5, count):
        if a == 0:
            out.append(AdmissiblePair(INF, 2.0, n))
        elif a == 0.5:
            out.append(endpoint(n))
        else:
            out.append(AdmissiblePair(1.0 / a, 2.0 * n / (n - 4.0 * a), n))
    return out


def log_time_grid(r0: float, T: float, per_octave: int = 14) -> tuple[np.ndarray, np.ndarray]:
    """Geometric grid r0 * 2^(m/per_octave) ending exactly at T, with trapezoid weights in log t."""
    if not T > r0 > 0:
        raise ValueError("need T > r0 > 0")
    m = max(1, int(math.ceil(per_octave * math.log2(T / r0) - 1e-9)))
    s = np.linspace(0.0, math.log(T / r0), m + 1)
    t = r0 * np.exp(s)
    t[-1] = T
    ds = s[1] - s[0]
    w = np.full(m + 1, ds)
    w[0] = w[-1] = ds / 2.0
    return t, w * t


def mixed_norm(trajectory_states, pair: AdmissiblePair | tuple, n: int, time_weights) -> float:
    """(sum_m w_m ||u(t_m)||_r^q)^(1/q); the max over samples when q is infinite."""
    q, r = (pair.q, pair.r) if isinstance(pair, AdmissiblePair) else pair
    w = np.asarray(time_weights, dtype=float)
    if len(trajectory_states) != w.size:
        raise ValueError("one weight per trajectory sample is required")
    norms = np.array([lr_norm(u, r, n) for u in trajectory_states])
    return _combine(norms, q, w)


def _combine(norms: np.ndarray, q: float, w: np.ndarray) -> float:
    if math.isinf(q):
        return float(norms.max())
    return float(np.sum(w * norms**q) ** (1.0 / q))


def quotient_table(plan: PropagatorPlan, states, pairs, T_list,
                   per_octave: int = 14) -> np.ndarray:
    """Homogeneous quotients ||U(., r0) phi||_{L^q([r0, T]; L^r)} / ||phi||.

    One trajectory per state is shared by all pairs and all T; the result has
    shape (len(pairs), len(states), len(T_list)).  Every T must be a node of
    the geometric grid reaching max(T_list).
    """
    for x in states:
        plan.check(x)
    nrm = np.array([x.norm() for x in states])
    if np.any(nrm == 0):
        raise ValueError("phi = 0 has no quotient")
    if plan.fs.sign < 0:
        raise ValueError("quotients are computed on the positive branch")
    r0 = plan.fs.r0
    T_list = np.atleast_1d(np.asarray(T_list, dtype=float))
    t, _ = log_time_grid(r0, float(T_list.max()), per_octave)
    idx = []
    for T in T_list:
        i = int(np.argmin(np.abs(t - T)))
        if abs(t[i] - T) > 1e-9 * T:
            raise ValueError(f"T={T} is not on the {per_octave}-per-octave grid from r0={r0}")
        idx.append(i)
    C = np.stack([x.coeffs for x in states], axis=1)
    traj = trajectory_coeffs(plan, r0, t, C)
    out = np.empty((len(pairs), len(states), T_list.size))
    cache: dict = {}
    for a, pair in enumerate(pairs):
        if pair.r not in cache:
            if pair.r == 2:
                cache[pair.r] = np.array([np.linalg.norm(c, axis=0) for c in traj])
            else:
                cache[pair.r] = np.array([lr_norms(plan.basis, c, pair.r, pair.n) for c in traj])
        norms = cache[pair.r]
        for b, (T, i) in enumerate(zip(T_list, idx)):
            _, w = log_time_grid(r0, T, per_octave)
            for j in range(len(states)):
                out[a, j, b] = _combine(norms[: i + 1, j], pair.q, w) / nrm[j]
    return out


def homogeneous_quotients(plan: PropagatorPlan, phi: WaveFunction, pair: AdmissiblePair,
                          T_list, per_octave: int = 14) -> np.ndarray:
    """Quotients of one state for several T (see quotient_table)."""
    return quotient_table(plan, [phi], [pair], T_list, per_octave)[0, 0]


def homogeneous_quotient(plan: PropagatorPlan, fs: cf.FundamentalSolution, phi: WaveFunction,
                         pair: AdmissiblePair, T: float, per_octave: int = 14) -> float:
    if fs is not plan.fs:
        raise ValueError("fs must be the plan's fundamental solution")
    return float(homogeneous_quotients(plan, phi, pair, [T], per_octave)[0])


def _duhamel_weights(t: np.ndarray) -> np.ndarray:
    """W[m, j]: trapezoid weight of node j in int_{t_0}^{t_m}, on the log-time grid."""
    s = np.log(t)
    N = t.size
    W = np.zeros((N, N))
    for m in range(1, N):
        ds = np.diff(s[: m + 1])
        W[m, :m] += 0.5 * ds * t[:m]
        W[m, 1: m + 1] += 0.5 * ds * t[1: m + 1]
    return W


def duhamel(plan: PropagatorPlan, times, sources) -> list[WaveFunction]:
    """D(t_m) = int_{t_0}^{t_m} U(t_m, tau) F(tau) d tau by the trapezoid rule in log t.

    Uses U(t, tau) = J(t) e^{-i f(t) H} e^{i f(tau) H} J(tau)^*, so the sum is
    accumulated once in the reduced frame: O(N) propagator applications.
    """
    fs = plan.fs
    t = np.asarray(times, dtype=float)
    if len(sources) != t.size:
        raise ValueError("one source state per time node")
    r0 = t[0]
    f = np.array([cf.phase_time(fs, r0, x) for x in t])
    s = np.log(t)
    G = [reduced_propagate(plan, apply_J_star(fs, tau, F), -fm)
         for tau, F, fm in zip(t, sources, f)]
    acc = np.zeros(plan.basis.K, dtype=complex)
    out = [plan.state(acc.copy())]
    for m in range(1, t.size):
        ds = s[m] - s[m - 1]
        acc = acc + 0.5 * ds * (t[m - 1] * G[m - 1].coeffs + t[m] * G[m].coeffs)
        out.append(apply_J(fs, t[m], reduced_propagate(plan, plan.state(acc), f[m])))
    return out


def duhamel_direct(plan: PropagatorPlan, times, sources) -> list[WaveFunction]:
    """Same sum evaluated term by term with factorized_U; O(N^2), used as a cross-check."""
    t = np.asarray(times, dtype=float)
    if t.size > DIRECT_DUHAMEL_LIMIT:
        warnings.warn(f"direct Duhamel sum over {t.size} nodes costs O(N^2) propagations",
                      RuntimeWarning, stacklevel=2)
    W = _duhamel_weights(t)
    out = []
    for m in range(t.size):
        acc = np.zeros(plan.basis.K, dtype=complex)
        for j in range(m + 1):
            if W[m, j] != 0 and np.any(sources[j].coeffs):
                acc += W[m, j] * factorized_U(plan, t[j], t[m], sources[j]).coeffs
        out.append(plan.state(acc))
    return out


def inhomogeneous_quotient(plan: PropagatorPlan, fs: cf.FundamentalSolution, F, pair: AdmissiblePair,
                           pair_tilde: AdmissiblePair, T: float | None = None, times=None,
                           direct: bool = False) -> float:
    """||Duhamel(F)||_{L^q L^r} / ||F||_{L^{q~'} L^{r~'}} on the grid ``times``.

    ``F`` is a list of states at ``times`` (default: the 14-per-octave grid on [r0, T]).
    """
    if fs is not plan.fs:
        raise ValueError("fs must be the plan's fundamental solution")
    if times is None:
        if T is None:
            raise ValueError("give T or times")
        times, _ = log_time_grid(fs.r0, T)
    t = np.asarray(times, dtype=float)
    w = _duhamel_weights(t)[-1]
    if not any(np.any(x.coeffs) for x in F):
        raise ValueError("F = 0 has no quotient")
    D = (duhamel_direct if direct else duhamel)(plan, t, F)
    num = mixed_norm(D, pair, pair.n, w)
    qd, rd = pair_tilde.dual
    den = _combine(np.array([lr_norm(x, rd, pair.n) for x in F]), qd, w)
    return num / den


def _gauss_legendre(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * x + 0.5 * (b + a)).ravel(), (0.5 * (b - a) * w).ravel()


def change_of_variables_check(fs: cf.FundamentalSolution, plan: PropagatorPlan, phi: WaveFunction,
                              pair: AdmissiblePair, T: float, panels: int = 48,
                              order: int = 10) -> float:
    """Relative gap between the two sides of the substitution a = f(t) in the time integral.

    Left: int_{r0}^T zeta^{-q n (1/2 - 1/r)} ||e^{-i f(t) H} J*(r0) phi||_r^q dt (panels in t).
    Right: int_0^{f(T)} ||e^{-i a H} J*(r0) phi||_r^q da (panels in a).
    """
    if math.isinf(pair.q):
        raise ValueError("q must be finite")
    expo = pair.scaling_exponent()
    if abs(expo - 2.0) > 1e-12:
        raise AssertionError(f"scaling exponent {expo} != 2")
    r0 = fs.r0
    w0 = apply_J_star(fs, r0, phi)

    def g(a):
        return lr_norm(reduced_propagate(plan, w0, a), pair.r, pair.n) ** pair.q

    tn, tw = _gauss_legendre(np.geomspace(r0, T, panels + 1), order)
    left = sum(wi * fs.zeta(ti) ** (-expo) * g(cf.phase_time(fs, r0, ti)) for ti, wi in zip(tn, tw))
    an, aw = _gauss_legendre(np.linspace(0.0, cf.phase_time(fs, r0, T), panels + 1), order)
    right = sum(wi * g(ai) for ai, wi in zip(an, aw))
    return abs(left - right) / abs(right)


def quotient_lower_bound(plan: PropagatorPlan, pair: AdmissiblePair, T: float, seed: int,
                         count: int = 10, **family) -> float:
    """Largest homogeneous quotient over a seeded shell family: a lower bound for the constant."""
    fam = shell_family(plan.basis, plan.n, plan.ell, plan.Lambda, count, seed,
                       name="strichartz-sup", lambda0=plan.lambda0, **family)
    return float(quotient_table(plan, fam, [pair], [T]).max())


def seeded_source(plan: PropagatorPlan, times, seed: int, name: str = "source") -> list[WaveFunction]:
    """F(tau) = a(tau) U(tau, r0) psi with a seeded shell psi and a decaying, oscillating a."""
    from .packets import rng_for
    t = np.asarray(times, dtype=float)
    psi = shell_family(plan.basis, plan.n, plan.ell, plan.Lambda, 1, seed, name=name,
                       lambda0=plan.lambda0)[0]
    g = rng_for(seed, name + "-amplitude")
    amp, freq, ph = g.uniform(0.2, 0.6), g.uniform(0.5, 2.0), g.uniform(0, 2 * math.pi)
    a = (t / t[0]) ** -2.0 * (1.0 + amp * np.sin(freq * np.log(t) + ph))
    return [u.with_coeffs(ai * u.coeffs) for ai, u in zip(a, trajectory(plan, t[0], t, psi))]
