"""Time-dependent harmonic coefficient sigma(t) and its fundamental solution zeta(t).

The engine only ever needs three things from this module: sigma(t) itself,
a positive solution zeta of  zeta'' + sigma zeta = 0  on |t| >= r0, and the
phase-time map  f(t; s) = int_s^t zeta^-2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

POWER_LAW = "power_law"
CONSTANT = "constant"
TABULATED = "tabulated"
KINDS = (POWER_LAW, CONSTANT, TABULATED)

ANALYTIC_POWER = "analytic_power"
NUMERIC = "numeric"

TOL_ODE = 1e-8
PHASE_TOL = 1e-10


class AssumptionError(ValueError):
    """Raised when sigma or zeta leaves the admissible class."""


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    kind: str
    sigma1: float
    r0: float
    sigma_interior: float
    table_t: np.ndarray | None = field(default=None, repr=False)
    table_sigma: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def constant(cls, value: float, r0: float = 1.0) -> "CoefficientProfile":
        """sigma(t) == value for all t (harmonic oscillator with omega^2 = value)."""
        if value <= 0 or r0 <= 0:
            raise AssumptionError("constant profile needs value > 0 and r0 > 0")
        return cls(CONSTANT, value * r0 * r0, r0, value)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        if self.kind == CONSTANT:
            out = np.full_like(a, self.sigma_interior)
        elif self.kind == POWER_LAW:
            with np.errstate(divide="ignore"):
                out = np.where(a >= self.r0, self.sigma1 / np.maximum(a, self.r0) ** 2,
                               self.sigma_interior)
        else:
            spline = _table_spline(self)
            out = np.where(a >= self.r0, spline(np.clip(a, self.table_t[0], self.table_t[-1])),
                           self.sigma_interior)
        return out if out.ndim else float(out)


def _table_spline(profile: CoefficientProfile) -> CubicSpline:
    sp = profile.__dict__.get("_sp")
    if sp is None:
        sp = CubicSpline(profile.table_t, profile.table_sigma)
        object.__setattr__(profile, "_sp", sp)
    return sp


def make_profile(kind: str, sigma1: float, r0: float,
                 table: tuple[Sequence[float], Sequence[float]] | None = None) -> CoefficientProfile:
    """Build sigma(t).  power_law: sigma1 t^-2 outside (-r0, r0), sigma1/r0^2 inside.

    ``constant`` gives sigma == sigma1/r0^2 everywhere; ``tabulated`` takes
    ``table=(t, sigma)`` sampled on t >= r0 (even extension to t < 0).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown profile kind {kind!r}")
    if not sigma1 > 0:
        raise AssumptionError(f"sigma1 must be > 0, got {sigma1}")
    if sigma1 > 0.25:
        raise AssumptionError(f"sigma1 must be <= 1/4, got {sigma1}")
    if not r0 > 0:
        raise AssumptionError(f"r0 must be > 0, got {r0}")
    interior = sigma1 / r0**2
    if kind != TABULATED:
        return CoefficientProfile(kind, float(sigma1), float(r0), interior)
    if table is None:
        raise ValueError("tabulated profile needs table=(t, sigma)")
    tt, ss = (np.asarray(x, dtype=float) for x in table)
    if tt.ndim != 1 or tt.shape != ss.shape or tt.size < 4:
        raise ValueError("table must be two equal-length 1-D arrays with >= 4 samples")
    if np.any(np.diff(tt) <= 0) or tt[0] > r0:
        raise ValueError("table times must increase and start at or below r0")
    if np.any(ss <= 0):
        raise AssumptionError("tabulated sigma must be positive")
    return CoefficientProfile(kind, float(sigma1), float(r0), interior, tt, ss)


def check_assumption_a1(profile: CoefficientProfile, t_grid) -> dict:
    """Brute-force sup over grid pairs t > s of |(sigma(t)-sigma(s)) / (sigma(s)(t-s))|."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("t_grid needs at least two points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    sig = np.asarray(profile(t), dtype=float)
    if np.any(sig <= 0):
        raise AssumptionError("sigma(t) <= 0 on the grid")
    best = 0.0
    # row by row keeps memory at O(N) for long grids
    for i in range(t.size - 1):
        ratio = np.abs((sig[i + 1:] - sig[i]) / (sig[i] * (t[i + 1:] - t[i])))
        best = max(best, float(ratio.max()))
    return {"max_ratio": best, "pass": bool(np.isfinite(best))}


def lambda_exponent(sigma1: float) -> float:
    if not 0 < sigma1 <= 0.25:
        raise AssumptionError(f"sigma1 must lie in (0, 1/4], got {sigma1}")
    # (1 - sqrt(1-4s))/2 rewritten to avoid cancellation for small sigma1
    return 2.0 * sigma1 / (1.0 + math.sqrt(1.0 - 4.0 * sigma1))


@dataclass(frozen=True, eq=False)
class FundamentalSolution:
    """A positive solution zeta of zeta'' + sigma zeta = 0 on |t| >= r0.

    ``analytic_power`` is c|t|^lambda.  ``numeric`` holds RK4 samples on one
    side of the origin (``sign``) and interpolates with a cubic Hermite spline.
    """
    profile: CoefficientProfile
    branch: str
    lam: float
    c: float
    t: np.ndarray | None = field(default=None, repr=False)
    z: np.ndarray | None = field(default=None, repr=False)
    dz: np.ndarray | None = field(default=None, repr=False)
    sign: int = 1

    @property
    def r0(self) -> float:
        return self.profile.r0

    @property
    def t_max(self) -> float:
        return math.inf if self.branch == ANALYTIC_POWER else float(abs(self.t[-1]))

    def zeta(self, t):
        t = np.asarray(t, dtype=float)
        if self.branch == ANALYTIC_POWER:
            out = self.c * np.abs(t) ** self.lam
        else:
            out = self._spline()(self._local(t))
        return out if out.ndim else float(out)

    def dzeta(self, t):
        t = np.asarray(t, dtype=float)
        if self.branch == ANALYTIC_POWER:
            out = np.sign(t) * self.c * self.lam * np.abs(t) ** (self.lam - 1.0)
        else:
            out = self.sign * self._spline()(self._local(t), 1)
        return out if out.ndim else float(out)

    def _local(self, t):
        a = self.sign * np.asarray(t, dtype=float)
        if np.any(a < self.r0 - 1e-12) or np.any(a > self.t_max + 1e-12):
            raise ValueError(f"t outside the sampled range [{self.r0}, {self.t_max}] "
                             f"on the {'+' if self.sign > 0 else '-'} side")
        return a

    def _spline(self) -> CubicHermiteSpline:
        # samples live in |t|; dz is d zeta / d|t|
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = CubicHermiteSpline(self.t, self.z, self.dz)
            object.__setattr__(self, "_sp", sp)
            object.__setattr__(self, "_cum", _cumulative_simpson(self.t, self.z, sp))
        return sp


def power_solution(profile: CoefficientProfile, c: float | None = None,
                   lam: float | None = None) -> FundamentalSolution:
    """Analytic branch c|t|^lambda; c defaults to r0^-lambda so zeta(r0) = 1.

    ``lam`` may be passed explicitly (lam=0 gives the degenerate zeta == c
    branch used for sigma == 0 checks).
    """
    if lam is None:
        lam = lambda_exponent(profile.sigma1)
    if c is None:
        c = profile.r0 ** (-lam)
    if c == 0:
        raise AssumptionError("c must be nonzero")
    return FundamentalSolution(profile, ANALYTIC_POWER, float(lam), float(c))


def _rk4(sigma, t0, y0, v0, h, nsteps):
    t = t0 + h * np.arange(nsteps + 1)
    y = np.empty(nsteps + 1)
    v = np.empty(nsteps + 1)
    y[0], v[0] = y0, v0
    for i in range(nsteps):
        ti, yi, vi = t[i], y[i], v[i]
        k1y, k1v = vi, -sigma(ti) * yi
        k2y, k2v = vi + 0.5 * h * k1v, -sigma(ti + 0.5 * h) * (yi + 0.5 * h * k1y)
        k3y, k3v = vi + 0.5 * h * k2v, -sigma(ti + 0.5 * h) * (yi + 0.5 * h * k2y)
        k4y, k4v = vi + h * k3v, -sigma(ti + h) * (yi + h * k3y)
        y[i + 1] = yi + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6
        v[i + 1] = vi + h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6
    return t, y, v


def ode_residual(fs: FundamentalSolution) -> np.ndarray:
    """|zeta'' + sigma zeta| / max(1, |zeta|) on interior samples.

    zeta'' comes from a five-point derivative of the stored zeta' samples.
    """
    if fs.branch != NUMERIC or fs.t.size < 5:
        return np.zeros(0)
    h = fs.t[1] - fs.t[0]
    d = fs.dz
    zpp = (-d[4:] + 8 * d[3:-1] - 8 * d[1:-3] + d[:-4]) / (12 * h)
    z = fs.z[2:-2]
    sig = np.asarray(fs.profile(fs.t[2:-2] * fs.sign))
    return np.abs(zpp + sig * z) / np.maximum(1.0, np.abs(z))


def solve_zeta(profile: CoefficientProfile, t_span: tuple[float, float], dt: float,
               c: float | None = None, tol: float = TOL_ODE) -> FundamentalSolution:
    """Integrate zeta'' + sigma zeta = 0 with classical RK4 from |t| = r0.

    Initial data match c|t|^lambda at r0, lambda taken from profile.sigma1.
    Raises if the discrete residual exceeds ``tol``.
    """
    a, b = sorted(float(x) for x in t_span)
    r0 = profile.r0
    if not dt > 0:
        raise ValueError("dt must be positive")
    if a >= r0 - 1e-14:
        sign = 1
    elif b <= -r0 + 1e-14:
        sign = -1
    else:
        raise ValueError(f"t_span {t_span} must lie in [r0, inf) or (-inf, -r0]")
    far = max(abs(a), abs(b))
    lam = lambda_exponent(profile.sigma1)
    if c is None:
        c = r0 ** (-lam)
    # at least one step so the interpolant is defined; zeta(r0) is the initial value
    nsteps = max(1, int(math.ceil((far - r0) / dt - 1e-9)))
    h = (far - r0) / nsteps if far > r0 else dt

    def sigma_abs(x):
        return float(profile(sign * x))

    tt, z, dz = _rk4(sigma_abs, r0, c * r0**lam, c * lam * r0 ** (lam - 1.0), h, nsteps)
    fs = FundamentalSolution(profile, NUMERIC, lam, float(c), tt, z, dz, sign)
    res = ode_residual(fs)
    if res.size and res.max() > tol:
        i = int(res.argmax())
        raise ValueError(f"ODE residual {res.max():.3e} exceeds {tol:.1e} at "
                         f"t={sign * tt[i + 2]:.6g}; reduce dt (currently {dt})")
    return fs


def _cumulative_simpson(t, z, sp) -> np.ndarray:
    mid = 0.5 * (t[1:] + t[:-1])
    seg = (t[1:] - t[:-1]) * (z[:-1] ** -2.0 + 4 * sp(mid) ** -2.0 + z[1:] ** -2.0) / 6.0
    return np.concatenate([[0.0], np.cumsum(seg)])


def _numeric_primitive(fs: FundamentalSolution, a: float) -> float:
    """int_{r0}^{a} zeta^-2 along the numeric branch, a = |t|."""
    sp = fs._spline()
    cum = fs.__dict__["_cum"]
    i = int(np.clip(np.searchsorted(fs.t, a, side="right") - 1, 0, fs.t.size - 2))
    lo = fs.t[i]
    # composite Simpson on the partial cell (two panels)
    g = sp(np.linspace(lo, a, 5)) ** -2.0
    part = (a - lo) * (g[0] + 4 * g[1] + 2 * g[2] + 4 * g[3] + g[4]) / 12.0
    return float(cum[i] + part)


def _check_side(fs: FundamentalSolution, *times: float) -> int:
    r0 = fs.r0
    signs = set()
    for x in times:
        if abs(x) < r0 - 1e-12:
            raise ValueError(f"|t| = {abs(x)} < r0 = {r0}: the factorization does not hold "
                             "inside (-r0, r0)")
        signs.add(1 if x > 0 else -1)
    if len(signs) > 1:
        raise ValueError("times straddle (-r0, r0); phase time is only defined on one side")
    return signs.pop()


def phase_time(fs: FundamentalSolution, s: float, t: float) -> float:
    """f(t; s) = int_s^t zeta(tau)^-2 dtau (signed)."""
    sign = _check_side(fs, s, t)
    if s == t:
        return 0.0
    if fs.branch == ANALYTIC_POWER:
        p = 1.0 - 2.0 * fs.lam
        if abs(p) < 1e-15:
            val = math.log(abs(t) / abs(s))
        else:
            val = (abs(t) ** p - abs(s) ** p) / p
        return sign * val / fs.c**2
    if sign != fs.sign:
        raise ValueError("numeric branch was integrated on the other side of the origin")
    fs._local(s), fs._local(t)
    return sign * (_numeric_primitive(fs, abs(t)) - _numeric_primitive(fs, abs(s)))


def phase_time_inv(fs: FundamentalSolution, s: float, a: float, rtol: float = 1e-13) -> float:
    """Solve |f(t; s)| = a for t on the far side of s (|t| >= |s|).

    Bracketing bisection, then Newton polish with f' = zeta^-2 > 0.
    """
    sign = _check_side(fs, s)
    if a < 0:
        raise ValueError("a must be >= 0")
    if a == 0:
        return float(s)
    s_abs = abs(s)

    def g(x):  # x = |t|
        return abs(phase_time(fs, s, sign * x)) - a

    lo, hi = s_abs, max(2.0 * s_abs, s_abs + 1.0)
    while g(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > fs.t_max:
            hi = fs.t_max
            if g(hi) < 0:
                raise ValueError(f"phase time {a} not reached before t_max = {fs.t_max}")
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * hi:
            break
    x = 0.5 * (lo + hi)
    for _ in range(8):
        step = g(x) * float(fs.zeta(sign * x)) ** 2
        x_new = min(max(x - step, lo), hi)
        if abs(x_new - x) <= rtol * x:
            x = x_new
            break
        x = x_new
    return sign * x


def check_assumption_a2(fs: FundamentalSolution, T_list) -> dict:
    """Integrals int_{r0}^T zeta^-2 and a heuristic divergence flag.

    The flag is a growth test, not a proof: the last increment must reach at
    least half of what a fit  I ~ a + b log T  to the earlier points predicts.
    """
    T = np.asarray(T_list, dtype=float)
    r0 = fs.r0
    if T.ndim != 1 or T.size < 1:
        raise ValueError("T_list must be a non-empty sequence")
    if np.any(np.diff(T) <= 0):
        raise ValueError("T_list must be increasing")
    if np.any(T < r0):
        raise ValueError("every T must be >= r0")
    sgn = fs.sign if fs.branch == NUMERIC else 1
    probe = np.geomspace(r0, T[-1], 2048) if T[-1] > r0 else np.array([r0])
    if fs.branch == NUMERIC:
        probe = np.concatenate([probe, fs.t[fs.t <= T[-1]]])
    zv = np.asarray(fs.zeta(sgn * probe))
    if np.any(zv <= 0):
        bad = probe[np.argmax(zv <= 0)]
        raise AssumptionError(f"zeta <= 0 near |t| = {bad:.6g}; Assumption 2 fails")
    ints = [abs(phase_time(fs, sgn * r0, sgn * x)) for x in T]
    diverging = False
    if len(ints) >= 3:
        lt = np.log(T[:-1])
        b = np.polyfit(lt, ints[:-1], 1)[0] if len(lt) > 2 else (ints[1] - ints[0]) / (lt[1] - lt[0])
        predicted = b * (math.log(T[-1]) - math.log(T[-2]))
        diverging = bool(predicted > 0 and ints[-1] - ints[-2] >= 0.5 * predicted)
    return {"integrals": ints, "diverging": diverging}
