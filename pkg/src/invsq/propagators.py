"""Propagators for H(t) = p^2/2 + sigma(t) x^2/2 - Lambda |x|^-2 on one angular sector.

For |t|, |s| >= r0 on one side of the origin the evolution factorizes as

    U(t, s) = J(t) exp(-i f(t;s) H) J(s)^*,   J(t) = gauge(zeta'/(2 zeta)) o dilate(zeta),

with H the time-independent operator -Delta/2 - Lambda|x|^-2, which is diagonal
in the Fourier-Bessel basis.  A Crank-Nicolson finite-difference solver of the
original time-dependent equation serves as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

from . import coeffs as cf
from .spectral import (DEFAULT_LAMBDA0, SectorBasis, WaveFunction, analyze, nu_order,
                       synthesize)

LEAK_TOL = 1e-6


class LeakageError(RuntimeError):
    """A dilation pushed measurable mass across the Dirichlet wall."""

    def __init__(self, leakage: float, zeta: float):
        super().__init__(f"dilation by zeta={zeta:.6g} changed the norm by a relative "
                         f"{leakage:.3e} (> {LEAK_TOL:g}); enlarge R or K")
        self.leakage = leakage
        self.zeta = zeta


class RegionError(ValueError):
    """Times outside the region where the factorization holds."""


@dataclass(frozen=True, eq=False)
class PropagatorPlan:
    basis: SectorBasis
    fs: cf.FundamentalSolution
    n: int
    ell: int
    Lambda: float
    lambda0: float = DEFAULT_LAMBDA0

    def __post_init__(self):
        nu = nu_order(self.n, self.ell, self.Lambda, self.lambda0)
        if abs(nu - self.basis.nu) > 1e-12:
            raise ValueError(f"plan basis has nu={self.basis.nu}, sector needs {nu}")

    def phases(self, tau: float) -> np.ndarray:
        return np.exp(-1j * tau * self.basis.eigenvalues)

    def check(self, wf: WaveFunction) -> None:
        if wf.basis is not self.basis or wf.n != self.n or wf.ell != self.ell \
                or wf.Lambda != self.Lambda:
            raise ValueError("state does not belong to this plan's sector/basis")

    def state(self, coeffs) -> WaveFunction:
        return WaveFunction(self.n, self.ell, self.Lambda, self.basis, coeffs, self.lambda0)


def make_plan(fs: cf.FundamentalSolution, n: int, ell: int, Lambda: float, R: float, K: int,
              lambda0: float = DEFAULT_LAMBDA0) -> PropagatorPlan:
    from .spectral import build_basis
    return PropagatorPlan(build_basis(nu_order(n, ell, Lambda, lambda0), R, K), fs, n, ell,
                          Lambda, lambda0)


def reduced_propagate(plan: PropagatorPlan, wf: WaveFunction, tau: float) -> WaveFunction:
    """exp(-i tau H) applied mode by mode."""
    plan.check(wf)
    if tau == 0:
        return wf
    return wf.with_coeffs(wf.coeffs * plan.phases(float(tau)))


def _gauge(basis: SectorBasis, beta: float, C: np.ndarray) -> np.ndarray:
    if beta == 0:
        return C
    ph = np.exp(1j * beta * basis.nodes**2)
    return analyze(basis, synthesize(basis, C) * (ph[:, None] if C.ndim == 2 else ph))


def gauge_multiply(wf: WaveFunction, beta: float) -> WaveFunction:
    """Multiply by exp(i beta r^2) on the nodes and re-analyze."""
    if beta == 0:
        return wf
    return wf.with_coeffs(_gauge(wf.basis, beta, wf.coeffs))


@lru_cache(maxsize=32)
def _dilation_matrix(basis: SectorBasis, zeta: float) -> np.ndarray:
    pts = basis.nodes / zeta
    inside = pts < basis.R
    E = np.zeros((basis.K, basis.K))
    E[inside] = basis.eval_matrix(pts[inside])
    return analyze(basis, E / np.sqrt(zeta))


def _dilate(basis: SectorBasis, zeta: float, C: np.ndarray, check: bool = True) -> np.ndarray:
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    if zeta == 1.0:
        return C
    out = _dilation_matrix(basis, float(zeta)) @ C
    if check:
        n0 = np.sum(np.abs(C) ** 2, axis=0)
        n1 = np.sum(np.abs(out) ** 2, axis=0)
        nz = n0 > 0
        if np.any(nz):
            leak = float(np.max(np.abs(n1[nz] - n0[nz]) / n0[nz]))
            if leak > LEAK_TOL:
                raise LeakageError(leak, zeta)
    return out


def dilate(wf: WaveFunction, zeta: float, check: bool = True) -> WaveFunction:
    """v(r) -> zeta^{-1/2} v(r/zeta), re-projected onto the basis."""
    return wf.with_coeffs(_dilate(wf.basis, zeta, wf.coeffs, check))


def _beta(fs: cf.FundamentalSolution, t: float) -> float:
    return fs.dzeta(t) / (2.0 * fs.zeta(t))


def _J(fs, basis, t, C):
    return _gauge(basis, _beta(fs, t), _dilate(basis, fs.zeta(t), C))


def _J_star(fs, basis, s, C):
    return _dilate(basis, 1.0 / fs.zeta(s), _gauge(basis, -_beta(fs, s), C))


def apply_J(fs: cf.FundamentalSolution, t: float, wf: WaveFunction) -> WaveFunction:
    cf._check_side(fs, t)
    return wf.with_coeffs(_J(fs, wf.basis, t, wf.coeffs))


def apply_J_star(fs: cf.FundamentalSolution, s: float, wf: WaveFunction) -> WaveFunction:
    cf._check_side(fs, s)
    return wf.with_coeffs(_J_star(fs, wf.basis, s, wf.coeffs))


def _check_region(fs: cf.FundamentalSolution, s: float, t: float) -> None:
    r0 = fs.r0
    if abs(s) < r0 or abs(t) < r0 or (s > 0) != (t > 0):
        raise RegionError(
            f"factorization needs |s|, |t| >= r0 = {r0} on one side of the origin; "
            f"got s={s}, t={t}")


def factorized_U(plan: PropagatorPlan, s: float, t: float, wf: WaveFunction) -> WaveFunction:
    """U(t, s) wf = J(t) exp(-i f(t;s) H) J(s)^* wf.

    Both time orders are accepted, so U(s, t) U(t, s) can be formed directly.
    """
    _check_region(plan.fs, s, t)
    plan.check(wf)
    if s == t:
        return wf
    fs = plan.fs
    tau = cf.phase_time(fs, s, t)
    return apply_J(fs, t, reduced_propagate(plan, apply_J_star(fs, s, wf), tau))


def harmonic_U0(plan0: PropagatorPlan, s: float, t: float, wf: WaveFunction) -> WaveFunction:
    """Propagator of the same problem with the inverse-square term switched off."""
    if plan0.Lambda != 0:
        raise ValueError("harmonic_U0 needs a Lambda = 0 plan")
    return factorized_U(plan0, s, t, wf)


def trajectory(plan: PropagatorPlan, s: float, times, wf: WaveFunction) -> list[WaveFunction]:
    """[U(t, s) wf for t in times], sharing the J(s)^* step."""
    plan.check(wf)
    C = trajectory_coeffs(plan, s, times, wf.coeffs[:, None])
    return [wf if t == s else wf.with_coeffs(c[:, 0]) for t, c in zip(times, C)]


def trajectory_coeffs(plan: PropagatorPlan, s: float, times, C: np.ndarray) -> list[np.ndarray]:
    """Batched trajectory: columns of ``C`` are coefficient vectors propagated together."""
    fs, b = plan.fs, plan.basis
    for t in times:
        _check_region(fs, s, t)
    W = _J_star(fs, b, s, C)
    out = []
    for t in times:
        if t == s:
            out.append(C)
            continue
        ph = plan.phases(cf.phase_time(fs, s, t))
        out.append(_J(fs, b, t, W * ph[:, None]))
    return out


# ---------------------------------------------------------------- oracle

@dataclass(frozen=True)
class FDGrid:
    M: int
    R: float

    @property
    def h(self) -> float:
        return self.R / self.M

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.h


def _cn_operator(grid: FDGrid, nu: float):
    h = grid.h
    r = grid.nodes
    diag = np.full(grid.M, 1.0 / h**2)
    # odd reflection at r = 0 and Dirichlet at r = R, both through ghost nodes
    diag[0] = diag[-1] = 1.5 / h**2
    off = np.full(grid.M - 1, -0.5 / h**2)
    return diag + (nu * nu - 0.25) / (2.0 * r * r), off, r * r / 2.0


def cn_oracle(profile: cf.CoefficientProfile | None, Lambda: float, n: int, ell: int,
              grid: FDGrid, s: float, t: float, dt: float, samples,
              lambda0: float = DEFAULT_LAMBDA0) -> np.ndarray:
    """Crank-Nicolson for i v' = H(t) v on the offset grid; sigma is taken at midpoints.

    ``profile=None`` means sigma == 0.  Returns the sector samples at time t.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = np.array(samples, dtype=complex)
    if v.shape != (grid.M,):
        raise ValueError(f"samples must have shape ({grid.M},)")
    nsteps = max(1, int(round(abs(t - s) / dt)))
    step = (t - s) / nsteps
    if t == s:
        return v
    d0, off, quad = _cn_operator(grid, nu_order(n, ell, Lambda, lambda0))
    ab = np.zeros((3, grid.M), dtype=complex)
    ab[0, 1:] = 0.5j * step * off
    ab[2, :-1] = 0.5j * step * off
    for m in range(nsteps):
        tm = s + (m + 0.5) * step
        sig = 0.0 if profile is None else float(profile(tm))
        d = d0 + sig * quad
        rhs = v * (1.0 - 0.5j * step * d)
        rhs[1:] -= 0.5j * step * off * v[:-1]
        rhs[:-1] -= 0.5j * step * off * v[1:]
        ab[1] = 1.0 + 0.5j * step * d
        vn = solve_banded((1, 1), ab, rhs, check_finite=False)
        if m == 0 or m == nsteps - 1:
            res = ab[1] * vn
            res[1:] += ab[2, :-1] * vn[:-1]
            res[:-1] += ab[0, 1:] * vn[1:]
            err = np.abs(res - rhs).max() / max(np.abs(rhs).max(), 1e-300)
            if err > 1e-10:
                raise RuntimeError(f"Crank-Nicolson solve residual {err:.2e} at step {m}")
        v = vn
    return v


def fd_to_spectral(basis: SectorBasis, grid: FDGrid, samples) -> np.ndarray:
    """Coefficients of a grid function by midpoint quadrature against the basis modes."""
    return grid.h * (basis.eval_matrix(grid.nodes).T @ np.asarray(samples))


def spectral_to_fd(wf: WaveFunction, grid: FDGrid) -> np.ndarray:
    return wf.basis.eval_matrix(grid.nodes) @ wf.coeffs


def relative_l2(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
