"""Fourier-Bessel sector bases on a ball of radius R.

A radial sector state u(x) = r^{-(n-1)/2} v(r) Y_l(w) is stored through the
coefficients of v in the Dirichlet eigenbasis

    e_k(r) = N_k sqrt(r) J_nu(j_k r / R),   k = 1..K,

of (1/2)(-d^2/dr^2 + (nu^2 - 1/4)/r^2), whose eigenvalues are j_k^2/(2R^2).
Nodal values live on r_m = j_m R / j_{K+1}; the nodal transform is the
(quasi-)discrete Hankel transform, polished to exact orthogonality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.optimize import brentq

DEFAULT_LAMBDA0 = 1e-2
ORTHO_TOL = 1e-10
DENSE_FACTOR = 4


class HardyBoundError(ValueError):
    """Coupling Lambda at or beyond (n-2)^2/8 - lambda0."""


def nu_order(n: int, ell: int, Lambda: float, lambda0: float = DEFAULT_LAMBDA0) -> float:
    """Bessel order of the (n, ell) sector of -Delta/2 - Lambda |x|^-2."""
    if n < 3:
        raise ValueError(f"dimension n must be >= 3, got {n}")
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if not lambda0 > 0:
        raise ValueError("lambda0 must be positive")
    bound = (n - 2) ** 2 / 8.0 - lambda0
    if Lambda > bound + 1e-15:
        raise HardyBoundError(f"Lambda={Lambda} exceeds (n-2)^2/8 - lambda0 = {bound}")
    a = ell + (n - 2) / 2.0
    if Lambda == 0:
        return a
    return math.sqrt(a * a - 2.0 * Lambda)


def bessel_j(nu, x):
    """J_nu(x) for real nu >= 0, x >= 0 (scipy's AMOS-backed jv)."""
    return special.jv(nu, x)


def _mcmahon(nu: float, k: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    b = (k + 0.5 * nu - 0.25) * math.pi
    e = 8.0 * b
    return (b - (mu - 1) / e - 4 * (mu - 1) * (7 * mu - 31) / (3 * e**3)
            - 32 * (mu - 1) * (83 * mu**2 - 982 * mu + 3779) / (15 * e**5))


def _newton_zero(nu: float, x: float) -> float:
    for _ in range(50):
        j = bessel_j(nu, x)
        dj = nu / x * j - bessel_j(nu + 1, x)
        step = j / dj
        x -= step
        if abs(step) <= 2e-16 * x:
            break
    return x


def _scan_zeros(nu: float, K: int) -> np.ndarray:
    out = []
    x = max(nu, 1e-3)
    fx = bessel_j(nu, x)
    h = 0.25
    while len(out) < K:
        y = x + h
        fy = bessel_j(nu, y)
        if fx == 0.0:
            out.append(x)
        elif fx * fy < 0:
            out.append(brentq(lambda z: bessel_j(nu, z), x, y, xtol=1e-15, rtol=1e-15))
        x, fx = y, fy
    return np.array([_newton_zero(nu, z) for z in out[:K]])


def _count_sign_changes(nu: float, upper: float) -> int:
    x = np.arange(max(nu, 1e-3), upper, 0.1)
    f = bessel_j(nu, x)
    return int(np.count_nonzero(np.signbit(f[1:]) != np.signbit(f[:-1])))


def bessel_zeros(nu: float, K: int) -> np.ndarray:
    """First K positive zeros of J_nu: McMahon seeds, Newton polish.

    The seeds are unreliable for small k and large nu, so the result is
    checked against a sign-change count and rebuilt by bracketing if needed.
    """
    if nu < 0 or K < 1:
        raise ValueError("need nu >= 0 and K >= 1")
    seeds = _mcmahon(nu, np.arange(1, K + 1, dtype=float))
    z = np.array([_newton_zero(nu, s) for s in seeds])
    ok = (np.all(np.isfinite(z)) and z[0] > nu and np.all(np.diff(z) > 1.0)
          and _count_sign_changes(nu, z[-1] + 0.5) == K)
    if not ok:
        z = _scan_zeros(nu, K)
    return z


@dataclass(frozen=True, eq=False)
class SectorBasis:
    nu: float
    R: float
    K: int
    zeros: np.ndarray = field(repr=False)
    j_next: float = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)
    transform: np.ndarray = field(repr=False)   # orthogonal, sqrt(w_m) e_k(r_m)
    ortho_residual: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.zeros**2 / (2.0 * self.R**2)

    def eval_matrix(self, points) -> np.ndarray:
        """e_k(points) as a (len(points), K) matrix."""
        r = np.asarray(points, dtype=float)
        return self.norms[None, :] * np.sqrt(r)[:, None] * bessel_j(
            self.nu, np.outer(r, self.zeros) / self.R)

    def dense_grid(self) -> np.ndarray:
        return _dense(self)[0]

    def dense_matrix(self) -> np.ndarray:
        return _dense(self)[1]


@lru_cache(maxsize=16)
def _dense(basis: SectorBasis):
    m = DENSE_FACTOR * basis.K
    h = basis.R / m
    r = (np.arange(m) + 0.5) * h
    return r, basis.eval_matrix(r)


def build_basis(nu: float, R: float, K: int) -> SectorBasis:
    if K < 8:
        raise ValueError("K must be >= 8")
    if not R > 0:
        raise ValueError("R must be positive")
    z = bessel_zeros(nu, K + 1)
    jv_at = np.abs(bessel_j(nu, z))
    dj = np.abs(bessel_j(nu + 1, z))
    if np.any(jv_at > 1e-12 * dj * z):
        raise ValueError(f"Bessel zeros for nu={nu}, K={K} miss the 1e-12 tolerance")
    zeros, j_next = z[:K], z[K]
    nodes = zeros * R / j_next
    weights = 2.0 * R / (j_next * zeros * dj[:K] ** 2)
    norms = math.sqrt(2.0) / (R * dj[:K])
    E = norms[None, :] * np.sqrt(nodes)[:, None] * bessel_j(nu, np.outer(nodes, zeros) / R)
    B = np.sqrt(weights)[:, None] * E
    resid = float(np.abs(B.T @ B - np.eye(K)).max())
    # Always snap to the nearest orthogonal matrix (polar factor).  The raw
    # residual is kept for reporting; long runs of nodal multiplications need
    # orthogonality to rounding, not just to ORTHO_TOL.
    u, _, vt = np.linalg.svd(B)
    B = u @ vt
    return SectorBasis(float(nu), float(R), int(K), zeros, float(j_next), nodes, weights,
                       norms, B, resid)


def analyze(basis: SectorBasis, samples) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.shape[0] != basis.K:
        raise ValueError(f"expected {basis.K} nodal samples, got {samples.shape[0]}")
    sw = np.sqrt(basis.weights)
    if samples.ndim == 2:
        sw = sw[:, None]
    return basis.transform.T @ (sw * samples)


def synthesize(basis: SectorBasis, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != basis.K:
        raise ValueError(f"expected {basis.K} coefficients, got {coeffs.shape[0]}")
    sw = np.sqrt(basis.weights)
    if coeffs.ndim == 2:
        sw = sw[:, None]
    return (basis.transform @ coeffs) / sw


@dataclass(frozen=True, eq=False)
class WaveFunction:
    n: int
    ell: int
    Lambda: float
    basis: SectorBasis
    coeffs: np.ndarray
    lambda0: float = DEFAULT_LAMBDA0

    def __post_init__(self):
        nu = nu_order(self.n, self.ell, self.Lambda, self.lambda0)
        if abs(nu - self.basis.nu) > 1e-12:
            raise ValueError(f"basis order {self.basis.nu} != sector order {nu}")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.K,):
            raise ValueError(f"coeffs must have shape ({self.basis.K},)")
        object.__setattr__(self, "coeffs", c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def with_coeffs(self, coeffs) -> "WaveFunction":
        return replace(self, coeffs=coeffs)

    def samples(self) -> np.ndarray:
        return synthesize(self.basis, self.coeffs)

    def physical(self, r=None) -> np.ndarray:
        """Radial profile u = v r^{-(n-1)/2} Y_0 of the R^n function (ell = 0).

        Evaluated at the nodes unless ``r`` is given; Y_0 = omega_{n-1}^{-1/2}.
        """
        if r is None:
            r, v = self.basis.nodes, self.samples()
        else:
            v = resample(self, r)
        return v * radial_weight(np.asarray(r, dtype=float), self.n)


def from_samples(basis: SectorBasis, n: int, ell: int, Lambda: float, samples,
                 lambda0: float = DEFAULT_LAMBDA0) -> WaveFunction:
    return WaveFunction(n, ell, Lambda, basis, analyze(basis, samples), lambda0)


def project(basis: SectorBasis, n: int, ell: int, Lambda: float, func,
            lambda0: float = DEFAULT_LAMBDA0) -> WaveFunction:
    """Quadrature projection of the sector function ``func(r)`` onto the basis."""
    return from_samples(basis, n, ell, Lambda, func(basis.nodes), lambda0)


def resample(wf: WaveFunction, points) -> np.ndarray:
    """Evaluate the truncated series v(r) = sum_k c_k e_k(r) at arbitrary radii."""
    r = np.asarray(points, dtype=float)
    if np.any(r < 0) or np.any(r >= wf.basis.R):
        raise ValueError("resampling points must lie in [0, R)")
    vals = wf.basis.eval_matrix(r.ravel()) @ wf.coeffs
    return vals.reshape(r.shape)


@lru_cache(maxsize=16)
def _transfer_matrix(src: SectorBasis, dst: SectorBasis) -> np.ndarray:
    return analyze(dst, src.eval_matrix(dst.nodes))


def transfer(wf: WaveFunction, basis: SectorBasis, Lambda: float) -> WaveFunction:
    """Re-expand a state in another basis on the same ball (resample at the new nodes, analyze)."""
    if abs(basis.R - wf.basis.R) > 1e-12 * basis.R:
        raise ValueError("bases must live on the same ball")
    if basis is wf.basis:
        return replace(wf, Lambda=Lambda)
    c = _transfer_matrix(wf.basis, basis) @ wf.coeffs
    return WaveFunction(wf.n, wf.ell, Lambda, basis, c, wf.lambda0)


def surface_measure(n: int) -> float:
    """omega_{n-1} = 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def radial_weight(r, n: int):
    """r^{-(n-1)/2} Y_0: turns a sector function v into the radial profile u."""
    return np.asarray(r, dtype=float) ** (-(n - 1) / 2.0) / math.sqrt(surface_measure(n))


def lr_norms(basis: SectorBasis, C: np.ndarray, r_exponent: float, n: int) -> np.ndarray:
    """L^r(R^n) norms of the radial states whose coefficient vectors are the columns of C.

    The R^n function is u(x) = v(r) r^{-(n-1)/2} Y_0, so r = 2 reproduces the
    coefficient norm.
    Finite r uses the midpoint rule on the dense grid (4K cells); r = inf
    takes the max over that grid.
    """
    p = float(r_exponent)
    if p < 1:
        raise ValueError("r_exponent must be >= 1")
    r = basis.dense_grid()
    u = np.abs(basis.dense_matrix() @ C) * radial_weight(r, n)[:, None]
    if math.isinf(p):
        return u.max(axis=0)
    h = basis.R / r.size
    return (surface_measure(n) * h * ((r ** (n - 1)) @ u**p)) ** (1.0 / p)


def lr_norm(wf: WaveFunction, r_exponent: float, n: int | None = None) -> float:
    """L^r(R^n) norm of a radial state; r = 2 is the coefficient norm (any ell)."""
    p = float(r_exponent)
    n = wf.n if n is None else n
    if p < 1:
        raise ValueError("r_exponent must be >= 1")
    if p == 2:
        return wf.norm()
    if wf.ell != 0:
        raise ValueError("L^r with r != 2 needs a radial (ell = 0) state")
    return float(lr_norms(wf.basis, wf.coeffs[:, None], p, n)[0])


def boundary_mass(wf: WaveFunction, frac: float = 0.9) -> float:
    """int_{frac R}^R |v|^2 dr, Gauss-Legendre on panels as fine as the dense grid."""
    b = wf.basis
    a = frac * b.R
    panels = max(4, int(math.ceil(DENSE_FACTOR * b.K * (1.0 - frac))))
    x, w = np.polynomial.legendre.leggauss(4)
    edges = np.linspace(a, b.R, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    r = (half * x + 0.5 * (edges[:-1, None] + edges[1:, None])).ravel()
    v = b.eval_matrix(r) @ wf.coeffs
    return float(np.sum((half * w).ravel() * np.abs(v) ** 2))


@lru_cache(maxsize=8)
def inverse_square_matrix(basis: SectorBasis) -> np.ndarray:
    """Gram matrix of r^-2:  M_kl = int_0^R e_k e_l / r^2 dr.

    The integrand behaves like r^{2 nu - 1} at the origin, so a Gauss-Jacobi
    rule carries that factor and the remaining part is smooth.
    """
    nu = basis.nu
    m = 4 * basis.K + 64
    x, w = special.roots_jacobi(m, 0.0, 2.0 * nu - 1.0)
    r = 0.5 * basis.R * (x + 1.0)
    wr = w * (0.5 * basis.R) ** (2.0 * nu)
    # e_k / r^{nu + 1/2}
    q = basis.norms[None, :] * bessel_j(nu, np.outer(r, basis.zeros) / basis.R) / r[:, None] ** nu
    return (q * wr[:, None]).T @ q
