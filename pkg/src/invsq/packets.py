"""Test data: radial Gaussian shells and seeded families of them."""
from __future__ import annotations

import zlib

import numpy as np

from .spectral import DEFAULT_LAMBDA0, SectorBasis, WaveFunction, analyze


def rng_for(seed: int, name: str) -> np.random.Generator:
    """Independent stream per named consumer, derived from one 64-bit seed."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(zlib.crc32(name.encode()),))
    return np.random.default_rng(ss)


def shell_profile(nu: float, rc: float, w: float, k: float = 0.0, even: bool = False):
    """Sector function of a Gaussian shell of centre ``rc``, width ``w`` and momentum ``k``.

    The default is v = r^{nu+1/2} exp(-(r-rc)^2/(2w^2)) e^{ikr}.  With ``even`` the
    envelope is symmetrized in r and the plane wave replaced by the chirp
    e^{ik r^2/(2 rc)} (same local momentum at rc), so v / r^{nu+1/2} is an even
    entire function and the Fourier-Bessel coefficients decay faster than any power.
    """
    def v(r):
        r = np.asarray(r, dtype=float)
        g = np.exp(-((r - rc) ** 2) / (2 * w * w))
        if even:
            g = g + np.exp(-((r + rc) ** 2) / (2 * w * w))
            phase = np.exp(0.5j * k * r * r / rc)
        else:
            phase = np.exp(1j * k * r)
        return r ** (nu + 0.5) * g * phase
    return v


def gaussian_shell(basis: SectorBasis, n: int, ell: int, Lambda: float, rc: float, w: float,
                   k: float = 0.0, even: bool = False, normalize: bool = True,
                   lambda0: float = DEFAULT_LAMBDA0) -> WaveFunction:
    c = analyze(basis, shell_profile(basis.nu, rc, w, k, even)(basis.nodes))
    if normalize:
        c = c / np.linalg.norm(c)
    return WaveFunction(n, ell, Lambda, basis, c, lambda0)


def shell_family(basis: SectorBasis, n: int, ell: int, Lambda: float, count: int, seed: int,
                 name: str = "shells", rc_range=(4.0, 8.0), w_range=(1.5, 2.5),
                 k_range=(-0.5, 0.5), lambda0: float = DEFAULT_LAMBDA0) -> list[WaveFunction]:
    """``count`` normalized even shells with uniformly drawn centre, width and momentum."""
    g = rng_for(seed, name)
    out = []
    for _ in range(count):
        rc = g.uniform(*rc_range)
        w = g.uniform(*w_range)
        k = g.uniform(*k_range)
        out.append(gaussian_shell(basis, n, ell, Lambda, rc, w, k, even=True, lambda0=lambda0))
    return out


def random_state(basis: SectorBasis, n: int, ell: int, Lambda: float, seed: int,
                 name: str = "random", modes: int | None = None,
                 lambda0: float = DEFAULT_LAMBDA0) -> WaveFunction:
    """Normalized state with complex Gaussian coefficients on the lowest ``modes`` modes."""
    g = rng_for(seed, name)
    m = basis.K if modes is None else modes
    c = np.zeros(basis.K, dtype=complex)
    c[:m] = g.standard_normal(m) + 1j * g.standard_normal(m)
    return WaveFunction(n, ell, Lambda, basis, c / np.linalg.norm(c), lambda0)
