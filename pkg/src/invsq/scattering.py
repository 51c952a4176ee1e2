"""Reduced wave operators W(tau) = exp(i tau H0) exp(-i tau H) and the smoothing integral.

H and H0 differ only by the inverse-square term, so on one sector they are
diagonal in two Fourier-Bessel bases (orders nu and nu0) on the same ball.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .propagators import PropagatorPlan, reduced_propagate
from .spectral import WaveFunction, inverse_square_matrix, transfer

BASIS_LEAK_TOL = 1e-6
TAIL_DECAY = 0.1   # engineering threshold: last tail <= 0.1 x first


class BasisLeakageWarning(RuntimeWarning):
    pass


def _leak(before: WaveFunction, after: WaveFunction) -> float:
    n0 = before.norm() ** 2
    return abs(after.norm() ** 2 - n0) / n0 if n0 > 0 else 0.0


def change_basis(wf: WaveFunction, target: PropagatorPlan) -> tuple[WaveFunction, float]:
    """Move a state into ``target``'s basis; returns the state and the relative norm leakage."""
    if wf.basis is target.basis:
        return target.state(wf.coeffs), 0.0
    out = transfer(wf, target.basis, target.Lambda)
    leak = _leak(wf, out)
    if leak > BASIS_LEAK_TOL:
        warnings.warn(f"basis change nu={wf.basis.nu:.6g} -> {target.basis.nu:.6g} "
                      f"leaked {leak:.2e} of the norm", BasisLeakageWarning, stacklevel=3)
    return out, leak


def _check_pair(plan: PropagatorPlan, plan0: PropagatorPlan) -> None:
    if plan0.Lambda != 0:
        raise ValueError("plan0 must have Lambda = 0")
    if (plan.n, plan.ell) != (plan0.n, plan0.ell):
        raise ValueError("plans must describe the same sector")
    if abs(plan.basis.R - plan0.basis.R) > 1e-12 * plan.basis.R:
        raise ValueError("plans must share the ball radius")


def wave_operator_product(plan: PropagatorPlan, plan0: PropagatorPlan, tau: float,
                          wf: WaveFunction) -> WaveFunction:
    """exp(i tau H0) exp(-i tau H) wf, returned in plan0's basis."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    _check_pair(plan, plan0)
    x = reduced_propagate(plan, wf, tau)
    y, _ = change_basis(x, plan0)
    return reduced_propagate(plan0, y, -tau)


@dataclass
class WaveOpReport:
    tau_grid: np.ndarray
    cauchy_norms: np.ndarray
    roundtrip_error: float = float("nan")
    smoothing_integral: float = float("nan")
    isometry_defects: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.cauchy_norms) < 0))

    @property
    def decay_ratio(self) -> float:
        first = self.cauchy_norms[0]
        return float(self.cauchy_norms[-1] / first) if first > 0 else 0.0

    @property
    def existence_evidence(self) -> bool:
        """Heuristic (not a proof): tails shrink monotonically by at least TAIL_DECAY."""
        return self.strictly_decreasing and self.decay_ratio <= TAIL_DECAY


def cauchy_tails(plan: PropagatorPlan, plan0: PropagatorPlan, wf: WaveFunction,
                 tau_grid) -> WaveOpReport:
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or taus.size < 4:
        raise ValueError("tau_grid needs at least 4 points")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("tau_grid must be strictly increasing")
    ws = [wave_operator_product(plan, plan0, t, wf) for t in taus]
    tails = np.array([np.linalg.norm(b.coeffs - a.coeffs) for a, b in zip(ws, ws[1:])])
    iso = np.array([abs(w.norm() - wf.norm()) for w in ws])
    return WaveOpReport(taus, tails, isometry_defects=iso)


def completeness_roundtrip(plan: PropagatorPlan, plan0: PropagatorPlan, psi: WaveFunction,
                           tau: float) -> float:
    """||W(tau) phi - psi|| with phi = exp(i tau H) exp(-i tau H0) psi (psi in plan0's basis)."""
    _check_pair(plan, plan0)
    x = reduced_propagate(plan0, psi, tau)
    y, _ = change_basis(x, plan)
    phi = reduced_propagate(plan, y, -tau)
    back = wave_operator_product(plan, plan0, tau, phi)
    return float(np.linalg.norm(back.coeffs - psi.coeffs))


def smoothing_density(plan: PropagatorPlan, wf: WaveFunction, taus) -> np.ndarray:
    """||r^-1 exp(-i tau H) wf||^2 at each tau, from the exact Gram matrix of r^-2."""
    plan.check(wf)
    M = inverse_square_matrix(plan.basis)
    C = wf.coeffs[None, :] * np.exp(-1j * np.outer(taus, plan.basis.eigenvalues))
    return np.einsum("ik,ik->i", C.conj(), C @ M).real


def smoothing_integral(plan: PropagatorPlan, wf: WaveFunction, T: float, dt: float) -> float:
    """Composite Simpson approximation of int_0^T ||r^-1 exp(-i tau H) wf||^2 d tau."""
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    m = max(2, int(np.ceil(T / dt)))
    m += m % 2
    taus = np.linspace(0.0, T, m + 1)
    return float(simpson(smoothing_density(plan, wf, taus), x=taus))
