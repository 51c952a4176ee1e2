import math

import numpy as np
import pytest

from invsq import coeffs as cf
from invsq import propagators as pr
from invsq import spectral as sp
from invsq.packets import gaussian_shell, random_state, shell_family

from oracles import odd_free_gaussian, radial_second_moment


def test_reduced_propagate_identity_and_phases(plan40):
    u = random_state(plan40.basis, 3, 0, 1 / 16, seed=4)
    assert pr.reduced_propagate(plan40, u, 0.0) is u
    c = np.zeros(256, dtype=complex)
    c[6] = 1
    out = pr.reduced_propagate(plan40, plan40.state(c), 0.7)
    lam = plan40.basis.zeros[6] ** 2 / (2 * 40.0**2)
    assert out.coeffs[6] == np.exp(-0.7j * lam)
    assert np.count_nonzero(out.coeffs) == 1


@pytest.mark.parametrize("tau", [0.1, 0.5, 1.0])
def test_reduced_propagate_free_gaussian(plan40_free, tau):
    b = plan40_free.basis
    u = sp.from_samples(b, 3, 0, 0.0, odd_free_gaussian(b.nodes, 0.0, 10.0, 1.0, 2.0))
    exact = sp.analyze(b, odd_free_gaussian(b.nodes, tau, 10.0, 1.0, 2.0))
    got = pr.reduced_propagate(plan40_free, u, tau).coeffs
    assert np.linalg.norm(got - exact) <= 1e-6 * np.linalg.norm(exact)


def test_reduced_propagate_rejects_foreign_state(plan40, plan40_free):
    u = random_state(plan40_free.basis, 3, 0, 0.0, seed=1)
    with pytest.raises(ValueError):
        pr.reduced_propagate(plan40, u, 1.0)


def test_gauge_multiply(plan40):
    u = random_state(plan40.basis, 3, 0, 1 / 16, seed=8)
    assert pr.gauge_multiply(u, 0.0) is u
    g = pr.gauge_multiply(u, 5.0)
    assert g.norm() == pytest.approx(u.norm(), rel=1e-10)
    back = pr.gauge_multiply(g, -5.0)
    assert np.linalg.norm(back.coeffs - u.coeffs) <= 1e-10


def test_gauge_multiply_is_pointwise(plan40):
    u = gaussian_shell(plan40.basis, 3, 0, 1 / 16, 6.0, 1.0, even=True)
    g = pr.gauge_multiply(u, 0.3)
    r = plan40.basis.nodes
    assert np.allclose(g.samples(), u.samples() * np.exp(0.3j * r * r), atol=1e-12)


def test_dilate_identity_and_norm(plan40):
    u = shell_family(plan40.basis, 3, 0, 1 / 16, 3, seed=21)
    for x in u:
        assert np.array_equal(pr.dilate(x, 1.0).coeffs, x.coeffs)
        assert pr.dilate(x, 2.0).norm() == pytest.approx(x.norm(), rel=1e-8)
        assert pr.dilate(x, 0.5).norm() == pytest.approx(x.norm(), rel=1e-8)


@pytest.mark.parametrize("zeta", [0.7, 1.5, 2.0])
def test_dilate_scales_gaussian_width(plan40_free, zeta):
    b = plan40_free.basis
    u = sp.project(b, 3, 0, 0.0, lambda r: r * np.exp(-r * r / 2))
    d = pr.dilate(u, zeta)
    r = np.linspace(0.0, 39.9, 8000)
    m0 = radial_second_moment(r, sp.resample(u, r))
    m1 = radial_second_moment(r, sp.resample(d, r))
    assert m1 / m0 == pytest.approx(zeta**2, rel=1e-9)
    # and pointwise: zeta^{-1/2} v(r / zeta)
    x = r[::97][r[::97] / zeta < 39.9]
    assert np.allclose(sp.resample(d, x), zeta**-0.5 * sp.resample(u, x / zeta), atol=1e-10)


def test_dilate_leakage_error(plan40):
    u = gaussian_shell(plan40.basis, 3, 0, 1 / 16, 25.0, 2.0, even=True)
    with pytest.raises(pr.LeakageError) as e:
        pr.dilate(u, 2.0)
    assert e.value.leakage > pr.LEAK_TOL
    with pytest.raises(ValueError):
        pr.dilate(u, -1.0)


def test_J_round_trip_and_norm(plan40, fs316):
    for u in shell_family(plan40.basis, 3, 0, 1 / 16, 4, seed=5):
        for t in (1.0, 2.0, 7.5):
            ju = pr.apply_J(fs316, t, u)
            assert ju.norm() == pytest.approx(u.norm(), rel=1e-8)
            back = pr.apply_J_star(fs316, t, ju)
            assert np.linalg.norm(back.coeffs - u.coeffs) <= 1e-8


def test_J_trivial_branch_is_identity(plan40):
    flat = cf.power_solution(cf.make_profile("power_law", 0.1, 1.0), c=1.0, lam=0.0)
    u = random_state(plan40.basis, 3, 0, 1 / 16, seed=2)
    assert np.array_equal(pr.apply_J(flat, 3.0, u).coeffs, u.coeffs)
    assert np.array_equal(pr.apply_J_star(flat, 3.0, u).coeffs, u.coeffs)


def test_J_rejects_interior_time(plan40, fs316):
    u = random_state(plan40.basis, 3, 0, 1 / 16, seed=2)
    with pytest.raises(ValueError):
        pr.apply_J(fs316, 0.5, u)


def test_factorized_U_identity_group_inverse(plan40):
    u = shell_family(plan40.basis, 3, 0, 1 / 16, 1, seed=9)[0]
    assert np.linalg.norm(pr.factorized_U(plan40, 2.0, 2.0, u).coeffs - u.coeffs) <= 1e-8
    a = pr.factorized_U(plan40, 3.0, 6.0, pr.factorized_U(plan40, 1.5, 3.0, u))
    b = pr.factorized_U(plan40, 1.5, 6.0, u)
    assert np.linalg.norm(a.coeffs - b.coeffs) <= 1e-7
    back = pr.factorized_U(plan40, 6.0, 1.5, b)
    assert np.linalg.norm(back.coeffs - u.coeffs) <= 1e-7


def test_factorized_U_region(plan40):
    u = random_state(plan40.basis, 3, 0, 1 / 16, seed=2, modes=30)
    for s, t in [(0.5, 2.0), (1.0, 0.9), (-2.0, 2.0)]:
        with pytest.raises(pr.RegionError, match="r0"):
            pr.factorized_U(plan40, s, t, u)


def test_factorized_U_unitary_small_family(plan40):
    for u in shell_family(plan40.basis, 3, 0, 1 / 16, 5, seed=33):
        for s, t in [(1.0, 1.3), (1.0, 8.0), (2.5, 12.0)]:
            assert pr.factorized_U(plan40, s, t, u).norm() == pytest.approx(1.0, abs=1e-8)


def test_time_reversal_on_negative_branch(plan40):
    # H(t) is real and even in t, so U(-t,-s) conj(u) = conj(U(t,s) u)
    u = gaussian_shell(plan40.basis, 3, 0, 1 / 16, 5.0, 1.0, 1.0, even=True)
    a = pr.factorized_U(plan40, 1.0, 2.5, u)
    b = pr.factorized_U(plan40, -1.0, -2.5, u.with_coeffs(np.conj(u.coeffs)))
    assert np.linalg.norm(np.conj(a.coeffs) - b.coeffs) <= 1e-10


def test_negative_branch_against_crank_nicolson(plan40, fs316):
    u = gaussian_shell(plan40.basis, 3, 0, 1 / 16, 5.0, 1.0)
    grid = pr.FDGrid(4096, 40.0)
    v = pr.cn_oracle(fs316.profile, 1 / 16, 3, 0, grid, -1.0, -2.0, 2e-4, pr.spectral_to_fd(u, grid))
    ref = pr.spectral_to_fd(pr.factorized_U(plan40, -1.0, -2.0, u), grid)
    assert pr.relative_l2(v, ref) <= 1e-3


def test_harmonic_U0(plan40_free, plan40):
    u = shell_family(plan40_free.basis, 3, 0, 0.0, 3, seed=12)
    for x in u:
        assert np.array_equal(pr.harmonic_U0(plan40_free, 1.0, 1.0, x).coeffs, x.coeffs)
        assert pr.harmonic_U0(plan40_free, 1.0, 9.0, x).norm() == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        pr.harmonic_U0(plan40, 1.0, 2.0, random_state(plan40.basis, 3, 0, 1 / 16, seed=1))


def test_harmonic_U0_against_crank_nicolson(plan40_free, fs316):
    u = gaussian_shell(plan40_free.basis, 3, 0, 0.0, 5.0, 1.0)
    grid = pr.FDGrid(4096, 40.0)
    v = pr.cn_oracle(fs316.profile, 0.0, 3, 0, grid, 1.0, 2.0, 1e-4, pr.spectral_to_fd(u, grid))
    ref = pr.spectral_to_fd(pr.harmonic_U0(plan40_free, 1.0, 2.0, u), grid)
    assert pr.relative_l2(v, ref) <= 1e-3


def test_lambda_continuity(fs316, plan40_free):
    # identical physical data in both bases; vanishes to all orders at the origin
    f = lambda r: r * np.exp(-((r - 8) ** 2) / 2) * np.exp(1j * r)
    b0 = plan40_free.basis
    ref = pr.harmonic_U0(plan40_free, 1.0, 3.0, sp.project(b0, 3, 0, 0.0, f))
    diffs = []
    for L in (1e-2, 1e-3, 1e-4):
        plan = pr.make_plan(fs316, 3, 0, L, 40.0, 256)
        out = pr.factorized_U(plan, 1.0, 3.0, sp.project(plan.basis, 3, 0, L, f))
        diffs.append(np.linalg.norm(sp.transfer(out, b0, 0.0).coeffs - ref.coeffs))
    diffs = np.array(diffs)
    C = diffs / np.array([1e-2, 1e-3, 1e-4])
    assert np.all(np.diff(diffs) < 0)
    assert np.all(np.isfinite(C)) and C.max() <= 1.1 * C.min()


def test_fd_grid():
    g = pr.FDGrid(8, 2.0)
    assert g.h == 0.25
    assert np.allclose(g.nodes, 0.25 * (np.arange(8) + 0.5))
    d, off, _ = pr._cn_operator(g, 0.5)
    H = np.diag(d) + np.diag(off, 1) + np.diag(off, -1)
    assert np.array_equal(H, H.T)


def test_cn_harmonic_ground_state():
    # sigma == 1, Lambda = 0, n = 3: ground state r e^{-r^2/2}, E0 = 3/2
    grid = pr.FDGrid(2000, 10.0)
    r = grid.nodes
    v0 = r * np.exp(-r * r / 2)
    v0 = v0 / math.sqrt(np.sum(v0 * v0) * grid.h)
    v = pr.cn_oracle(cf.CoefficientProfile.constant(1.0), 0.0, 3, 0, grid, 0.0, 1.0, 1e-3, v0)
    overlap = np.sum(np.conj(np.exp(-1.5j) * v0) * v) * grid.h
    assert abs(overlap) >= 1 - 1e-5
    assert abs(overlap - 1) <= 1e-4


def test_cn_richardson_ratio(fs316):
    grid = pr.FDGrid(512, 20.0)
    b = sp.build_basis(sp.nu_order(3, 0, 1 / 16), 20.0, 128)
    v0 = pr.spectral_to_fd(gaussian_shell(b, 3, 0, 1 / 16, 5.0, 1.0), grid)
    runs = [pr.cn_oracle(fs316.profile, 1 / 16, 3, 0, grid, 1.0, 2.0, dt, v0)
            for dt in (0.02, 0.01, 0.005)]
    ratio = np.linalg.norm(runs[0] - runs[1]) / np.linalg.norm(runs[1] - runs[2])
    assert 3.2 <= ratio <= 4.8


def test_cn_norm_conservation(fs316):
    grid = pr.FDGrid(256, 20.0)
    r = grid.nodes
    v0 = r * np.exp(-((r - 6) ** 2)) * np.exp(2j * r)
    v = pr.cn_oracle(fs316.profile, 1 / 16, 3, 0, grid, 1.0, 2.0, 1e-4, v0)
    assert abs(np.linalg.norm(v) / np.linalg.norm(v0) - 1) <= 1e-12


def test_cn_crosses_origin_window(fs316):
    grid = pr.FDGrid(128, 10.0)
    r = grid.nodes
    v0 = r * np.exp(-((r - 3) ** 2))
    v = pr.cn_oracle(fs316.profile, 1 / 16, 3, 0, grid, -1.5, 1.5, 1e-2, v0)
    assert abs(np.linalg.norm(v) / np.linalg.norm(v0) - 1) <= 1e-12


def test_cn_rejects_bad_input():
    grid = pr.FDGrid(16, 1.0)
    with pytest.raises(ValueError):
        pr.cn_oracle(None, 0.0, 3, 0, grid, 0.0, 1.0, 0.0, np.zeros(16))
    with pytest.raises(ValueError):
        pr.cn_oracle(None, 0.0, 3, 0, grid, 0.0, 1.0, 0.1, np.zeros(15))


def test_spectral_and_fd_agree_without_oscillator(plan40):
    u = gaussian_shell(plan40.basis, 3, 0, 1 / 16, 5.0, 1.0, even=True)
    grid = pr.FDGrid(4096, 40.0)
    v = pr.cn_oracle(None, 1 / 16, 3, 0, grid, 0.0, 1.0, 1e-3, pr.spectral_to_fd(u, grid))
    ref = pr.spectral_to_fd(pr.reduced_propagate(plan40, u, 1.0), grid)
    assert pr.relative_l2(v, ref) <= 1e-4


def test_fd_to_spectral_round_trip(plan40):
    u = gaussian_shell(plan40.basis, 3, 0, 1 / 16, 8.0, 1.5, even=True)
    grid = pr.FDGrid(8192, 40.0)
    c = pr.fd_to_spectral(plan40.basis, grid, pr.spectral_to_fd(u, grid))
    assert np.linalg.norm(c - u.coeffs) <= 1e-6


def test_trajectory_matches_pointwise_calls(plan40):
    u = shell_family(plan40.basis, 3, 0, 1 / 16, 1, seed=3)[0]
    times = [1.0, 1.7, 4.0]
    traj = pr.trajectory(plan40, 1.0, times, u)
    for t, x in zip(times, traj):
        assert np.linalg.norm(x.coeffs - pr.factorized_U(plan40, 1.0, t, u).coeffs) <= 1e-12
