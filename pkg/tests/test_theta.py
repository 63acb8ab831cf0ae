from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiral_magic.algebra import OMEGA_C, Q1, Q2, Z_STACK, z_map
from chiral_magic.errors import PoleAt
from chiral_magic.spectral import kernel_basis
from chiral_magic.theta import (
    THETA,
    F_k,
    dF_dk,
    e_p,
    evaluate_spinor,
    flat_band_generator,
    grid_points,
    lattice_equivalent,
    operator_residual,
    p_prime,
    periodic_residual,
    sample_grid,
    shifted_generator,
    spinor_from_grid,
    theta1,
    weierstrass_p,
    wronskian,
    zero_census,
)

from conftest import ALPHA_U2

box = st.complex_numbers(max_magnitude=0.7).filter(lambda z: abs(z.real) <= 0.5 and abs(z.imag) <= 0.5)
kbox = st.complex_numbers(max_magnitude=6.0)


def cell_point(z: complex) -> bool:
    """Away from the lattice by a safe margin."""
    t = z.imag / (math.sqrt(3) / 2)
    s = z.real + t / 2
    return abs(z - (round(s) + round(t) * OMEGA_C)) > 0.05


def test_simple_zero_at_origin():
    r1 = THETA(np.array([1e-6]))[0] / 1e-6
    r2 = THETA(np.array([1e-8]))[0] / 1e-8
    assert abs(r1 - r2) < 1e-6 * abs(r2)
    assert abs(r2 - THETA(np.array([0j]), 1)[0]) < 1e-6 * abs(r2)


@settings(max_examples=30, deadline=None)
@given(box)
def test_theta_quasi_periodicity(z):
    th = theta1(z, reduce=False)
    assert abs(theta1(z + 1, reduce=False) + th) <= 1e-12 * max(1.0, abs(th))
    want = -cmath.exp(-1j * math.pi * OMEGA_C - 2j * math.pi * z) * th
    assert abs(theta1(z + OMEGA_C, reduce=False) - want) <= 1e-12 * max(1.0, abs(want))


@settings(max_examples=30, deadline=None)
@given(box, st.integers(-3, 3), st.integers(-3, 3))
def test_reduction_consistent(z, m, n):
    zeta = z + m + n * OMEGA_C
    # functional equation applied n times along ω, then m times along 1
    factor = (-1) ** (m + n) * cmath.exp(-1j * math.pi * n * n * OMEGA_C - 2j * math.pi * n * z)
    want = factor * theta1(z, reduce=False)
    assert abs(theta1(zeta) - want) <= 1e-10 * max(1.0, abs(want))


@settings(max_examples=30, deadline=None)
@given(box.filter(cell_point), kbox)
def test_F_k_periodic(z, k):
    f = F_k(z, k)
    for shift in (1, OMEGA_C):
        assert abs(F_k(z + shift, k) - f) <= 1e-10 * max(1.0, abs(f))


def test_F_zero_is_one():
    z = np.array([0.2 + 0.1j, -0.3 + 0.4j])
    assert np.allclose(F_k(z, 0), 1)


def test_F_k_zero_location():
    k = 1.3 - 0.4j
    assert abs(F_k(z_map(k) + 1e-12, k)) < 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_momentum_shift_multiplier(seed):
    rng = np.random.default_rng(seed)
    k = complex(*rng.uniform(-3, 3, 2))
    m, n = rng.integers(-2, 3, 2)
    p = m * Q1 + n * Q2
    z = np.array([complex(*rng.uniform(0.1, 0.4, 2))])
    lhs = F_k(z, k + p)
    rhs = F_k(z, k) * np.exp(-1j * (np.conj(p) * z).real) / e_p(k, p)
    assert np.allclose(lhs, rhs, rtol=1e-10)


def test_dF_dk_matches_difference():
    z = np.array([0.31 + 0.17j])
    k = 0.7 - 1.1j
    h = 1e-5
    fd = (F_k(z, k + h) - F_k(z, k - h)) / (2 * h)
    assert np.allclose(dF_dk(z, k), fd, rtol=1e-8)


def test_pole_raises():
    with pytest.raises(PoleAt):
        F_k(np.array([1 + OMEGA_C]), 0.5)
    with pytest.raises(PoleAt):
        weierstrass_p(np.array([0j]))


def test_weierstrass_against_lattice_sum():
    pts = np.array([0.21 + 0.13j, -0.3 + 0.31j, 0.45 - 0.1j])
    assert np.allclose(weierstrass_p(pts), weierstrass_p(pts, method="lattice"), rtol=1e-9)


def test_weierstrass_symmetries():
    rng = np.random.default_rng(1)
    z = rng.uniform(-0.45, 0.45, 10) + 1j * rng.uniform(-0.4, 0.4, 10)
    z = z[np.abs(z) > 0.05]
    wp = weierstrass_p(z)
    assert np.allclose(weierstrass_p(-z), wp, rtol=1e-10)
    assert np.allclose(p_prime(-z), -p_prime(z), rtol=1e-10)
    # measured covariance on the hexagonal lattice: ℘(ωz) = ω ℘(z)
    assert np.allclose(weierstrass_p(OMEGA_C * z), OMEGA_C * wp, rtol=1e-8)


def test_p_prime_third_order_pole():
    r = np.array([1e-2, 1e-3])
    v = np.abs(p_prime(r))
    assert math.log(v[1] / v[0]) / math.log(10) == pytest.approx(3, abs=1e-3)


# ---- kernel vectors at the double angle --------------------------------


@pytest.fixture(scope="module")
def double_kernel(u2):
    kv = kernel_basis(u2, ALPHA_U2, 0, 12)
    return {v.subspace: v for v in kv}


def test_zero_census_double_angle(double_kernel):
    z0 = zero_census(double_kernel[0].coeffs, 12)
    assert [z.order for z in z0] == [1, 1]
    locs = [z.location for z in z0]
    assert any(lattice_equivalent(w, Z_STACK) for w in locs)
    assert any(lattice_equivalent(w, -Z_STACK) for w in locs)
    z1 = zero_census(double_kernel[1].coeffs, 12)
    assert len(z1) == 1 and z1[0].order == 2 and lattice_equivalent(z1[0].location, 0)


def test_plane_wave_has_no_zeros():
    from chiral_magic.fourier_ops import sector_basis

    c = np.zeros(2 * sector_basis(4).n, complex)
    c[0] = 1
    assert zero_census(c, 4, M=32) == []


def test_sampling_round_trip(double_kernel):
    c = double_kernel[0].coeffs
    S = sample_grid(c, 12, 64)
    back, lost = spinor_from_grid(S, 12)
    assert lost < 1e-20 and np.allclose(back, c, atol=1e-12)
    _, _, z = grid_points(64)
    pts = z.ravel()[:7]
    assert np.allclose(evaluate_spinor(c, 12, pts), S.reshape(2, -1)[:, :7], atol=1e-12)


def test_generators(u2, double_kernel):
    M = 64
    S1 = sample_grid(double_kernel[1].coeffs, 12, M)
    k, r, r2 = 0.7 - 0.5j, 1.1 + 0.3j, -0.4 + 1.2j
    G = flat_band_generator(S1, k, r, M)
    assert operator_residual(G, u2, ALPHA_U2, k, 20) < 1e-5
    G2 = flat_band_generator(S1, k, r2, M)
    g = np.array([[np.vdot(x, y) for y in (G, G2)] for x in (G, G2)])
    assert abs(np.linalg.det(g) / (g[0, 0] * g[1, 1])) > 1e-2
    W = wronskian(G, G2)
    assert np.abs(W).max() < 1e-8 * np.abs(G).max() * np.abs(G2).max()
    assert periodic_residual(W, k) < 1e-5 * np.abs(G).max() * np.abs(G2).max()


def test_generator_vanishes_at_shifted_zero(double_kernel):
    from chiral_magic.spectral import kernel_basis  # noqa: F401

    c = double_kernel[1].coeffs
    k, r = 0.7 - 0.5j, 1.1 + 0.3j
    zz = z_map(k + r) + 1e-9
    u = evaluate_spinor(c, 12, np.array([zz]))[:, 0]
    val = F_k(np.array([zz]), k + r) * F_k(np.array([zz]), -r) * u
    assert np.abs(val).max() < 1e-6


def test_shifted_generator_and_wp_projection(u2, double_kernel):
    M = 64
    S0 = sample_grid(double_kernel[0].coeffs, 12, M)
    S1 = sample_grid(double_kernel[1].coeffs, 12, M)
    G = shifted_generator(S0, 0.7 - 0.5j, Z_STACK, M)
    assert operator_residual(G, u2, ALPHA_U2, 0.7 - 0.5j, 20) < 1e-5
    _, _, z = grid_points(M)
    P = weierstrass_p(z) * S1
    c = np.vdot(S0, P) / np.vdot(S0, S0)
    assert np.linalg.norm(P - c * S0) < 1e-4 * np.linalg.norm(P)
