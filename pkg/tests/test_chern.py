from __future__ import annotations

import csv

import numpy as np
import pytest

from chiral_magic.algebra import K_POINT, OMEGA_C, Q1, Q2
from chiral_magic.bands import WAYPOINTS, k_grid
from chiral_magic.chern import (
    boundary_integral_c1,
    chern_plaquette,
    constant_frame_fn,
    curvature_field,
    extrema_report,
    fit_vanishing_order,
    flat_band_bundle,
    generator_frame,
    gram_symmetry_residual,
    gramian,
    numeric_curvature,
    numeric_frame,
    quasi_periodicity_residual,
    span_distance,
)
from chiral_magic.errors import NonQuantized

from conftest import ALPHA_U1, ALPHA_U2


@pytest.fixture(scope="module")
def bundle(u2):
    return flat_band_bundle(u2, ALPHA_U2, 12, 64)


@pytest.fixture(scope="module")
def sample_ks():
    rng = np.random.default_rng(7)
    ks = rng.uniform(-0.5, 0.5, (12, 2)) @ np.array([Q1, Q2])
    return ks[np.abs(ks) > 0.3]


def test_bundle_shape(bundle):
    assert bundle.rank == 2
    assert bundle.frames(np.array([0.3 + 0.2j])).shape == (1, 2 * 64 * 64, 2)


def test_plaquette_chern_minus_one(u2, bundle):
    res = chern_plaquette(u2, ALPHA_U2, n=24)
    assert res.c1 == -1
    assert abs(res.raw + 1) < 1e-6


def test_trivial_frame_has_zero_chern():
    res = chern_plaquette(None, None, n=8, M=16, frame_fn=constant_frame_fn(16))
    assert res.c1 == 0 and abs(res.raw) < 1e-8


def test_guard_rejects_coarse_sum():
    with pytest.raises(NonQuantized):
        chern_plaquette(None, None, n=4, M=16, frame_fn=constant_frame_fn(16), guard=-1.0)


def test_boundary_decomposition(u2, bundle):
    res = boundary_integral_c1(u2, ALPHA_U2, bundle=bundle)
    assert res.boundary_term == pytest.approx(-2, abs=0.05)
    assert res.puncture_term == pytest.approx(1, abs=0.05)
    assert res.imag_residue < 1e-3
    ana = boundary_integral_c1(u2, ALPHA_U2, bundle=bundle, method="analytic")
    assert ana.total == pytest.approx(res.total, abs=1e-4)


def test_curvature_symmetries(bundle, sample_ks):
    H = bundle.curvature(sample_ks)
    scale = np.abs(H).max()
    assert np.all(H >= -1e-6 * scale)
    assert np.allclose(bundle.curvature(OMEGA_C * sample_ks), H, rtol=1e-6)
    assert np.allclose(bundle.curvature(-sample_ks), H, rtol=1e-6)


def test_stencil_matches_analytic(bundle, sample_ks):
    a = bundle.curvature(sample_ks, "analytic")
    s = bundle.curvature(sample_ks, "stencil")
    assert np.allclose(s, a, rtol=1e-6)


def test_quasi_periodicity(bundle, sample_ks):
    ps = np.array([Q1, Q2, Q1 - Q2, -Q2, 2 * Q1, Q1 + Q2] * 2)[: len(sample_ks)]
    assert quasi_periodicity_residual(bundle, sample_ks, ps) < 1e-8


def test_gram_exchange_symmetry(bundle, sample_ks):
    assert gram_symmetry_residual(bundle, sample_ks) < 1e-8


def test_vanishing_order_at_gamma(bundle):
    q, g0 = fit_vanishing_order(bundle)
    assert abs(q - 2) < 0.2 and g0 > 0


def test_numeric_frame_agrees(u2, bundle):
    k = 0.9 + 0.4j
    Hn = numeric_curvature(u2, ALPHA_U2, k, 12, rank=2)
    Ht = bundle.curvature([k], "analytic")[0]
    assert abs(Hn - Ht) < 1e-4 * abs(Ht)


def test_orthonormal_frame_gram_is_identity(u2):
    fr = numeric_frame(u2, ALPHA_U2, 0.5 + 0.5j, 12, rank=2)
    G, g = gramian(fr)
    assert np.allclose(G, np.eye(2), atol=1e-12) and g == pytest.approx(1.0)


def test_generator_frame_same_span(bundle):
    k = 0.6 - 1.1j
    assert span_distance(bundle.frame(k), generator_frame(bundle, k)) < 1e-6


def test_curvature_field_and_csv(u2, bundle, tmp_path):
    f = curvature_field(u2, ALPHA_U2, n=12, bundle=bundle)
    assert f.H.shape == (144,) and np.isnan(f.H[f.mask]).all()
    # integral of H/π over the cell approximates |c₁|
    area = abs((np.conj(Q1) * Q2).imag)
    assert np.nansum(f.H) * area / 144 / np.pi == pytest.approx(1, abs=0.05)
    path = tmp_path / "H.csv"
    f.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["k_re", "k_im", "H"] and len(rows) == 1 + int((~f.mask).sum())


def test_extrema_locations(bundle):
    rep = extrema_report(bundle)
    assert rep["Gamma"]["H"] > rep["K"]["H"]
    assert rep["K"]["H"] == pytest.approx(rep["Kp"]["H"], rel=1e-8)
    assert rep["K"]["grad"] < 1e-5


def test_rank_one_bundle(u1):
    res = chern_plaquette(u1, ALPHA_U1, n=16)
    assert res.c1 == -1
    b = flat_band_bundle(u1, ALPHA_U1, 12, 64)
    assert boundary_integral_c1(u1, ALPHA_U1, bundle=b).total == pytest.approx(-1, abs=0.05)


def test_k_grid_avoids_dual_lattice():
    ks = k_grid(24)
    assert np.min(np.abs(ks)) > 0.01 * K_POINT
    assert WAYPOINTS["K"] == pytest.approx(K_POINT)
