from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.sparse as sp

from chiral_magic.algebra import K_POINT, MODE_SCALE, OMEGA_C, Q1
from chiral_magic.errors import NearDiracPoint, NonInvariant
from chiral_magic.fourier_ops import (
    TruncationParams,
    build_Ak,
    build_D,
    build_Tk,
    dump_matrix,
    potential_matrix,
    resolvent_diag,
    restrict_subspace,
    sector_basis,
)
from chiral_magic.potential import FourierPotential, SymmetryClass

N = 8


@pytest.fixture(scope="module")
def basis():
    return sector_basis(N)


def test_truncation_closed_under_rotation(basis):
    for comp in (1, 2):
        modes = {tuple(m) for m in basis.modes(comp)}
        rot = {(b - a, -a) for a, b in modes}
        assert rot == modes


def test_mode_counts(basis):
    assert basis.n == len(basis.modes(1)) == len(basis.modes(2))
    assert basis.n % 3 == 0
    # ν, ω̄ν, ω̄²ν stored consecutively
    nu = basis.nu(1)
    assert np.allclose(nu[1::3], nu[0::3] * OMEGA_C.conjugate())


def test_subspace_bases_orthonormal(basis):
    dims = 0
    for j in (0, 1, 2):
        B = basis.spinor_basis(j).toarray()
        assert np.allclose(B.conj().T @ B, np.eye(B.shape[1]), atol=1e-12)
        dims += B.shape[1]
    assert dims == 2 * basis.n
    full = np.hstack([basis.spinor_basis(j).toarray() for j in (0, 1, 2)])
    assert np.allclose(full.conj().T @ full, np.eye(2 * basis.n), atol=1e-12)


def test_resolvent_at_zero(basis):
    r = resolvent_diag(0, N)
    assert np.all(np.isfinite(r))
    assert np.allclose(r, 1 / basis.nu(1))
    assert np.allclose(np.abs(r[0::3]), np.abs(r[1::3]))


@pytest.mark.parametrize("k", [K_POINT, -K_POINT, K_POINT + Q1])
def test_resolvent_rejects_dirac_points(k):
    with pytest.raises(NearDiracPoint):
        resolvent_diag(k, N)


def test_u1_column_support(u1, basis):
    U = potential_matrix(u1, N, "U_plus").tocsc()
    counts = np.diff(U.indptr)
    # interior modes keep all three shifts
    interior = np.abs(basis.nu(2)) < 0.5 * np.abs(basis.nu(2)).max()
    assert set(counts[interior]) == {3}
    assert counts.max() == 3


def test_potential_matrix_matches_pointwise_product(u1, basis):
    U = potential_matrix(u1, N, "U_plus").tocsc()
    nu1, nu2 = basis.nu(1), basis.nu(2)
    z = np.array([0.13 + 0.21j, -0.4 + 0.05j, 0.3 - 0.33j, 0.01 + 0.6j, -0.2 - 0.1j])
    for col in range(5):
        lhs = u1.u_plus(z) * np.exp(1j * (np.conj(z) * nu2[col]).real)
        rows = U[:, col].nonzero()[0]
        rhs = sum(U[r, col] * np.exp(1j * (np.conj(z) * nu1[r]).real) for r in rows)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_potential_adjoint(u1, basis):
    conj = {p: c.conj() for p, c in u1.coeffs_plus.items()}
    P = FourierPotential(u1.coeffs_plus, conj, SymmetryClass.ROTATIONAL_ONLY, 1.0, u1.scale_sq, "adj")
    Up = potential_matrix(u1, N, "U_plus")
    Vm = potential_matrix(P, N, "U_minus")
    assert spla_norm(Up.conj().T - Vm) < 1e-12


def spla_norm(M):
    return float(np.abs(sp.csr_matrix(M)).max()) if sp.csr_matrix(M).nnz else 0.0


def test_odd_trace_vanishes(u1):
    T = build_Tk(u1, 0.3 + 0.2j, N)
    assert abs(T.diagonal().sum()) == 0


def test_A0_commutes_with_rotation(u1, basis):
    A = build_Ak(u1, 0, N).toarray()
    R = basis.rotation.toarray()
    assert np.abs(A @ R - R @ A).max() < 1e-10 * np.abs(A).max()


def test_rotation_conjugation_of_Ak(u1, basis):
    k = 0.37 - 0.52j
    R = basis.rotation.toarray()
    Ak = build_Ak(u1, k, N).toarray()
    conj = R.conj().T @ Ak @ R
    errs = [np.abs(conj - build_Ak(u1, w * k, N).toarray()).max() for w in (OMEGA_C, OMEGA_C.conjugate())]
    assert min(errs) < 1e-10 * np.abs(Ak).max()


def test_restrict_identity_and_spectrum(u1, basis):
    for j in (0, 1, 2):
        d = basis.component_basis(j).shape[1]
        assert np.allclose(restrict_subspace(sp.identity(basis.n), j, basis), np.eye(d))
    A = build_Ak(u1, 0, N)
    blocks = [np.linalg.eigvals(restrict_subspace(A, j, basis)) for j in (0, 1, 2)]
    full = np.linalg.eigvals(A.toarray())
    assert matched_distance(np.concatenate(blocks), full) < 1e-8
    assert matched_distance(blocks[0], blocks[1]) < 1e-8


def matched_distance(a, b):
    from scipy.optimize import linear_sum_assignment

    assert len(a) == len(b)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def test_restrict_rejects_non_invariant(u1, basis):
    with pytest.raises(NonInvariant):
        restrict_subspace(build_Ak(u1, 0.4 + 0.1j, N), 0, basis)


def test_D_at_zero_coupling_is_diagonal(u1, basis):
    D = build_D(u1, 0, 0.2, N)
    assert np.allclose(D.diagonal(), np.concatenate([basis.nu(1), basis.nu(2)]) + 0.2)
    off = D - sp.diags(D.diagonal())
    assert abs(off).max() == 0


def test_truncation_convergence(u1):
    # tr A₀² at N and 2N differ by O(N⁻²)
    vals = {n: (build_Ak(u1, 0, n) @ build_Ak(u1, 0, n)).diagonal().sum() for n in (8, 16, 32)}
    d1 = abs(vals[16] - vals[8])
    d2 = abs(vals[32] - vals[16])
    assert d2 < d1 / 2.5
    assert d1 < 50.0 / 8 ** 2 * abs(vals[32])


def test_dump_matrix(tmp_path, u1):
    p = tmp_path / "m.csv"
    dump_matrix(potential_matrix(u1, 3), p)
    lines = p.read_text().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) > 1


def test_truncation_params_basis():
    t = TruncationParams(6)
    assert t.basis.n == sector_basis(6).n
    assert math.isclose(abs(MODE_SCALE), 4 * math.pi / (3 * math.sqrt(3)))
