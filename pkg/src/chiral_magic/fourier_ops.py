"""Fourier-space matrices for the chiral operator.

Component 1 of a spinor carries modes in ``−K + Λ*`` and component 2
modes in ``K + Λ*``.  With ``2D_z̄ e_ν = ν e_ν`` the operators are::

    D(α) + k = [[diag(ν₁) + k, αU₊], [αU₋, diag(ν₂) + k]]
    T_k      = R(k) V,      R(k) = diag(1/(ν − k))
    A_k      = R₁(k) U₊ R₂(k) U₋          (acts on component 1)

Modes are stored orbit by orbit: rows ``3o, 3o+1, 3o+2`` hold
``ν, ω̄ν, ω̄²ν`` for orbit ``o``.  Rotation ``Ω u(z) = u(ωz)`` sends
``e_ν ↦ e_{ω̄ν}``, and the rotational subspace ``L²_{0,j}`` is the
``Ω = ω̄^j`` eigenspace, spanned by ``Σ_h ω^{jh} e_{ω̄^h ν}/√3``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import E_K, MODE_SCALE, OMEGA_C, Sector, distance_to_dirac
from .errors import NearDiracPoint, NonInvariant
from .potential import FourierPotential


@dataclass(frozen=True)
class TruncationParams:
    """Mode truncation.

    A mode ``ν = sK + m q₁ + n q₂`` is kept when every member of its
    rotation orbit satisfies ``max(|m|, |n|) ≤ N``.  The kept set is
    therefore closed under rotation.
    """

    N: int
    dirac_tol: float = 1e-6

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")

    @property
    def basis(self) -> SectorBasis:
        return sector_basis(self.N)


def _mn(ab: np.ndarray, s: int) -> np.ndarray:
    return (ab - s * np.array([E_K.a, E_K.b])) // 3


def _rotbar(ab: np.ndarray) -> np.ndarray:
    a, b = ab[..., 0], ab[..., 1]
    return np.stack([b - a, -a], axis=-1)


class SectorBasis:
    """Mode bookkeeping for one truncation radius."""

    def __init__(self, N: int):
        self.N = N
        self.modes1 = self._sector_modes(Sector.MINUS_K)
        self.modes2 = self._sector_modes(Sector.PLUS_K)
        self.n = len(self.modes1)
        if len(self.modes2) != self.n:
            raise RuntimeError("sector sizes differ")
        self.nu1 = MODE_SCALE * (self.modes1[:, 0] + self.modes1[:, 1] * OMEGA_C)
        self.nu2 = MODE_SCALE * (self.modes2[:, 0] + self.modes2[:, 1] * OMEGA_C)
        self._off = int(max(np.abs(self.modes1).max(), np.abs(self.modes2).max())) + 1
        self._lut1 = self._lookup(self.modes1)
        self._lut2 = self._lookup(self.modes2)

    def _sector_modes(self, sector: Sector) -> np.ndarray:
        s = int(sector)
        N = self.N
        m = np.arange(-N, N + 1)
        mm, nn = np.meshgrid(m, m, indexing="ij")
        ab = np.stack([3 * mm.ravel() + s * E_K.a, 3 * nn.ravel() + s * E_K.b], axis=1)
        keep = np.ones(len(ab), dtype=bool)
        r = ab
        for _ in range(2):
            r = _rotbar(r)
            keep &= np.abs(_mn(r, s)).max(axis=1) <= N
        ab = ab[keep]
        # orbit representative: lexicographically smallest member
        r1 = _rotbar(ab)
        r2 = _rotbar(r1)
        stack = np.stack([ab, r1, r2], axis=1)
        key = stack[..., 0] * 100003 + stack[..., 1]
        rep_is_self = (key[:, 0] < key[:, 1]) & (key[:, 0] < key[:, 2])
        reps = ab[rep_is_self]
        norms = reps[:, 0] ** 2 - reps[:, 0] * reps[:, 1] + reps[:, 1] ** 2
        order = np.lexsort((reps[:, 1], reps[:, 0], norms))
        reps = reps[order]
        out = np.empty((3 * len(reps), 2), dtype=np.int64)
        out[0::3] = reps
        out[1::3] = _rotbar(reps)
        out[2::3] = _rotbar(_rotbar(reps))
        return out

    def _lookup(self, modes: np.ndarray) -> np.ndarray:
        size = 2 * self._off + 1
        lut = -np.ones((size, size), dtype=np.int64)
        lut[modes[:, 0] + self._off, modes[:, 1] + self._off] = np.arange(len(modes))
        return lut

    def index_of(self, ab: np.ndarray, component: int) -> np.ndarray:
        """Row indices of Eisenstein labels ``ab``; ``-1`` when not kept."""
        ab = np.asarray(ab)
        lut = self._lut1 if component == 1 else self._lut2
        a = ab[..., 0] + self._off
        b = ab[..., 1] + self._off
        inside = (a >= 0) & (a < lut.shape[0]) & (b >= 0) & (b < lut.shape[1])
        out = -np.ones(a.shape, dtype=np.int64)
        out[inside] = lut[a[inside], b[inside]]
        return out

    def modes(self, component: int) -> np.ndarray:
        return self.modes1 if component == 1 else self.modes2

    def nu(self, component: int) -> np.ndarray:
        return self.nu1 if component == 1 else self.nu2

    @property
    def n_orbits(self) -> int:
        return self.n // 3

    @staticmethod
    def phase_vector(j: int) -> np.ndarray:
        return np.array([OMEGA_C ** (j * h) for h in range(3)]) / np.sqrt(3)

    @lru_cache(maxsize=None)
    def component_basis(self, j: int) -> sp.csr_matrix:
        """Columns ``e_[ν]`` of ``L²_{0,j}`` in one component (n × n/3)."""
        x = self.phase_vector(j % 3).reshape(3, 1)
        return sp.kron(sp.identity(self.n_orbits, format="csr"), sp.csr_matrix(x), format="csr")

    @lru_cache(maxsize=None)
    def spinor_basis(self, j: int) -> sp.csr_matrix:
        b = self.component_basis(j)
        return sp.block_diag([b, b], format="csr")

    def basis_for(self, dim: int, j: int) -> sp.csr_matrix:
        if dim == self.n:
            return self.component_basis(j)
        if dim == 2 * self.n:
            return self.spinor_basis(j)
        raise ValueError(f"matrix dimension {dim} does not match the truncation")

    @cached_property
    def rotation(self) -> sp.csr_matrix:
        """Ω on one component: ``e_ν ↦ e_{ω̄ν}``."""
        p3 = sp.csr_matrix(np.roll(np.eye(3), 1, axis=0))
        return sp.kron(sp.identity(self.n_orbits, format="csr"), p3, format="csr")

    @cached_property
    def spinor_rotation(self) -> sp.csr_matrix:
        return sp.block_diag([self.rotation, self.rotation], format="csr")


@lru_cache(maxsize=32)
def sector_basis(N: int) -> SectorBasis:
    return SectorBasis(N)


def _as_params(t) -> TruncationParams:
    return t if isinstance(t, TruncationParams) else TruncationParams(int(t))


def check_admissible(k: complex, t: TruncationParams) -> None:
    d = distance_to_dirac(complex(k))
    if d < t.dirac_tol:
        raise NearDiracPoint(f"k = {complex(k)} lies within {d:.3g} of ±K + Λ*")


def resolvent_diag(k: complex, t: TruncationParams | int, component: int = 1) -> np.ndarray:
    """Diagonal of ``R(k) = (2D_z̄ − k)⁻¹`` on one component."""
    t = _as_params(t)
    check_admissible(k, t)
    return 1.0 / (t.basis.nu(component) - k)


def potential_matrix(pot: FourierPotential, t: TruncationParams | int, which: str = "U_plus") -> sp.csr_matrix:
    """Multiplication by ``U₊`` (component 2 → 1) or ``U₋`` (1 → 2).

    Shifted modes that leave the truncation are dropped.
    """
    t = _as_params(t)
    b = t.basis
    if which in ("U_plus", "plus"):
        src, dst, sign, shifts = 2, 1, +1, pot.shifts("plus")
    elif which in ("U_minus", "minus"):
        src, dst, sign, shifts = 1, 2, -1, pot.shifts("minus")
    else:
        raise ValueError(f"unknown potential block {which!r}")
    modes = b.modes(src)
    rows, cols, vals = [], [], []
    col = np.arange(len(modes))
    for e, a in shifts:
        tgt = b.index_of(modes + sign * np.array([e.a, e.b]), dst)
        ok = tgt >= 0
        rows.append(tgt[ok])
        cols.append(col[ok])
        vals.append(np.full(int(ok.sum()), a, dtype=complex))
    if not rows:
        return sp.csr_matrix((b.n, b.n), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(b.n, b.n)
    )


def potential_blocks(pot: FourierPotential, t: TruncationParams | int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    return potential_matrix(pot, t, "U_plus"), potential_matrix(pot, t, "U_minus")


def build_V(pot: FourierPotential, t: TruncationParams | int) -> sp.csr_matrix:
    up, um = potential_blocks(pot, t)
    return sp.bmat([[None, up], [um, None]], format="csr")


def build_Tk(pot: FourierPotential, k: complex, t: TruncationParams | int) -> sp.csr_matrix:
    """Birman–Schwinger operator ``T_k = R(k)V`` on spinors."""
    t = _as_params(t)
    r = np.concatenate([resolvent_diag(k, t, 1), resolvent_diag(k, t, 2)])
    return sp.diags(r) @ build_V(pot, t)


def build_Ak(pot: FourierPotential, k: complex, t: TruncationParams | int) -> sp.csr_matrix:
    """``A_k = R₁ U₊ R₂ U₋``, the component-1 block of ``T_k²``."""
    t = _as_params(t)
    up, um = potential_blocks(pot, t)
    r1 = sp.diags(resolvent_diag(k, t, 1))
    r2 = sp.diags(resolvent_diag(k, t, 2))
    return (r1 @ up @ r2 @ um).tocsr()


def build_D(pot: FourierPotential, alpha: complex, k: complex, t: TruncationParams | int) -> sp.csr_matrix:
    """Truncated ``D(α) + k``."""
    t = _as_params(t)
    b = t.basis
    up, um = potential_blocks(pot, t)
    d1 = sp.diags(b.nu1 + k)
    d2 = sp.diags(b.nu2 + k)
    return sp.bmat([[d1, alpha * up], [alpha * um, d2]], format="csr")


def restrict_subspace(M, j: int, basis: SectorBasis, tol: float = 1e-9, dense: bool = True):
    """Compression of ``M`` to ``L²_{0,j}``.

    Returns a dense array, or a sparse matrix when ``dense=False``.

    Raises
    ------
    NonInvariant
        When ``M`` leaks out of the subspace by more than ``tol`` relative.
    """
    M = sp.csr_matrix(M)
    B = basis.basis_for(M.shape[0], j)
    MB = (M @ B).tocsr()
    blk = (B.conj().T @ MB).tocsr()
    leak = spla.norm(MB - B @ blk)
    scale = spla.norm(MB)
    if scale > 0 and leak > tol * scale:
        raise NonInvariant(f"leakage {leak / scale:.3g} out of L²_(0,{j}) exceeds {tol:g}")
    return blk.toarray() if dense else blk


def D_block(pot: FourierPotential, alpha: complex, j: int, t: TruncationParams | int, k: complex = 0.0) -> np.ndarray:
    """``D(α) + k`` from ``L²_{0,j}`` to ``L²_{0,j−1}`` (exact at ``k = 0``)."""
    t = _as_params(t)
    b = t.basis
    D = build_D(pot, alpha, k, t)
    Bin = b.spinor_basis(j % 3)
    Bout = b.spinor_basis((j - 1) % 3)
    return (Bout.conj().T @ (D @ Bin)).toarray()


def dump_matrix(M, path) -> None:
    """Write ``M`` as CSV triplets ``row, col, re, im``."""
    coo = sp.coo_matrix(M)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for r, c, v in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
            w.writerow([r, c, repr(float(np.real(v))), repr(float(np.imag(v)))])
