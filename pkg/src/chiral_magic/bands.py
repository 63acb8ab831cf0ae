"""Bloch bands of the chiral Hamiltonian and flat-band diagnostics.

``H_k(α) = [[0, (D(α) − k)*], [D(α) − k, 0]]`` has spectrum ``±`` the
singular values of ``D(α) − k``.  Bands are computed from those singular
values; the doubled Hermitian matrix is kept as a cross-check.  For complex
``α`` the singular values are still used and called bands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import K_POINT, MODE_SCALE, Q1, Q2
from .errors import InconclusiveGap
from .fourier_ops import TruncationParams, _as_params, build_D, potential_matrix
from .potential import FourierPotential

FLAT_THRESHOLD = 1e-4
# spectral scale: the smallest free-Dirac energy |K|
SPECTRAL_SCALE = K_POINT

WAYPOINTS = {
    "Gamma": 0j,
    "G": 0j,
    "K": complex(K_POINT),
    "Kp": K_POINT * complex(0.5, math.sqrt(3) / 2),
    "K'": K_POINT * complex(0.5, math.sqrt(3) / 2),
    "M": -Q2 / 2,
}


@dataclass
class BandGrid:
    ks: np.ndarray
    energies: np.ndarray  # (n_k, n_bands), nonnegative, ascending
    alpha: complex
    model: str = "chiral"
    beta: float = 0.0
    labels: dict[int, str] = field(default_factory=dict)

    def band(self, j: int) -> np.ndarray:
        """``E_j`` for ``j ≥ 1``."""
        return self.energies[:, j - 1]


def bands_at(
    pot: FourierPotential,
    alpha: complex,
    k: complex,
    t: TruncationParams | int,
    n_bands: int | None = None,
    method: str = "auto",
) -> np.ndarray:
    """Nonnegative bands ``E_1 ≤ E_2 ≤ …`` at one ``k``.

    ``method`` is ``"svd"`` (dense), ``"hermitian"`` (dense doubled matrix,
    nonnegative half), ``"sparse"`` (shift-invert Lanczos for the lowest
    ``n_bands``) or ``"auto"``.
    """
    Dsp = build_D(pot, alpha, -k, t)
    if method == "auto":
        small = n_bands is not None and 2 * n_bands + 2 < Dsp.shape[0] // 4
        method = "sparse" if small and Dsp.shape[0] > 400 else "svd"
    if method == "sparse":
        return _lowest_singular_values(Dsp, n_bands)
    D = Dsp.toarray()
    if method == "svd":
        e = np.sort(np.linalg.svd(D, compute_uv=False))
    elif method == "hermitian":
        n = D.shape[0]
        H = np.zeros((2 * n, 2 * n), dtype=complex)
        H[:n, n:] = D.conj().T
        H[n:, :n] = D
        w = np.linalg.eigvalsh(H)
        e = np.sort(np.abs(w))[::2]
    else:
        raise ValueError(f"unknown method {method!r}")
    return e if n_bands is None else e[:n_bands]


# shift for shift-invert Lanczos; never an eigenvalue in practice
_SIGMA = 1e-7 * math.pi


def _lowest_singular_values(D: sp.spmatrix, n_bands: int) -> np.ndarray:
    """Smallest singular values via shift-invert on the doubled matrix."""
    H = sp.bmat([[None, D.conj().T], [D, None]], format="csc")
    v0 = np.ones(H.shape[0], dtype=complex) / math.sqrt(H.shape[0])
    w = spla.eigsh(H, k=2 * n_bands + 2, sigma=_SIGMA, which="LM", v0=v0, return_eigenvectors=False)
    return np.sort(np.abs(w))[: 2 * n_bands : 2]


def k_grid(n: int) -> np.ndarray:
    """``n × n`` grid over the dual cell, offset by half a step from ``Λ*``."""
    x = (np.arange(n) + 0.5) / n - 0.5
    X, Y = np.meshgrid(x, x, indexing="ij")
    return (X * Q1 + Y * Q2).ravel()


def k_path(waypoints=("Gamma", "K", "M", "Gamma"), n_per_segment: int = 20) -> tuple[np.ndarray, dict[int, str]]:
    pts = [WAYPOINTS[w] if isinstance(w, str) else complex(w) for w in waypoints]
    ks, labels = [], {}
    for i, (a, b) in enumerate(zip(pts, pts[1:])):
        labels[len(ks)] = str(waypoints[i])
        ks.extend(a + (b - a) * s for s in np.arange(n_per_segment) / n_per_segment)
    labels[len(ks)] = str(waypoints[-1])
    ks.append(pts[-1])
    return np.array(ks), labels


def band_grid(
    pot: FourierPotential, alpha: complex, ks, t: TruncationParams | int, n_bands: int = 6
) -> BandGrid:
    ks = np.asarray(ks, dtype=complex)
    E = np.array([bands_at(pot, alpha, k, t, n_bands) for k in ks])
    return BandGrid(ks, E, complex(alpha))


@dataclass
class MultiplicityReport:
    m: int
    band_max: list[float]
    band_min: list[float]
    gap_min: float
    flat_max: float


def multiplicity(
    pot: FourierPotential,
    alpha: complex,
    ks,
    t: TruncationParams | int,
    flat_threshold: float = FLAT_THRESHOLD,
    gap_floor: float | None = None,
    n_bands: int = 6,
    grid: BandGrid | None = None,
) -> MultiplicityReport:
    """``m(α) = min{j > 0 : max_k E_{j+1} > gap_floor}``.

    Raises
    ------
    InconclusiveGap
        If ``max_k E_{m+1}`` is within a factor 10 of ``flat_threshold``.
    """
    if gap_floor is None:
        gap_floor = 1e-6 * SPECTRAL_SCALE
    g = grid if grid is not None else band_grid(pot, alpha, ks, t, n_bands)
    bmax = g.energies.max(axis=0)
    bmin = g.energies.min(axis=0)
    m = 0
    while m + 1 < len(bmax) and bmax[m] <= gap_floor:
        m += 1
    if m == 0:
        return MultiplicityReport(0, bmax.tolist(), bmin.tolist(), float(bmin[0]), 0.0)
    if bmax[m] < 10 * flat_threshold:
        raise InconclusiveGap(f"E_{m + 1} reaches only {bmax[m]:.3g}; flatness threshold {flat_threshold:g}")
    return MultiplicityReport(m, bmax.tolist(), bmin.tolist(), float(bmin[m]), float(bmax[m - 1]))


def gap_report(
    pot: FourierPotential, alpha: complex, ks, t: TruncationParams | int, m: int | None = None, n_bands: int = 6
) -> dict:
    """``flat_max = max_k E_m`` and ``gap_min = min_k E_{m+1}``."""
    g = band_grid(pot, alpha, ks, t, n_bands)
    if m is None:
        m = multiplicity(pot, alpha, ks, t, grid=g).m
    if m == 0:
        return {"m": 0, "flat_max": 0.0, "gap_min": float(g.energies[:, 0].min())}
    return {
        "m": m,
        "flat_max": float(g.energies[:, m - 1].max()),
        "gap_min": float(g.energies[:, m].min()),
    }


# --------------------------------------------------------------------------
# full (non-chiral) model
# --------------------------------------------------------------------------


def anti_chiral_potential(pot: FourierPotential) -> FourierPotential:
    """``V(z) = 2∂_z U₊(z)``: coefficient ``i·ν̄_s·a_s`` on each shift ``s``."""
    coeffs = {}
    for p, (e, a) in zip(pot.coeffs_plus, pot.shifts("plus")):
        nu = MODE_SCALE * complex(e)
        coeffs[p] = 1j * np.conj(nu) * a
    return FourierPotential(coeffs, coeffs, pot.symmetry_class, 1.0, None, f"d({pot.name})")


def full_bm_hamiltonian(
    pot: FourierPotential,
    alpha: complex,
    beta: float,
    k: complex,
    t: TruncationParams | int,
    anti: FourierPotential | None = None,
) -> np.ndarray:
    """``[[βA, (D(α) − k)*], [D(α) − k, βA]]`` with ``A = [[0, V], [V*, 0]]``."""
    t = _as_params(t)
    anti = anti_chiral_potential(pot) if anti is None else anti
    D = build_D(pot, alpha, -k, t)
    Vp = potential_matrix(anti, t, "U_plus")
    A = sp.bmat([[None, Vp], [Vp.conj().T, None]])
    H = sp.bmat([[beta * A, D.conj().T], [D, beta * A]])
    return H.toarray()


def full_bm_bands(
    pot: FourierPotential,
    alpha: complex,
    beta: float,
    k: complex,
    t: TruncationParams | int,
    anti: FourierPotential | None = None,
) -> np.ndarray:
    """All eigenvalues of the full-model Hamiltonian, ascending."""
    return np.linalg.eigvalsh(full_bm_hamiltonian(pot, alpha, beta, k, t, anti))
