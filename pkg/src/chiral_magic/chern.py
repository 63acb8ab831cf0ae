"""Flat-band topology: Gramian, Berry curvature and the Chern number.

At a magic ``α`` the kernels ``V(k) = ker(D(α) + k)`` form a rank-``r``
bundle over the dual torus.  A holomorphic frame comes from theta
functions: with ``u₀`` a ``k = 0`` kernel vector vanishing at the points
``w_1 … w_r``, the vectors ``F_k(z − w_j) u₀(z)`` span ``V(k)``.  The
Gramian determinant ``g(k)`` of that frame gives the curvature
``H = ∂_k̄∂_k log g`` and ``c₁ = −(1/π)∫ H``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .algebra import K_POINT, OMEGA_C, Q1, Q2, Z_STACK, lattice_coords, z_map
from .bands import WAYPOINTS, k_grid
from .errors import ContourTooClose, NonQuantized, SingularSample
from .fourier_ops import TruncationParams, _as_params, build_D
from .potential import FourierPotential
from .spectral import kernel_basis
from .theta import THETA, grid_points, sample_grid, zero_census

log = logging.getLogger(__name__)

MASK_RADIUS = 0.05 * abs(Q1)
G_FLOOR = 1e-14
STENCIL_STEP = 5e-3
_DZ = z_map(1.0)  # z'(k), constant
# high-symmetry zero locations; census results are snapped onto these
_SPECIAL = (0j, Z_STACK, -Z_STACK)


@dataclass
class KernelFrame:
    """Frame of ``V(k)``: columns are sampled spinors or Fourier coefficients."""

    k: complex
    kind: str  # "theta", "numeric", "generator" or "constant"
    vectors: np.ndarray  # (dim, rank)
    representation: str = "grid"

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


def gramian(frame: KernelFrame | np.ndarray) -> tuple[np.ndarray, float]:
    """``G_ij = ⟨u_i, u_j⟩`` and ``g = det G``.

    Grid samples use the cell mean (trapezoidal rule on a periodic grid);
    coefficient vectors use the plain ℓ² product, which agrees by Parseval.
    """
    A = frame.vectors if isinstance(frame, KernelFrame) else np.asarray(frame)
    scale = A.shape[0] // 2 if _is_grid(frame) else 1
    G = A.conj().T @ A / scale
    return G, float(np.linalg.det(G).real)


def _is_grid(frame) -> bool:
    return isinstance(frame, KernelFrame) and frame.representation == "grid"


def _in_mask(ks: np.ndarray, radius: float = MASK_RADIUS) -> np.ndarray:
    """``True`` where ``k`` lies within ``radius`` of ``Λ*``."""
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    out = np.zeros(ks.shape, dtype=bool)
    for i, k in enumerate(ks.ravel()):
        x, y = lattice_coords(z_map(k))
        for dx in (0, 1):
            for dy in (0, 1):
                p = (math.floor(x) + dx) * Q1 + (math.floor(y) + dy) * Q2
                if abs(k - p) < radius:
                    out.flat[i] = True
    return out


def _snap(z: complex, tol: float = 1e-6) -> complex:
    for w in _SPECIAL:
        for m in (-1, 0, 1):
            for n in (-1, 0, 1):
                if abs(z - w - m - n * OMEGA_C) < tol:
                    return w
    return z


class FlatBandBundle:
    """Theta frame of the flat-band bundle at one magic ``α``.

    Parameters
    ----------
    pot, alpha
        Potential and magic coupling.
    t
        Truncation used to compute the ``k = 0`` kernel.
    M
        Real-space grid size for sampled frames.
    """

    def __init__(self, pot: FourierPotential, alpha: complex, t: TruncationParams | int = 12, M: int = 64):
        self.pot = pot
        self.alpha = complex(alpha)
        self.t = _as_params(t)
        self.M = M
        kv = kernel_basis(pot, alpha, 0, self.t)
        self.kernel = kv
        by_sub = {v.subspace: v for v in kv}
        if len(kv) == 2 and 0 in by_sub:
            u = by_sub[0]
        elif len(kv) == 1:
            u = kv[0]
        else:
            raise SingularSample(f"unsupported kernel pattern {[v.subspace for v in kv]}")
        self.u0 = u
        zeros = [z for z in zero_census(u.coeffs, self.t, M) if z.order == 1]
        if len(zeros) != len(kv):
            raise SingularSample(f"expected {len(kv)} simple zeros of u₀, found {len(zeros)}")
        self.shifts = tuple(_snap(z.location) for z in zeros)
        samp = sample_grid(u.coeffs, self.t, M)
        self.u0_samples = samp.reshape(2, -1)
        _, _, z = grid_points(M)
        self.z = z.ravel()
        self._den = [THETA(self.z - w) for w in self.shifts]

    @property
    def rank(self) -> int:
        return len(self.shifts)

    # frames ---------------------------------------------------------------

    def _factors(self, ks: np.ndarray, deriv: bool = False):
        """``F_k(z − w_j)`` (and ``∂_k``) as arrays ``(r, P, nk)``."""
        zk = z_map(ks)
        F, dF = [], []
        for w, den in zip(self.shifts, self._den):
            zeta = self.z - w
            ex = np.exp(-np.outer(zeta.imag, ks)) / den[:, None]
            num = THETA.shifted(zeta, zk)
            F.append(ex * num)
            if deriv:
                num1 = THETA.shifted(zeta, zk, 1)
                dF.append(ex * (-zeta.imag[:, None] * num - _DZ * num1))
        return np.array(F), (np.array(dF) if deriv else None)

    def frames(self, ks, deriv: bool = False):
        """Sampled frames ``(nk, 2P, r)``; with ``deriv`` also ``∂_k``."""
        ks = np.atleast_1d(np.asarray(ks, dtype=complex))
        F, dF = self._factors(ks, deriv)
        u = self.u0_samples
        A = np.concatenate([u[0][None, :, None] * F, u[1][None, :, None] * F], axis=1)
        A = np.transpose(A, (2, 1, 0))
        if not deriv:
            return A
        dA = np.concatenate([u[0][None, :, None] * dF, u[1][None, :, None] * dF], axis=1)
        return A, np.transpose(dA, (2, 1, 0))

    def frame(self, k: complex) -> KernelFrame:
        return KernelFrame(complex(k), "theta", self.frames([k])[0])

    # Gramian quantities ---------------------------------------------------

    def _chunks(self, ks: np.ndarray, size: int = 64):
        for i in range(0, len(ks), size):
            yield ks[i : i + size]

    def gram(self, ks) -> np.ndarray:
        """``G(k)`` for each ``k``: ``(nk, r, r)``."""
        ks = np.atleast_1d(np.asarray(ks, dtype=complex))
        P = self.z.size
        out = [np.einsum("kpi,kpj->kij", A.conj(), A) / P for A in map(self.frames, self._chunks(ks))]
        return np.concatenate(out) if out else np.zeros((0, self.rank, self.rank), complex)

    def g(self, ks) -> np.ndarray:
        return np.linalg.det(self.gram(ks)).real

    def log_g(self, ks) -> np.ndarray:
        gv = self.g(ks)
        if np.any(gv < G_FLOOR):
            raise SingularSample(f"g = {gv.min():.3g} below {G_FLOOR:g}")
        return np.log(gv)

    def _gce(self, ks):
        """``G = A*A``, ``C = A*A'`` and ``E = A'*A'`` per ``k``."""
        P = self.z.size
        Gs, Cs, Es = [], [], []
        for chunk in self._chunks(np.atleast_1d(np.asarray(ks, dtype=complex))):
            A, dA = self.frames(chunk, deriv=True)
            Gs.append(np.einsum("kpi,kpj->kij", A.conj(), A) / P)
            Cs.append(np.einsum("kpi,kpj->kij", A.conj(), dA) / P)
            Es.append(np.einsum("kpi,kpj->kij", dA.conj(), dA) / P)
        return np.concatenate(Gs), np.concatenate(Cs), np.concatenate(Es)

    def dlog_g(self, ks) -> np.ndarray:
        """``∂_k log g = tr(G⁻¹ C)`` (Jacobi's formula)."""
        G, C, _ = self._gce(ks)
        return np.trace(np.linalg.solve(G, C), axis1=1, axis2=2)

    def curvature(self, ks, method: str = "stencil", h: float = STENCIL_STEP) -> np.ndarray:
        """``H(k) = ∂_k̄∂_k log g``.

        ``"stencil"`` is a quarter of the five-point Laplacian of ``log g``,
        Richardson-combined over steps ``h`` and ``2h``; ``"analytic"`` is
        ``tr(G⁻¹(E − C*G⁻¹C))``.  Imaginary residue above ``1e−10·|H|``
        raises.
        """
        ks = np.atleast_1d(np.asarray(ks, dtype=complex))
        if method == "stencil":
            d = np.array([1, -1, 1j, -1j])
            pts = np.concatenate([ks, *(ks + h * e for e in d), *(ks + 2 * h * e for e in d)])
            L = self.log_g(pts).reshape(9, -1)
            lap1 = (L[1:5].sum(axis=0) - 4 * L[0]) / (h * h)
            lap2 = (L[5:9].sum(axis=0) - 4 * L[0]) / (4 * h * h)
            return (4 * lap1 - lap2) / 12
        if method != "analytic":
            raise ValueError(f"unknown method {method!r}")
        G, C, E = self._gce(ks)
        GiC = np.linalg.solve(G, C)
        Hc = np.trace(np.linalg.solve(G, E - C.conj().transpose(0, 2, 1) @ GiC), axis1=1, axis2=2)
        bad = np.abs(Hc.imag) > 1e-10 * np.maximum(np.abs(Hc.real), 1.0)
        if np.any(bad):
            raise SingularSample(f"curvature has imaginary part {np.abs(Hc.imag).max():.3g}")
        return Hc.real


@lru_cache(maxsize=8)
def _bundle_cached(pot: FourierPotential, alpha: complex, N: int, M: int) -> FlatBandBundle:
    return FlatBandBundle(pot, alpha, N, M)


def flat_band_bundle(pot: FourierPotential, alpha: complex, t: TruncationParams | int = 12, M: int = 64) -> FlatBandBundle:
    return _bundle_cached(pot, complex(alpha), _as_params(t).N, M)


def theta_frame(pot: FourierPotential, alpha: complex, k: complex, t: TruncationParams | int = 12, M: int = 64) -> KernelFrame:
    return flat_band_bundle(pot, alpha, t, M).frame(k)


def numeric_frame(
    pot: FourierPotential, alpha: complex, k: complex, t: TruncationParams | int = 12, rank: int | None = None
) -> KernelFrame:
    """Orthonormal frame from the smallest right singular vectors of ``D(α) + k``."""
    t = _as_params(t)
    D = build_D(pot, alpha, k, t).toarray()
    _, s, vh = np.linalg.svd(D)
    if rank is None:
        rank = int(np.sum(s < 1e-8 * s[0]))
    V = vh[len(s) - rank :].conj().T
    return KernelFrame(complex(k), "numeric", V, "coeffs")


def generator_frame(bundle: FlatBandBundle, k: complex, rs=(0.37 + 0.81j, -0.93 + 0.22j)) -> KernelFrame:
    """Alternative rank-2 frame ``F_{k+r}(z)F_{−r}(z)u₁(z)`` from the ``L²_{0,1}`` vector."""
    u1 = next(v for v in bundle.kernel if v.subspace == 1)
    S = sample_grid(u1.coeffs, bundle.t, bundle.M).reshape(2, -1)
    z = bundle.z
    cols = []
    for r in rs:
        f = np.exp(-z.imag * (k + r)) * THETA(z - z_map(k + r)) / THETA(z)
        f = f * np.exp(z.imag * r) * THETA(z + z_map(r)) / THETA(z)
        cols.append(np.concatenate([S[0] * f, S[1] * f]))
    return KernelFrame(complex(k), "generator", np.array(cols).T)


def span_distance(a: KernelFrame, b: KernelFrame) -> float:
    """Largest sine of the principal angles between two frames."""
    qa, _ = np.linalg.qr(a.vectors)
    qb, _ = np.linalg.qr(b.vectors)
    s = np.linalg.svd(qa.conj().T @ qb, compute_uv=False)
    return float(math.sqrt(max(0.0, 1.0 - float(s.min()) ** 2)))


def numeric_curvature(
    pot: FourierPotential, alpha: complex, k: complex, t: TruncationParams | int = 12, h: float = 3e-3, rank: int | None = None
) -> float:
    """``H(k)`` from a small gauge-invariant loop of numeric frames.

    The loop phase ``φ = arg Π det(U_a* U_b)`` of a square of side ``h`` is
    ``−i∮tr(U*dU) = 2H h²`` to leading order.
    """
    corners = [k + h * (-0.5 - 0.5j), k + h * (0.5 - 0.5j), k + h * (0.5 + 0.5j), k + h * (-0.5 + 0.5j)]
    fr = [numeric_frame(pot, alpha, c, t, rank).vectors for c in corners]
    prod = 1.0 + 0j
    for a, b in zip(fr, fr[1:] + fr[:1]):
        prod *= np.linalg.det(a.conj().T @ b)
    return float(np.angle(prod)) / (2 * h * h)


# --------------------------------------------------------------------------
# curvature fields
# --------------------------------------------------------------------------


@dataclass
class CurvatureField:
    ks: np.ndarray
    H: np.ndarray  # NaN on masked points
    mask: np.ndarray
    g: np.ndarray
    method: str = "stencil"
    n: int = 0

    def unmasked(self) -> np.ndarray:
        return self.H[~self.mask]

    def extremum_points(self) -> dict:
        H = np.where(self.mask, np.nan, self.H)
        i_max, i_min = int(np.nanargmax(H)), int(np.nanargmin(H))
        return {"max": (complex(self.ks[i_max]), float(H[i_max])), "min": (complex(self.ks[i_min]), float(H[i_min]))}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k_re", "k_im", "H"])
            for k, h, m in zip(self.ks, self.H, self.mask):
                if not m:
                    w.writerow([repr(float(k.real)), repr(float(k.imag)), repr(float(h))])


def curvature_field(
    pot: FourierPotential,
    alpha: complex,
    n: int = 24,
    t: TruncationParams | int = 12,
    M: int = 64,
    method: str = "stencil",
    bundle: FlatBandBundle | None = None,
) -> CurvatureField:
    """``H`` on the half-offset ``n × n`` grid over the dual cell.

    Raises
    ------
    SingularSample
        If ``g`` drops below ``1e−14`` at an unmasked point.
    """
    b = bundle or flat_band_bundle(pot, alpha, t, M)
    ks = k_grid(n)
    mask = _in_mask(ks)
    H = np.full(ks.shape, np.nan)
    gv = b.g(ks)
    if np.any(gv[~mask] < G_FLOOR):
        raise SingularSample(f"g = {gv[~mask].min():.3g} at an unmasked point")
    H[~mask] = b.curvature(ks[~mask], method)
    return CurvatureField(ks, H, mask, gv, method, n)


def cross_section(bundle: FlatBandBundle, ky, kx: float = 0.0, method: str = "stencil") -> np.ndarray:
    """``H(kx + i·ky)`` along a vertical line (default ``k_x = 0``)."""
    ky = np.asarray(ky, dtype=float)
    return bundle.curvature(kx + 1j * ky, method)


def curvature_gradient(bundle: FlatBandBundle, k: complex, h: float = 1e-3 * K_POINT, method: str = "analytic") -> complex:
    """``∂_x H + i ∂_y H`` by central differences."""
    v = bundle.curvature(np.array([k + h, k - h, k + 1j * h, k - 1j * h]), method)
    return complex((v[0] - v[1]) / (2 * h), (v[2] - v[3]) / (2 * h))


def extrema_report(bundle: FlatBandBundle, field: CurvatureField | None = None) -> dict:
    """``H`` and its gradient at ``K``, ``K′`` and near ``Γ``.

    ``Γ`` itself is a zero of ``g``; the gradient there is estimated from a
    symmetric pair at distance ``0.05|K|``.
    """
    out: dict = {}
    for name in ("K", "Kp"):
        k = WAYPOINTS[name]
        out[name] = {"H": float(bundle.curvature([k], "analytic")[0]), "grad": abs(curvature_gradient(bundle, k))}
    d = 0.05 * K_POINT
    pts = np.array([d, -d, 1j * d, -1j * d])
    v = bundle.curvature(pts, "analytic")
    out["Gamma"] = {"H": float(v.mean()), "grad": float(math.hypot(v[0] - v[1], v[2] - v[3]) / (2 * d))}
    if field is not None:
        out["grid"] = {key: {"k": [val[0].real, val[0].imag], "H": val[1]} for key, val in field.extremum_points().items()}
    return out


# --------------------------------------------------------------------------
# Chern number
# --------------------------------------------------------------------------


def _wrap(frames: np.ndarray, z: np.ndarray, p: complex) -> np.ndarray:
    """Frames at ``k + p`` from frames at ``k``: multiply by ``e^{−i⟨p,z⟩}``."""
    ph = np.exp(-1j * (np.conj(p) * z).real)
    ph2 = np.concatenate([ph, ph])
    return frames * ph2[None, :, None]


def _link(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``det(a_i* b_i)`` over a batch."""
    return np.linalg.det(np.einsum("kpi,kpj->kij", a.conj(), b))


@dataclass
class PlaquetteResult:
    c1: int
    raw: float
    n: int
    min_link: float


def chern_plaquette(
    pot: FourierPotential | None,
    alpha: complex | None,
    n: int = 24,
    t: TruncationParams | int = 12,
    M: int = 64,
    frame_fn=None,
    guard: float = 0.05,
) -> PlaquetteResult:
    """Chern number from overlap-determinant link variables.

    The phase sum over all plaquettes is ``−i∫tr F``, so
    ``c₁ = (i/2π)∫tr F`` is minus the sum over ``2π``.  Frames on the half-offset grid ``x_a q₁ + y_b q₂`` are processed one
    row at a time; links across the cell boundary use the frame at the
    first point multiplied by ``e^{−i⟨p,z⟩}``.  ``frame_fn(ks)`` overrides
    the theta frame (it must return ``(nk, 2P, r)`` samples on the
    ``M × M`` grid).

    Raises
    ------
    NonQuantized
        If the plaquette sum is not within ``guard`` of an integer.
    """
    if frame_fn is None:
        frame_fn = flat_band_bundle(pot, alpha, t, M).frames
    _, _, z = grid_points(M)
    z = z.ravel()
    x = (np.arange(n) + 0.5) / n - 0.5

    def row(b: int) -> np.ndarray:
        ks = x * Q1 + x[b] * Q2
        A = frame_fn(ks)
        return np.concatenate([A, _wrap(A[:1], z, Q1)])

    first = row(0)
    cur = first
    total = 0.0
    min_link = np.inf
    for b in range(n):
        nxt = row(b + 1) if b + 1 < n else _wrap(first, z, Q2)
        u1 = _link(cur[:-1], cur[1:])  # (a,b) → (a+1,b)
        u2 = _link(cur[1:], nxt[1:])  # (a+1,b) → (a+1,b+1)
        u3 = _link(nxt[1:], nxt[:-1])  # (a+1,b+1) → (a,b+1)
        u4 = _link(nxt[:-1], cur[:-1])  # (a,b+1) → (a,b)
        total += float(np.sum(np.angle(u1 * u2 * u3 * u4)))
        min_link = min(min_link, float(np.min(np.abs(np.concatenate([u1, u2])))))
        cur = nxt
    raw = -total / (2 * math.pi)
    c = round(raw)
    if abs(raw - c) > guard:
        raise NonQuantized(f"plaquette sum {raw:.4f} is not near an integer; refine the grid")
    return PlaquetteResult(int(c), raw, n, min_link)


def constant_frame_fn(M: int, rank: int = 2, seed: int = 0):
    """Frame function for a trivial bundle: fixed vectors times the ``k``-phase.

    ``e^{−i⟨k,z⟩}v`` is a global frame over the torus, so its Chern number
    is ``0``.
    """
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((2 * M * M, rank)) + 1j * rng.standard_normal((2 * M * M, rank))
    _, _, z = grid_points(M)
    z = z.ravel()

    def fn(ks):
        ks = np.atleast_1d(ks)
        ph = np.exp(-1j * (np.conj(ks)[:, None] * z[None, :]).real)
        ph2 = np.concatenate([ph, ph], axis=1)
        return ph2[:, :, None] * V[None]

    return fn


@dataclass
class BoundaryResult:
    boundary_term: float
    puncture_term: float
    total: float
    imag_residue: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"boundary": self.boundary_term, "puncture": self.puncture_term, "c1": self.total}


def _gauss_edges(n_quad: int):
    """Nodes and weights ``(k, dk·w)`` along the positively oriented cell boundary."""
    s, w = np.polynomial.legendre.leggauss(n_quad)
    s = 0.5 * s
    w = 0.5 * w
    corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
    ks, dks = [], []
    for (x0, y0), (x1, y1) in zip(corners, corners[1:] + corners[:1]):
        a = x0 * Q1 + y0 * Q2
        b = x1 * Q1 + y1 * Q2
        ks.append((a + b) / 2 + s * (b - a))
        dks.append(w * (b - a))
    return np.concatenate(ks), np.concatenate(dks)


def _dlog_fd(bundle: FlatBandBundle, ks: np.ndarray, h: float) -> np.ndarray:
    pts = np.concatenate([ks + h, ks - h, ks + 1j * h, ks - 1j * h])
    L = bundle.log_g(pts).reshape(4, -1)
    return ((L[0] - L[1]) - 1j * (L[2] - L[3])) / (4 * h)


def boundary_integral_c1(
    pot: FourierPotential,
    alpha: complex,
    t: TruncationParams | int = 12,
    M: int = 64,
    n_quad: int = 64,
    eps: float = 0.02 * K_POINT,
    n_circle: int = 64,
    method: str = "fd",
    h: float = STENCIL_STEP,
    bundle: FlatBandBundle | None = None,
) -> BoundaryResult:
    """``c₁`` as a cell-boundary integral minus a small circle around ``Γ``.

    ``∂_k log g`` is taken by central differences (``"fd"``) or by Jacobi's
    formula (``"analytic"``).  Gauss–Legendre nodes on each edge; the
    trapezoidal rule on the circle.

    Raises
    ------
    ContourTooClose
        If a boundary node lies within the mask radius of ``Λ*``.
    """
    b = bundle or flat_band_bundle(pot, alpha, t, M)
    kb, dkb = _gauss_edges(n_quad)
    if np.any(_in_mask(kb)):
        raise ContourTooClose("cell boundary passes through the mask around Λ*")
    ang = 2 * math.pi * np.arange(n_circle) / n_circle
    kc = eps * np.exp(1j * ang)
    dkc = 1j * kc * (2 * math.pi / n_circle)
    f = (lambda ks: _dlog_fd(b, ks, h)) if method == "fd" else b.dlog_g
    bnd = 1j / (2 * math.pi) * np.sum(f(kb) * dkb)
    pun = -1j / (2 * math.pi) * np.sum(f(kc) * dkc)
    tot = bnd + pun
    return BoundaryResult(float(bnd.real), float(pun.real), float(tot.real), float(max(abs(bnd.imag), abs(pun.imag))))


def quasi_periodicity_residual(bundle: FlatBandBundle, ks, ps) -> float:
    """``max |(|e_p(k)|^{2r} g(k+p) − g(k)) / g(k)|``."""
    from .theta import e_p

    ks = np.asarray(ks, dtype=complex)
    ps = np.asarray(ps, dtype=complex)
    g0 = bundle.g(ks)
    g1 = bundle.g(ks + ps)
    ep = np.array([abs(e_p(k, p)) for k, p in zip(ks, ps)])
    return float(np.max(np.abs(ep ** (2 * bundle.rank) * g1 - g0) / g0))


def gram_symmetry_residual(bundle: FlatBandBundle, ks) -> float:
    """``max ‖G(−k) − S G(k) S‖ / ‖G(k)‖`` with ``S`` reversing the frame order.

    ``k ↦ −k`` exchanges the zeros ``±z_S`` and hence the two frame vectors.
    """
    ks = np.asarray(ks, dtype=complex)
    G = bundle.gram(ks)
    Gm = bundle.gram(-ks)
    Gs = G[:, ::-1, ::-1]
    return float(np.max(np.linalg.norm(Gm - Gs, axis=(1, 2)) / np.linalg.norm(G, axis=(1, 2))))


def fit_vanishing_order(bundle: FlatBandBundle, radii=None, n_ang: int = 12) -> tuple[float, float]:
    """Fit ``g ≈ g₀|k|^q`` near ``Γ``; returns ``(q, g₀)``."""
    if radii is None:
        radii = K_POINT * np.logspace(-3, -2, 6)
    ang = np.exp(2j * math.pi * np.arange(n_ang) / n_ang)
    gm = np.array([bundle.g(r * ang).mean() for r in radii])
    A = np.vstack([np.log(radii), np.ones_like(radii)]).T
    sol, *_ = np.linalg.lstsq(A, np.log(gm), rcond=None)
    return float(sol[0]), float(math.exp(sol[1]))


def chern_report(pot: FourierPotential, alpha: complex, n: int = 24, t: TruncationParams | int = 12, M: int = 64) -> dict:
    """``{"c1", "boundary", "puncture"}`` with the integer from the plaquette sum."""
    pl = chern_plaquette(pot, alpha, n, t, M)
    bi = boundary_integral_c1(pot, alpha, t, M)
    return {
        "c1": pl.c1,
        "plaquette_raw": pl.raw,
        "boundary": round(bi.boundary_term),
        "puncture": round(bi.puncture_term),
        "boundary_value": bi.boundary_term,
        "puncture_value": bi.puncture_term,
        "total_value": bi.total,
        "grid": n,
    }


__all__ = [
    "BoundaryResult",
    "CurvatureField",
    "FlatBandBundle",
    "KernelFrame",
    "PlaquetteResult",
    "boundary_integral_c1",
    "chern_plaquette",
    "chern_report",
    "constant_frame_fn",
    "cross_section",
    "curvature_field",
    "curvature_gradient",
    "extrema_report",
    "fit_vanishing_order",
    "flat_band_bundle",
    "generator_frame",
    "gram_symmetry_residual",
    "gramian",
    "numeric_curvature",
    "numeric_frame",
    "quasi_periodicity_residual",
    "span_distance",
    "theta_frame",
]
