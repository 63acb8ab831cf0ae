"""Magic angles from the Birman–Schwinger spectrum and flat-band kernels.

``α`` is magic exactly when ``1/α ∈ Spec T₀``, i.e. ``1/α² ∈ Spec A₀``.
``A₀`` commutes with rotation, so its spectrum is the union of the three
blocks ``A₀|L²_{0,j}``.  Each block is diagonalised densely.
"""
from __future__ import annotations

import cmath
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AmbiguousCluster, EmptyKernel, TruncationUnstable
from .fourier_ops import (
    D_block,
    TruncationParams,
    _as_params,
    build_Ak,
    build_D,
    check_admissible,
    restrict_subspace,
)
from .potential import FourierPotential

log = logging.getLogger(__name__)

KERNEL_RTOL = 1e-8
KERNEL_GAP = 1e3
CLUSTER_RTOL = 1e-4


@dataclass
class MagicAngle:
    """One magic angle with its multiplicity data.

    ``subspace`` is the first rotational subspace carrying the ``T₀``
    eigenvector; ``subspaces`` lists all of them.  ``kernel_dims`` maps
    ``j`` to ``dim ker D(α)|L²_{0,j}``.
    """

    alpha: complex
    subspace: int
    subspaces: tuple[int, ...]
    algebraic_mult: int
    geometric_mult: int
    classification: str
    residual: float
    kernel_dims: dict[int, int] = field(default_factory=dict)
    sv_gap: float = float("nan")
    N: int = 0

    def pattern(self) -> tuple[int, int, int]:
        """Kernel dimensions ordered as ``(j=2, j=0, j=1)``."""
        return tuple(self.kernel_dims.get(j, 0) for j in (2, 0, 1))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = [float(self.alpha.real), float(self.alpha.imag)]
        d["subspaces"] = list(self.subspaces)
        d["kernel_dims"] = {str(j): int(v) for j, v in sorted(self.kernel_dims.items())}
        d["truncation"] = {"N": self.N}
        del d["N"]
        return d


@dataclass
class KernelVector:
    """Unit-norm Fourier coefficients (component 1 then component 2)."""

    coeffs: np.ndarray
    k: complex
    alpha: complex
    subspace: int | None
    residual: float
    N: int


def canonical_alpha(mu: complex) -> complex:
    """The root ``α`` of ``α² = 1/μ`` with ``Re α > 0`` (or ``Im α > 0``)."""
    a = 1 / cmath.sqrt(mu)
    if a.real < 0 or (a.real == 0 and a.imag < 0):
        a = -a
    return a


def _in_window(a: complex, window) -> bool:
    if window in (None, "all", "complex"):
        return True
    if window == "real":
        return abs(a.imag) <= 1e-6 * max(1.0, abs(a))
    re0, re1, im0, im1 = window
    return re0 <= a.real <= re1 and im0 <= a.imag <= im1


def block_eigenvalues(pot: FourierPotential, t: TruncationParams | int) -> dict[int, np.ndarray]:
    """Eigenvalues of ``A₀`` on each ``L²_{0,j}``."""
    t = _as_params(t)
    A = build_Ak(pot, 0.0, t)
    return {j: np.linalg.eigvals(restrict_subspace(A, j, t.basis)) for j in (0, 1, 2)}


def _candidates(eigs: dict[int, np.ndarray], floor: float) -> list[tuple[complex, int]]:
    top = max(float(np.max(np.abs(v))) for v in eigs.values())
    out = []
    for j in (0, 1, 2):
        for mu in eigs[j]:
            if abs(mu) > floor * top:
                out.append((canonical_alpha(complex(mu)), j))
    out.sort(key=lambda x: (round(abs(x[0]), 9), round(x[0].imag, 9), x[1]))
    return out


def _cluster(cands: list[tuple[complex, int]], rtol: float) -> list[list[tuple[complex, int]]]:
    groups: list[list[tuple[complex, int]]] = []
    used = [False] * len(cands)
    for i, (a, _) in enumerate(cands):
        if used[i]:
            continue
        grp = [cands[i]]
        used[i] = True
        changed = True
        while changed:
            changed = False
            for k, (b, jb) in enumerate(cands):
                if used[k]:
                    continue
                if any(abs(b - g) <= rtol * max(abs(g), 1e-300) for g, _ in grp):
                    grp.append((b, jb))
                    used[k] = True
                    changed = True
        groups.append(grp)
    return groups


def _kernel_count(s: np.ndarray, rtol: float, smax: float) -> tuple[int, float]:
    s = np.sort(s)
    n = int(np.sum(s < rtol * smax))
    if n == 0:
        return 0, float(s[1] / s[0]) if s[0] > 0 else float("inf")
    if n >= len(s):
        return n, float("nan")
    return n, float(s[n] / max(s[n - 1], 1e-300))


def subspace_kernel_dims(
    pot: FourierPotential, alpha: complex, t: TruncationParams | int, rtol: float = KERNEL_RTOL
) -> tuple[dict[int, int], dict[int, np.ndarray], float]:
    """Kernel dimension of ``D(α)`` on each ``L²_{0,j}``.

    Returns the dimensions, the singular values per subspace, and the
    largest singular value of the full operator (the threshold scale).
    """
    t = _as_params(t)
    svals = {j: np.linalg.svd(D_block(pot, alpha, j, t), compute_uv=False) for j in (0, 1, 2)}
    smax = max(float(v.max()) for v in svals.values())
    dims = {j: _kernel_count(svals[j], rtol, smax)[0] for j in (0, 1, 2)}
    return dims, {j: np.sort(v) for j, v in svals.items()}, smax


def _classify_group(pot, group, t, rtol) -> MagicAngle | None:
    alphas = np.array([a for a, _ in group])
    alpha = complex(alphas.mean())
    subs = tuple(sorted({j for _, j in group}))
    dims, svals, smax = subspace_kernel_dims(pot, alpha, t, rtol)
    geo = sum(dims.values())
    allsv = np.sort(np.concatenate(list(svals.values())))
    residual = float(allsv[0])
    if geo == 0:
        return None
    gap = float(allsv[geo] / max(allsv[geo - 1], 1e-300)) if geo < len(allsv) else float("nan")
    alg = len(group)
    if alg > geo:
        cls = "jordan_degenerate"
    elif geo == 1:
        cls = "simple"
    elif geo == 2:
        cls = "double"
    else:
        cls = "higher"
    return MagicAngle(alpha, subs[0], subs, alg, geo, cls, residual, dims, gap, t.N)


def _check_ambiguous(groups, rtol) -> set[int]:
    bad = set()
    for gi, g in enumerate(groups):
        for hi, h in enumerate(groups):
            if hi == gi:
                continue
            d = min(abs(a - b) for a, _ in g for b, _ in h)
            scale = max(abs(a) for a, _ in g)
            if d <= 10 * rtol * scale:
                bad.add(gi)
    return bad


def magic_angles(
    pot: FourierPotential,
    t: TruncationParams | int,
    window="real",
    count: int | None = None,
    alpha_max: float | None = None,
    floor: float = 1e-10,
    cluster_rtol: float = CLUSTER_RTOL,
    kernel_rtol: float = KERNEL_RTOL,
    stability_delta: float | None = None,
) -> list[MagicAngle]:
    """Magic angles in a window, sorted by modulus.

    Parameters
    ----------
    window
        ``"real"``, ``"complex"``/``"all"``, or ``(re_min, re_max, im_min, im_max)``.
    count
        Keep at most this many confirmed angles.
    alpha_max
        Discard candidates with ``|α|`` above this value.
    stability_delta
        If given, recompute at ``N + 4`` and raise
        :class:`TruncationUnstable` when a reported angle moves by more
        than ``stability_delta·max(1, |α|)``.
    """
    t = _as_params(t)
    eigs = block_eigenvalues(pot, t)
    cands = [
        c for c in _candidates(eigs, floor)
        if _in_window(c[0], window) and (alpha_max is None or abs(c[0]) <= alpha_max)
    ]
    groups = _cluster(cands, cluster_rtol)
    ambiguous = _check_ambiguous(groups, cluster_rtol)
    out: list[MagicAngle] = []
    for gi, g in enumerate(groups):
        if count is not None and len(out) >= count:
            break
        if gi in ambiguous:
            raise AmbiguousCluster(
                f"eigenvalue cluster near α = {g[0][0]:.8g} is not separated at N = {t.N}"
            )
        ma = _classify_group(pot, g, t, kernel_rtol)
        if ma is None:
            log.info("candidate α = %s not confirmed by D(α) residual", g[0][0])
            continue
        out.append(ma)
    if stability_delta is not None and out:
        t2 = TruncationParams(t.N + 4, t.dirac_tol)
        ref = [a for a, _ in _candidates(block_eigenvalues(pot, t2), floor)]
        for ma in out:
            d = min(abs(ma.alpha - a) for a in ref)
            if d > stability_delta * max(1.0, abs(ma.alpha)):
                raise TruncationUnstable(f"α = {ma.alpha:.8g} moves by {d:.3g} between N={t.N} and N={t2.N}")
    return out


def classify(
    pot: FourierPotential,
    alpha: complex,
    t: TruncationParams | int,
    cluster_rtol: float = CLUSTER_RTOL,
    kernel_rtol: float = KERNEL_RTOL,
    floor: float = 1e-10,
) -> MagicAngle:
    """Multiplicities of the magic angle nearest to ``alpha``.

    Raises
    ------
    AmbiguousCluster
        When the eigenvalue cluster at ``1/α²`` is not cleanly separated.
    EmptyKernel
        When ``D(α)`` has no kernel at this truncation.
    """
    t = _as_params(t)
    cands = _candidates(block_eigenvalues(pot, t), floor)
    groups = _cluster(cands, cluster_rtol)
    dist = [min(abs(a - alpha) for a, _ in g) for g in groups]
    gi = int(np.argmin(dist))
    if gi in _check_ambiguous(groups, cluster_rtol):
        raise AmbiguousCluster(f"eigenvalue cluster near α = {alpha:.8g} is not separated at N = {t.N}")
    ma = _classify_group(pot, groups[gi], t, kernel_rtol)
    if ma is None:
        raise EmptyKernel(f"D(α) has no kernel near α = {alpha:.8g}")
    return ma


def _lift(t: TruncationParams, j: int, v: np.ndarray) -> np.ndarray:
    return t.basis.spinor_basis(j) @ v


def kernel_basis(
    pot: FourierPotential,
    alpha: complex,
    k: complex,
    t: TruncationParams | int,
    rtol: float = KERNEL_RTOL,
    gap: float = KERNEL_GAP,
) -> list[KernelVector]:
    """Kernel of the truncated ``D(α) + k``.

    At ``k = 0`` the kernel is resolved by rotational subspace; elsewhere
    it comes from a dense SVD of the full operator.
    """
    t = _as_params(t)
    out: list[KernelVector] = []
    if k == 0:
        dims, _, smax = subspace_kernel_dims(pot, alpha, t, rtol)
        for j in (0, 1, 2):
            if not dims[j]:
                continue
            M = D_block(pot, alpha, j, t)
            _, s, vh = np.linalg.svd(M)
            for i in range(len(s) - dims[j], len(s)):
                v = _lift(t, j, vh[i].conj())
                v = v / np.linalg.norm(v)
                out.append(KernelVector(v, 0j, complex(alpha), j, float(s[i]), t.N))
    else:
        D = build_D(pot, alpha, k, t).toarray()
        _, s, vh = np.linalg.svd(D)
        smax = float(s[0])
        small = np.where(s < rtol * smax)[0]
        if len(small) and len(small) < len(s):
            ratio = s[small[0] - 1] / max(s[small[0]], 1e-300)
            if ratio < gap:
                log.warning("kernel gap only %.3g at k = %s", ratio, k)
        for i in small:
            v = vh[i].conj()
            out.append(KernelVector(v / np.linalg.norm(v), complex(k), complex(alpha), None, float(s[i]), t.N))
    if not out:
        raise EmptyKernel(f"no singular value of D({alpha:.6g}) + {complex(k):.4g} below {rtol:g}·σ_max")
    return out


@dataclass
class KIndependenceReport:
    k1: complex
    k2: complex
    n_matched: int
    max_distance: float


def verify_k_independence(
    pot: FourierPotential, t: TruncationParams | int, k1: complex, k2: complex, floor: float = 0.1
) -> KIndependenceReport:
    """Match eigenvalues of ``A_{k₁}`` and ``A_{k₂}`` with ``|μ| > floor``."""
    t = _as_params(t)
    check_admissible(k1, t)
    check_admissible(k2, t)
    e1 = np.linalg.eigvals(build_Ak(pot, k1, t).toarray())
    e1 = e1[np.abs(e1) > floor]
    if k2 == k1:
        return KIndependenceReport(complex(k1), complex(k2), len(e1), 0.0)
    e2 = np.linalg.eigvals(build_Ak(pot, k2, t).toarray())
    e2 = e2[np.abs(e2) > floor / 2]
    cost = np.abs(e1[:, None] - e2[None, :])
    r, c = linear_sum_assignment(cost)
    return KIndependenceReport(complex(k1), complex(k2), len(r), float(cost[r, c].max()) if len(r) else 0.0)
