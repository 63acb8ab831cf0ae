"""Traces of powers of ``A₀``, numeric and exact.

On each rotational subspace::

    tr(A₀^ℓ)|L²_{0,j} = (1/3) tr(A₀^ℓ)|L²₀ + (1/3) R_{ℓ,j}

The full trace is an infinite lattice sum, computed numerically and
extrapolated in ``1/N²``.  The remainder ``R_{ℓ,j}`` only involves
off-diagonal entries ``A₀^ℓ[ω̄^d μ, μ]`` (``d = 1, 2``), which vanish once
``√3|μ|`` exceeds the reach of ``A₀^ℓ``.  It is therefore a finite sum and
is evaluated exactly in ``Q(ζ₁₂)``::

    R_{ℓ,j} = 3 Σ_{orbits [μ]} Σ_{d=1,2} ω^{-jd} A₀^ℓ[ω̄^d μ, μ]
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import (
    OMEGA,
    EisensteinInt,
    PiGraded,
    Sector,
    embed,
    exact_mode_inverse,
    iter_sector,
)
from .errors import InexactCoefficients, NonConvergent
from .fourier_ops import TruncationParams, build_Ak, restrict_subspace
from .potential import FourierPotential, build_interpolated, build_mixed

DEFAULT_SCHEDULE = (16, 32, 64)
ELL_CAP = 6


@dataclass
class TraceResult:
    ell: int
    subspace: str | int
    numeric_value: complex
    exact_part: PiGraded | None = None
    N_sequence: tuple[int, ...] = ()
    extrapolated: bool = False
    raw_values: tuple[complex, ...] = ()

    @property
    def raw_last(self) -> complex:
        return self.raw_values[-1] if self.raw_values else self.numeric_value

    def to_dict(self) -> dict:
        v = complex(self.numeric_value)
        return {
            "ell": self.ell,
            "subspace": self.subspace,
            "numeric_value": [v.real, v.imag],
            "exact_remainder": None if self.exact_part is None else str(self.exact_part),
            "N_sequence": list(self.N_sequence),
            "extrapolated": self.extrapolated,
            "raw_values": [[complex(r).real, complex(r).imag] for r in self.raw_values],
        }


# --------------------------------------------------------------------------
# numeric traces
# --------------------------------------------------------------------------


def sparse_power_trace(M, ell: int) -> complex:
    """``tr(M^ℓ)`` using two half powers."""
    M = sp.csr_matrix(M)
    if ell == 1:
        return complex(M.diagonal().sum())
    h = ell // 2
    P = M
    for _ in range(h - 1):
        P = P @ M
    Q = P if ell - h == h else P @ M
    return complex(P.multiply(Q.T).sum())


def raw_trace(pot: FourierPotential, ell: int, subspace, N: int) -> complex:
    """``tr(A₀^ℓ)`` at one truncation, on ``"full"`` or ``j ∈ {0,1,2}``."""
    t = TruncationParams(N)
    A = build_Ak(pot, 0.0, t)
    if subspace in ("full", None):
        return sparse_power_trace(A, ell)
    return sparse_power_trace(restrict_subspace(A, int(subspace), t.basis, dense=False), ell)


def richardson(Ns: Sequence[int], values: Sequence[complex]) -> list[complex]:
    """Two-point ``1/N²`` extrapolants of consecutive pairs."""
    out = []
    for (n1, v1), (n2, v2) in zip(zip(Ns, values), zip(Ns[1:], values[1:])):
        out.append((n2 * n2 * v2 - n1 * n1 * v1) / (n2 * n2 - n1 * n1))
    return out


def numeric_trace(
    pot: FourierPotential,
    ell: int,
    subspace="full",
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    tol: float = 1e-5,
) -> TraceResult:
    """Extrapolated ``tr(A₀^ℓ)`` on the full space or one subspace.

    Raises
    ------
    NonConvergent
        When the last two extrapolants differ by more than ``tol``
        relative to the extrapolated value.
    """
    if ell < 2:
        raise ValueError("ell must be at least 2")
    Ns = tuple(sorted(schedule))
    raw = [raw_trace(pot, ell, subspace, N) for N in Ns]
    if len(Ns) == 1:
        return TraceResult(ell, subspace, raw[0], None, Ns, False, tuple(raw))
    ext = richardson(Ns, raw)
    if len(ext) >= 2:
        diff = abs(ext[-1] - ext[-2])
        if diff > tol * max(abs(ext[-1]), 1e-12):
            raise NonConvergent(f"extrapolants differ by {diff:.3g} (ℓ={ell}, subspace={subspace})")
    return TraceResult(ell, subspace, ext[-1], None, Ns, True, tuple(raw))


# --------------------------------------------------------------------------
# exact remainders
# --------------------------------------------------------------------------


def _exact_data(pot: FourierPotential):
    if not pot.is_exact:
        raise InexactCoefficients(
            "potential coefficients are not exactly representable; use an exact builder "
            "(u1, u2, w) or a modes file with exact coefficient strings"
        )
    return pot.exact_shifts("plus"), pot.exact_shifts("minus"), pot.scale_sq


def _dist(a: EisensteinInt, b: EisensteinInt) -> float:
    return math.sqrt((a - b).norm())


def _apply_A0(state, plus, minus, targets, remaining: int, step: float, cache) -> dict:
    """One application of ``A₀ = R₁U₊R₂U₋`` with reach pruning."""
    mid: dict[EisensteinInt, PiGraded] = {}
    for e, v in state.items():
        for s, b in minus:
            f = e - s
            mid[f] = mid.get(f, PiGraded()) + v * b
    mid2 = {}
    for f, v in mid.items():
        if v.is_zero():
            continue
        # remaining half-steps after this point: one U₊ plus 2·remaining
        if min(_dist(f, tg) for tg in targets) > step * (1 + 2 * remaining) + 1e-9:
            continue
        if f not in cache:
            cache[f] = exact_mode_inverse(f)
        mid2[f] = v * cache[f]
    out: dict[EisensteinInt, PiGraded] = {}
    for f, v in mid2.items():
        for s, a in plus:
            e = f + s
            out[e] = out.get(e, PiGraded()) + v * a
    res = {}
    for e, v in out.items():
        if v.is_zero():
            continue
        if min(_dist(e, tg) for tg in targets) > step * 2 * remaining + 1e-9:
            continue
        if e not in cache:
            cache[e] = exact_mode_inverse(e)
        res[e] = v * cache[e]
    return res


def off_diagonal_sums(pot: FourierPotential, ell: int) -> tuple[PiGraded, PiGraded]:
    """``S_d = Σ_{orbit reps μ} A₀^ℓ[ω̄^d μ, μ]`` for ``d = 1, 2`` (exact).

    The potential scale is applied through ``scale_sq``.
    """
    plus, minus, scale_sq = _exact_data(pot)
    step = max(math.sqrt(s.norm()) for s, _ in plus + minus)
    reach = 2 * ell * step
    # |ω̄^d μ − μ| = √3|μ| in Eisenstein units
    bound = int(math.floor(reach * reach / 3 + 1e-9))
    radius = int(math.isqrt(4 * bound // 3 + 1)) + 2
    seen = set()
    reps = []
    for e in iter_sector(Sector.MINUS_K, radius):
        if 3 * e.norm() > reach * reach + 1e-9 or e in seen:
            continue
        orb = (e, e.rotbar(), e.rotbar().rotbar())
        seen.update(orb)
        reps.append(min(orb))
    reps.sort(key=lambda e: (e.norm(), e.a, e.b))
    S = [PiGraded(), PiGraded()]
    cache: dict = {}
    for mu in reps:
        targets = (mu.rotbar(), mu.rotbar().rotbar())
        state = {mu: PiGraded.scalar(1)}
        for r in range(ell):
            state = _apply_A0(state, plus, minus, targets, ell - r - 1, step, cache)
        for d in (0, 1):
            v = state.get(targets[d])
            if v is not None:
                S[d] = S[d] + v
    fac = PiGraded.scalar(scale_sq**ell)
    return S[0] * fac, S[1] * fac


def exact_remainder(pot: FourierPotential, ell: int, j: int) -> PiGraded:
    """``R_{ℓ,j}`` exactly; an element of ``Q(ω)`` for the standard potentials."""
    if ell > ELL_CAP:
        raise ValueError(f"ell is capped at {ELL_CAP}")
    return remainders_from_sums(off_diagonal_sums(pot, ell), j)


def remainders_from_sums(S: tuple[PiGraded, PiGraded], j: int) -> PiGraded:
    wbar = PiGraded.scalar(OMEGA ** (2 * (j % 3)))  # ω^{-j}
    w2bar = PiGraded.scalar(OMEGA ** (4 * (j % 3)))  # ω^{-2j}
    return PiGraded.scalar(3) * (S[0] * wbar + S[1] * w2bar)


def exact_remainders(pot: FourierPotential, ell: int) -> dict[int, PiGraded]:
    S = off_diagonal_sums(pot, ell)
    return {j: remainders_from_sums(S, j) for j in (0, 1, 2)}


# --------------------------------------------------------------------------
# combinations and criteria
# --------------------------------------------------------------------------


def subspace_trace(
    pot: FourierPotential, ell: int, j: int, schedule: Sequence[int] = DEFAULT_SCHEDULE, tol: float = 1e-5
) -> TraceResult:
    """``tr(A₀^ℓ)|L²_{0,j}`` as ``(full + R_{ℓ,j})/3``.

    Potentials without exact coefficients fall back to extrapolating the
    restricted block directly.
    """
    if not pot.is_exact:
        return numeric_trace(pot, ell, j, schedule, tol)
    full = numeric_trace(pot, ell, "full", schedule, tol)
    R = exact_remainder(pot, ell, j)
    val = (full.numeric_value + embed(R)) / 3
    return TraceResult(ell, j, val, R, full.N_sequence, full.extrapolated, tuple(r / 3 for r in full.raw_values))


def interpolation_inequality(tr2: complex, tr3: complex, tr4: complex) -> dict:
    """``tr₂·tr₄ < tr₃²`` (real parts); true certifies a non-real eigenvalue."""
    lhs = float(np.real(tr2) * np.real(tr4))
    rhs = float(np.real(tr3) ** 2)
    return {"holds": lhs < rhs, "lhs": lhs, "rhs": rhs}


def nonreal_criterion(pot: FourierPotential, j="full", schedule: Sequence[int] = DEFAULT_SCHEDULE) -> dict:
    if j in ("full", None):
        tr = {ell: numeric_trace(pot, ell, "full", schedule).numeric_value for ell in (2, 3, 4)}
    else:
        tr = {ell: subspace_trace(pot, ell, int(j), schedule).numeric_value for ell in (2, 3, 4)}
    rep = interpolation_inequality(tr[2], tr[3], tr[4])
    rep["subspace"] = j
    rep["traces"] = {str(ell): float(np.real(v)) for ell, v in tr.items()}
    return rep


@dataclass
class SweepRow:
    theta: float
    tr_j0: float
    tr_j1: float
    tr_j2: float
    tr_full: float
    consistency: float


@dataclass
class SweepTable:
    rows: list[SweepRow]
    family: str
    N: int
    sign_changes: dict[str, list[float]] = field(default_factory=dict)


def theta_sweep(thetas: Sequence[float], family: str = "mixed", N: int = 24, ell: int = 2) -> SweepTable:
    """Subspace traces of ``A₀^ℓ`` along a θ family at fixed truncation.

    ``family`` is ``"mixed"`` (cos θ U₁ + sin θ W) or ``"literal"``
    ((cos θ − sin θ) U₁ + sin θ U₂).  Sign changes are reported at the
    midpoint of the bracketing θ values.
    """
    build = {"mixed": build_mixed, "literal": build_interpolated}[family]
    rows = []
    for th in thetas:
        pot = build(float(th))
        tr = [raw_trace(pot, ell, j, N).real for j in (0, 1, 2)]
        full = raw_trace(pot, ell, "full", N).real
        cons = abs(2 * tr[1] + tr[2] - full) / max(abs(full), 1e-300)
        rows.append(SweepRow(float(th), tr[0], tr[1], tr[2], full, cons))
    changes: dict[str, list[float]] = {"tr_j1": [], "tr_j2": []}
    for key in changes:
        for a, b in zip(rows, rows[1:]):
            if np.sign(getattr(a, key)) != np.sign(getattr(b, key)):
                changes[key].append(0.5 * (a.theta + b.theta))
    return SweepTable(rows, family, N, changes)
