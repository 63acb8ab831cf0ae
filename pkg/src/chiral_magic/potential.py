"""Tunnelling potentials as Fourier coefficient maps.

A potential is stored through its coefficients on the dual lattice::

    U₊(z) = Σ_p a_p e^{ i⟨p + K, z⟩}
    U₋(z) = Σ_p b_p e^{-i⟨p + K, z⟩}

with ``p ∈ Λ*`` keyed by the Eisenstein integer ``z(p)``.  The rotation
law ``U_±(ωz) = ωU_±(z)`` becomes ``a_{κ(p)} = ω̄ a_p``, so a potential is
fixed by one coefficient per κ-orbit.  The chiral-physical class has
``U₋(z) = U₊(−z)``, i.e. ``b = a``.

Coefficients are exact :class:`~chiral_magic.algebra.PiGraded` values when
possible and plain ``complex`` otherwise.  A floating ``scale`` multiplies
every coefficient at assembly time; ``scale_sq`` records its exact square
when known (``1/2`` for ``U₂``) so the exact trace engine can still run.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Union

import numpy as np

from .algebra import (
    E_K,
    MODE_SCALE,
    OMEGA_BAR,
    EisensteinInt,
    PiGraded,
    embed,
    kappa,
    kappa_orbit,
    parse_exact,
)
from .errors import PotentialError

Coeff = Union[PiGraded, complex]


class SymmetryClass(str, enum.Enum):
    CHIRAL_PHYSICAL = "chiral_physical"
    ROTATIONAL_ONLY = "rotational_only"


def shift_mode(p: EisensteinInt) -> EisensteinInt:
    """Eisenstein label ``3z(p + K)`` of the shifted mode ``p + K``."""
    return EisensteinInt(3 * p.a + E_K.a, 3 * p.b + E_K.b)


def _as_complex(c: Coeff) -> complex:
    return embed(c) if isinstance(c, PiGraded) else complex(c)


def _freeze(d: Mapping[EisensteinInt, Coeff]) -> Mapping[EisensteinInt, Coeff]:
    return MappingProxyType(dict(sorted(d.items())))


@dataclass(frozen=True, eq=False)
class FourierPotential:
    """Symmetry-constrained tunnelling potential.

    Attributes
    ----------
    coeffs_plus, coeffs_minus
        Maps ``z(p) ↦ a_p`` and ``z(p) ↦ b_p``.
    symmetry_class
        Whether ``U₋(z) = U₊(−z)`` is intended to hold.
    scale
        Floating factor applied to all coefficients when lowered.
    scale_sq
        Exact value of ``scale²`` if known, otherwise ``None``.
    """

    coeffs_plus: Mapping[EisensteinInt, Coeff]
    coeffs_minus: Mapping[EisensteinInt, Coeff]
    symmetry_class: SymmetryClass = SymmetryClass.CHIRAL_PHYSICAL
    scale: float = 1.0
    scale_sq: Fraction | None = Fraction(1)
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "coeffs_plus", _freeze(self.coeffs_plus))
        object.__setattr__(self, "coeffs_minus", _freeze(self.coeffs_minus))

    # -- queries -----------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        vals = list(self.coeffs_plus.values()) + list(self.coeffs_minus.values())
        return self.scale_sq is not None and all(isinstance(c, PiGraded) for c in vals)

    def support(self, which: str = "plus") -> list[EisensteinInt]:
        return list(self._coeffs(which))

    def _coeffs(self, which: str) -> Mapping[EisensteinInt, Coeff]:
        if which in ("plus", "U_plus", "+"):
            return self.coeffs_plus
        if which in ("minus", "U_minus", "-"):
            return self.coeffs_minus
        raise ValueError(f"unknown component {which!r}")

    def shifts(self, which: str = "plus") -> list[tuple[EisensteinInt, complex]]:
        """``(3z(p + K), scale·a_p)`` pairs for numeric assembly."""
        return [(shift_mode(p), self.scale * _as_complex(c)) for p, c in self._coeffs(which).items()]

    def exact_shifts(self, which: str = "plus") -> list[tuple[EisensteinInt, PiGraded]]:
        """Exact ``(3z(p + K), a_p)`` pairs; the scale is *not* applied."""
        out = []
        for p, c in self._coeffs(which).items():
            if not isinstance(c, PiGraded):
                raise TypeError("coefficient is not exact")
            out.append((shift_mode(p), c))
        return out

    def max_shift_norm(self) -> int:
        """Largest Eisenstein norm of a shift vector, over both components."""
        sh = [shift_mode(p).norm() for p in list(self.coeffs_plus) + list(self.coeffs_minus)]
        return max(sh) if sh else 0

    # -- evaluation --------------------------------------------------------
    def u_plus(self, z):
        return _series(self.shifts("plus"), np.asarray(z, dtype=complex), +1)

    def u_minus(self, z):
        return _series(self.shifts("minus"), np.asarray(z, dtype=complex), -1)

    # -- algebra -----------------------------------------------------------
    def lowered(self) -> FourierPotential:
        """Same potential with complex coefficients and unit scale."""
        return FourierPotential(
            {p: self.scale * _as_complex(c) for p, c in self.coeffs_plus.items()},
            {p: self.scale * _as_complex(c) for p, c in self.coeffs_minus.items()},
            self.symmetry_class,
            1.0,
            None,
            self.name,
        )

    def scaled(self, s: float, s_sq: Fraction | None = None) -> FourierPotential:
        sq = None if (s_sq is None or self.scale_sq is None) else self.scale_sq * s_sq
        return FourierPotential(
            self.coeffs_plus, self.coeffs_minus, self.symmetry_class, self.scale * s, sq, self.name
        )

    def to_dict(self) -> dict:
        def enc(c: Coeff):
            if isinstance(c, PiGraded):
                return str(c)
            c = complex(c)
            return [c.real, c.imag]

        return {
            "name": self.name,
            "symmetry_class": self.symmetry_class.value,
            "scale": self.scale,
            "plus": [{"p": [p.a, p.b], "coeff": enc(c)} for p, c in self.coeffs_plus.items()],
            "minus": [{"p": [p.a, p.b], "coeff": enc(c)} for p, c in self.coeffs_minus.items()],
        }


def _series(shifts, z: np.ndarray, sign: int) -> np.ndarray:
    out = np.zeros(z.shape, dtype=complex)
    zc = np.conj(z)
    for e, a in shifts:
        nu = MODE_SCALE * complex(e)
        out += a * np.exp(sign * 1j * np.real(nu * zc))
    return out


def evaluate(pot: FourierPotential, z) -> np.ndarray:
    """``V(z) = [[0, U₊(z)], [U₋(z), 0]]``; trailing axes are ``(2, 2)``."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (2, 2), dtype=complex)
    out[..., 0, 1] = pot.u_plus(z)
    out[..., 1, 0] = pot.u_minus(z)
    return out


def combine(terms: list[tuple[float, FourierPotential]], name: str = "combination") -> FourierPotential:
    """Coefficient-wise linear combination with real or complex weights."""
    plus: dict[EisensteinInt, complex] = {}
    minus: dict[EisensteinInt, complex] = {}
    cls = SymmetryClass.CHIRAL_PHYSICAL
    for w, pot in terms:
        if pot.symmetry_class is not SymmetryClass.CHIRAL_PHYSICAL:
            cls = SymmetryClass.ROTATIONAL_ONLY
        for p, c in pot.coeffs_plus.items():
            plus[p] = plus.get(p, 0j) + w * pot.scale * _as_complex(c)
        for p, c in pot.coeffs_minus.items():
            minus[p] = minus.get(p, 0j) + w * pot.scale * _as_complex(c)
    return FourierPotential(plus, minus, cls, 1.0, None, name)


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

# −4πi/3 as a degree-one π-graded scalar
_BM_COEFF = parse_exact("-4/3*i*pi")
_W_SEED = EisensteinInt(1, 2)  # shift mode 2 + 4ω = −2·(3z(K))


def orbit_coefficients(p: EisensteinInt, a_p: Coeff) -> dict[EisensteinInt, Coeff]:
    """Fill the κ-orbit of ``p`` from the representative coefficient."""
    out: dict[EisensteinInt, Coeff] = {}
    for q, w in kappa_orbit(p):
        out[q] = a_p * PiGraded.scalar(w) if isinstance(a_p, PiGraded) else complex(a_p) * embed(w)
    return out


def _chiral(coeffs: dict, name: str, scale: float = 1.0, scale_sq: Fraction | None = Fraction(1)) -> FourierPotential:
    return FourierPotential(coeffs, dict(coeffs), SymmetryClass.CHIRAL_PHYSICAL, scale, scale_sq, name)


def build_u1() -> FourierPotential:
    """Rescaled Bistritzer–MacDonald potential, one κ-orbit (of ``p = 0``)."""
    return _chiral(orbit_coefficients(EisensteinInt(0, 0), _BM_COEFF), "u1")


def build_w() -> FourierPotential:
    """Second-shell orbit: shifts ``−2ω^ℓ K`` with weights ``−(4πi/3)ω^ℓ``."""
    return _chiral(orbit_coefficients(_W_SEED, _BM_COEFF), "w")


def build_u2() -> FourierPotential:
    """``U₂ = (U₁ − W)/√2``.

    The exact coefficient set is ``U₁ − W``; the ``1/√2`` is carried as
    ``scale`` with ``scale_sq = 1/2``.
    """
    coeffs = dict(build_u1().coeffs_plus)
    for p, c in build_w().coeffs_plus.items():
        coeffs[p] = coeffs.get(p, PiGraded()) - c
    return _chiral(coeffs, "u2", 1 / math.sqrt(2), Fraction(1, 2))


def build_interpolated(theta: float) -> FourierPotential:
    """``U_θ = (cos θ − sin θ) U₁ + sin θ U₂``, taken literally."""
    if not math.isfinite(theta):
        raise PotentialError("theta must be finite")
    c, s = math.cos(theta), math.sin(theta)
    pot = combine([(c - s, build_u1()), (s, build_u2())], name=f"interp({theta!r})")
    if theta == 0.0:
        return build_u1()
    return pot


def build_mixed(theta: float) -> FourierPotential:
    """``cos θ · U₁ + sin θ · W``.

    This family passes through ``U₁`` at ``θ = 0`` and through ``U₂`` at
    ``θ = 7π/4``; it is the family whose magic angles are tabulated for
    ``θ = 2.808850897``.
    """
    if not math.isfinite(theta):
        raise PotentialError("theta must be finite")
    if theta == 0.0:
        return build_u1()
    return combine(
        [(math.cos(theta), build_u1()), (math.sin(theta), build_w())], name=f"mix({theta!r})"
    )


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    orbit_ok: bool
    sector_ok: bool
    chiral_physical: bool | None
    first_violation: dict | None = None
    messages: list[str] = field(default_factory=list)


def _same(x: Coeff, y: Coeff, tol: float) -> bool:
    if isinstance(x, PiGraded) and isinstance(y, PiGraded):
        return x == y
    return abs(_as_complex(x) - _as_complex(y)) <= tol


def validate(pot: FourierPotential, check_chiral: bool = True, seed: int = 0) -> ValidationReport:
    """Check the orbit constraint, sector placement and optionally ``U₋ = U₊(−·)``.

    Exact coefficients are compared exactly; complex ones to ``1e-12``
    relative to the largest coefficient.
    """
    msgs: list[str] = []
    first = None
    sector_ok = True
    for which in ("plus", "minus"):
        for p in pot._coeffs(which):
            if not (isinstance(p, EisensteinInt) and isinstance(p.a, int) and isinstance(p.b, int)):
                sector_ok = False
                msgs.append(f"{which}: key {p!r} is not a dual-lattice point")
    orbit_ok = True
    for which in ("plus", "minus"):
        coeffs = pot._coeffs(which)
        mags = [abs(_as_complex(c)) for c in coeffs.values()]
        tol = 1e-12 * (max(mags) if mags else 1.0)
        for p, a in coeffs.items():
            q = kappa(p)
            b = coeffs.get(q, PiGraded() if isinstance(a, PiGraded) else 0j)
            want = a * PiGraded.scalar(OMEGA_BAR) if isinstance(a, PiGraded) else a * embed(OMEGA_BAR)
            if not _same(b, want, tol):
                orbit_ok = False
                if first is None:
                    first = {
                        "component": which,
                        "p": [p.a, p.b],
                        "kappa_p": [q.a, q.b],
                        "a_p": str(a),
                        "a_kappa_p": str(b),
                    }
                msgs.append(f"{which}: a[{q.a},{q.b}] = {b} but ω̄·a[{p.a},{p.b}] = {want}")
    chiral = None
    if check_chiral and pot.symmetry_class is SymmetryClass.CHIRAL_PHYSICAL:
        rng = np.random.default_rng(seed)
        z = rng.uniform(-2, 2, 50) + 1j * rng.uniform(-2, 2, 50)
        up, um = pot.u_plus(-z), pot.u_minus(z)
        scale = max(1.0, float(np.max(np.abs(up))))
        chiral = bool(np.max(np.abs(up - um)) <= 1e-12 * scale)
        if not chiral:
            msgs.append("U₋(z) ≠ U₊(−z) at sample points")
    ok = orbit_ok and sector_ok and (chiral is not False)
    return ValidationReport(ok, orbit_ok, sector_ok, chiral, first, msgs)


# --------------------------------------------------------------------------
# JSON definitions
# --------------------------------------------------------------------------


def _parse_coeff(v) -> Coeff:
    if isinstance(v, str):
        return parse_exact(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise PotentialError(f"cannot parse coefficient {v!r}")


def _orbits_from_list(items) -> dict[EisensteinInt, Coeff]:
    out: dict[EisensteinInt, Coeff] = {}
    for it in items:
        p = EisensteinInt(int(it["p"][0]), int(it["p"][1]))
        for q, c in orbit_coefficients(p, _parse_coeff(it["orbit_coeff"])).items():
            if q in out:
                prev = out[q]
                out[q] = prev + c if isinstance(prev, PiGraded) and isinstance(c, PiGraded) else _as_complex(prev) + _as_complex(c)
            else:
                out[q] = c
    return out


def potential_from_spec(spec) -> FourierPotential:
    """Build a potential from a CLI/JSON specification.

    Accepted forms: ``"u1"``, ``"u2"``, ``"w"``, ``{"interp": θ}``,
    ``{"mix": θ}``, or ``{"modes": [{"p": [m, n], "orbit_coeff": "..."}],
    "minus": [...], "scale": s}``.  Strings that look like JSON are decoded
    first.
    """
    if isinstance(spec, str):
        s = spec.strip()
        if s in ("u1", "u2", "w"):
            return {"u1": build_u1, "u2": build_u2, "w": build_w}[s]()
        try:
            spec = json.loads(s)
        except json.JSONDecodeError as exc:
            raise PotentialError(f"unrecognised potential {spec!r}") from exc
        if isinstance(spec, str):
            return potential_from_spec(spec)
    if not isinstance(spec, dict):
        raise PotentialError(f"unrecognised potential {spec!r}")
    if "interp" in spec:
        return build_interpolated(float(spec["interp"]))
    if "mix" in spec:
        return build_mixed(float(spec["mix"]))
    if "builder" in spec:
        return potential_from_spec(spec["builder"])
    if "modes" in spec:
        plus = _orbits_from_list(spec["modes"])
        if "minus" in spec:
            minus = _orbits_from_list(spec["minus"])
            cls = SymmetryClass.ROTATIONAL_ONLY
        else:
            minus = dict(plus)
            cls = SymmetryClass.CHIRAL_PHYSICAL
        scale = float(spec.get("scale", 1.0))
        sq = Fraction(1) if scale == 1.0 else None
        if "scale_sq" in spec:
            sq = Fraction(spec["scale_sq"])
        return FourierPotential(plus, minus, cls, scale, sq, spec.get("name", "custom"))
    raise PotentialError(f"unrecognised potential {spec!r}")
