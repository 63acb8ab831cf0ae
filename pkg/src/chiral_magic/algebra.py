"""Exact arithmetic and moiré lattice geometry.

Everything here lives on the rescaled lattice ``Λ = Z ⊕ ωZ`` with
``ω = e^{2πi/3}``. The dual lattice is ``Λ* = (4πi/√3)Λ`` and the Dirac
momentum is ``K = 4π/3``.

Exact scalars are elements of the cyclotomic field ``Q(ζ)`` with
``ζ = e^{iπ/6}``, stored in the power basis ``{1, ζ, ζ², ζ³}`` and reduced
with ``ζ⁴ = ζ² − 1``.  Useful identities::

    ω  = ζ⁴ = ζ² − 1
    i  = ζ³
    √3 = ζ + ζ⁻¹ = 2ζ − ζ³

Fourier modes are tracked by Eisenstein integers.  A mode ``ν`` of
either Dirac sector is written ``ν = c·E`` with ``c = 4πi/(3√3)`` and
``E = a + bω``; the sector is read off ``(a, b) mod 3``.
"""
from __future__ import annotations

import ast
import cmath
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

Rational = Union[int, Fraction]

SQRT3 = math.sqrt(3.0)
OMEGA_C = complex(-0.5, SQRT3 / 2)
K_POINT = 4 * math.pi / 3
# ν = MODE_SCALE · (a + bω)
MODE_SCALE = 4j * math.pi / (3 * SQRT3)
# dual basis: z(Q1) = 1, z(Q2) = ω
Q1 = 4j * math.pi / SQRT3
Q2 = Q1 * OMEGA_C
Z_STACK = 1j / SQRT3

_ZETA_POW = (
    1.0 + 0j,
    complex(SQRT3 / 2, 0.5),
    complex(0.5, SQRT3 / 2),
    1j,
)


# --------------------------------------------------------------------------
# Eisenstein integers
# --------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class EisensteinInt:
    """The Eisenstein integer ``a + bω``."""

    a: int
    b: int

    def __add__(self, other: EisensteinInt) -> EisensteinInt:
        return EisensteinInt(self.a + other.a, self.b + other.b)

    def __sub__(self, other: EisensteinInt) -> EisensteinInt:
        return EisensteinInt(self.a - other.a, self.b - other.b)

    def __neg__(self) -> EisensteinInt:
        return EisensteinInt(-self.a, -self.b)

    def __mul__(self, other: EisensteinInt | int) -> EisensteinInt:
        if isinstance(other, int):
            return EisensteinInt(self.a * other, self.b * other)
        a, b, c, d = self.a, self.b, other.a, other.b
        # ω² = −1 − ω
        return EisensteinInt(a * c - b * d, a * d + b * c - b * d)

    __rmul__ = __mul__

    def conj(self) -> EisensteinInt:
        return EisensteinInt(self.a - self.b, -self.b)

    def norm(self) -> int:
        return self.a * self.a - self.a * self.b + self.b * self.b

    def rot(self) -> EisensteinInt:
        """Multiply by ω."""
        return EisensteinInt(-self.b, self.a - self.b)

    def rotbar(self) -> EisensteinInt:
        """Multiply by ω̄."""
        return EisensteinInt(self.b - self.a, -self.a)

    def hexnorm(self) -> int:
        return max(abs(self.a), abs(self.b), abs(self.a - self.b))

    def __complex__(self) -> complex:
        return self.a + self.b * OMEGA_C

    def to_cyclo(self) -> CycloRational:
        return CycloRational.from_int(self.a) + OMEGA * self.b


def nearest_eisenstein(z: complex) -> EisensteinInt:
    """Closest point of ``Z ⊕ ωZ`` to ``z`` (exact up to rounding ties)."""
    y = z.imag / (SQRT3 / 2)
    x = z.real + y / 2
    best = None
    for a in (math.floor(x), math.floor(x) + 1):
        for b in (math.floor(y), math.floor(y) + 1):
            e = EisensteinInt(int(a), int(b))
            d = abs(z - complex(e))
            if best is None or d < best[0]:
                best = (d, e)
    # the nearest point is always among the four corners of the rhombus
    # or their diagonal neighbour
    d0, e0 = best
    for da, db in ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1)):
        e = EisensteinInt(e0.a + da, e0.b + db)
        d = abs(z - complex(e))
        if d < d0:
            d0, e0 = d, e
    return e0


def lattice_coords(z: complex) -> tuple[float, float]:
    """Real coordinates ``(s, t)`` with ``z = s + tω``."""
    t = z.imag / (SQRT3 / 2)
    return z.real + t / 2, t


# --------------------------------------------------------------------------
# Q(ζ₁₂)
# --------------------------------------------------------------------------


def _reduce(d: list[Fraction]) -> tuple[Fraction, ...]:
    # ζ⁶ = −1, ζ⁵ = ζ³ − ζ, ζ⁴ = ζ² − 1
    d = list(d) + [Fraction(0)] * (7 - len(d))
    for deg in range(len(d) - 1, 3, -1):
        c = d[deg]
        if not c:
            continue
        d[deg] = Fraction(0)
        # ζ^deg = ζ^(deg-2) − ζ^(deg-4)
        d[deg - 2] += c
        d[deg - 4] -= c
    return tuple(d[:4])


class CycloRational:
    """Element ``c0 + c1ζ + c2ζ² + c3ζ³`` of ``Q(ζ)``, ``ζ = e^{iπ/6}``.

    Instances are immutable and hashable.  Coefficients are
    :class:`fractions.Fraction`, so arithmetic never overflows.
    """

    __slots__ = ("c",)

    def __init__(self, c0: Rational = 0, c1: Rational = 0, c2: Rational = 0, c3: Rational = 0):
        object.__setattr__(self, "c", (Fraction(c0), Fraction(c1), Fraction(c2), Fraction(c3)))

    def __setattr__(self, name, value):
        raise AttributeError("CycloRational is immutable")

    @classmethod
    def _raw(cls, c: tuple[Fraction, ...]) -> CycloRational:
        obj = object.__new__(cls)
        object.__setattr__(obj, "c", c)
        return obj

    @classmethod
    def from_int(cls, n: Rational) -> CycloRational:
        return cls(n)

    @staticmethod
    def coerce(x) -> CycloRational:
        if isinstance(x, CycloRational):
            return x
        if isinstance(x, (int, Fraction)):
            return CycloRational(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to CycloRational")

    # arithmetic -----------------------------------------------------------
    def __add__(self, other) -> CycloRational:
        try:
            o = CycloRational.coerce(other)
        except TypeError:
            return NotImplemented
        return CycloRational._raw(tuple(x + y for x, y in zip(self.c, o.c)))

    __radd__ = __add__

    def __neg__(self) -> CycloRational:
        return CycloRational._raw(tuple(-x for x in self.c))

    def __sub__(self, other) -> CycloRational:
        try:
            o = CycloRational.coerce(other)
        except TypeError:
            return NotImplemented
        return CycloRational._raw(tuple(x - y for x, y in zip(self.c, o.c)))

    def __rsub__(self, other) -> CycloRational:
        return (-self) + other

    def __mul__(self, other) -> CycloRational:
        if isinstance(other, (int, Fraction)):
            return CycloRational._raw(tuple(x * other for x in self.c))
        if not isinstance(other, CycloRational):
            return NotImplemented
        d = [Fraction(0)] * 7
        for i, x in enumerate(self.c):
            if x:
                for j, y in enumerate(other.c):
                    if y:
                        d[i + j] += x * y
        return CycloRational._raw(_reduce(d))

    __rmul__ = __mul__

    def __truediv__(self, other) -> CycloRational:
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero in Q(ζ)")
            return CycloRational._raw(tuple(x / other for x in self.c))
        if not isinstance(other, CycloRational):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> CycloRational:
        return CycloRational.coerce(other) * self.inverse()

    def __pow__(self, n: int) -> CycloRational:
        if n < 0:
            return self.inverse() ** (-n)
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def galois(self, j: int) -> CycloRational:
        """Apply the automorphism ``ζ ↦ ζ^j`` (``j`` coprime to 12)."""
        d = [Fraction(0)] * 12
        for i, x in enumerate(self.c):
            d[(i * j) % 12] += x
        # ζ⁶ = −1 folds degrees 6..11 onto 0..5
        e = [d[i] - d[i + 6] for i in range(6)]
        return CycloRational._raw(_reduce(e))

    def conj(self) -> CycloRational:
        return self.galois(11)

    def norm(self) -> Fraction:
        """Field norm to Q."""
        n = self * self.galois(5) * self.galois(7) * self.galois(11)
        return n.c[0]

    def inverse(self) -> CycloRational:
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(ζ)")
        others = self.galois(5) * self.galois(7) * self.galois(11)
        n = (self * others).c[0]
        return others / n

    # comparisons and conversion ------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.c)

    def is_rational(self) -> bool:
        return not any(self.c[1:])

    def __eq__(self, other) -> bool:
        try:
            o = CycloRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.c == o.c

    def __hash__(self) -> int:
        return hash(self.c)

    def __complex__(self) -> complex:
        if self.is_zero():
            return 0j
        return sum((float(x) * z for x, z in zip(self.c, _ZETA_POW) if x), 0j)

    def basis_coords(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Coordinates in the basis ``{1, ω, i, iω}``.

        Uses ``ω = ζ² − 1``, ``i = ζ³`` and ``iω = −ζ``.
        """
        c0, c1, c2, c3 = self.c
        return (c0 + c2, c2, c3, -c1)

    def __str__(self) -> str:
        names = ("", "w", "i", "i*w")
        parts = []
        for coef, name in zip(self.basis_coords(), names):
            if not coef:
                continue
            if not name:
                parts.append(str(coef))
            elif coef == 1:
                parts.append(name)
            elif coef == -1:
                parts.append("-" + name)
            else:
                parts.append(f"{coef}*{name}")
        if not parts:
            return "0"
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"CycloRational({', '.join(str(x) for x in self.c)})"


ZERO = CycloRational()
ONE = CycloRational(1)
ZETA = CycloRational(0, 1)
OMEGA = CycloRational(-1, 0, 1)
OMEGA_BAR = OMEGA * OMEGA
I_UNIT = CycloRational(0, 0, 0, 1)
SQRT3_EXACT = CycloRational(0, 2, 0, -1)


# --------------------------------------------------------------------------
# π-graded sums
# --------------------------------------------------------------------------


class PiGraded:
    """Finite sum ``Σ_d c_d π^d`` with ``c_d ∈ Q(ζ)``."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, CycloRational] | None = None):
        clean = {}
        for d, c in (terms or {}).items():
            c = CycloRational.coerce(c)
            if not c.is_zero():
                clean[int(d)] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("PiGraded is immutable")

    @classmethod
    def scalar(cls, c, degree: int = 0) -> PiGraded:
        return cls({degree: CycloRational.coerce(c)})

    @staticmethod
    def coerce(x) -> PiGraded:
        if isinstance(x, PiGraded):
            return x
        return PiGraded.scalar(CycloRational.coerce(x))

    def degrees(self) -> list[int]:
        return sorted(self.terms)

    def part(self, d: int) -> CycloRational:
        return self.terms.get(d, ZERO)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other) -> PiGraded:
        try:
            o = PiGraded.coerce(other)
        except TypeError:
            return NotImplemented
        t = dict(self.terms)
        for d, c in o.terms.items():
            t[d] = t.get(d, ZERO) + c
        return PiGraded(t)

    __radd__ = __add__

    def __neg__(self) -> PiGraded:
        return PiGraded({d: -c for d, c in self.terms.items()})

    def __sub__(self, other) -> PiGraded:
        return self + (-PiGraded.coerce(other))

    def __rsub__(self, other) -> PiGraded:
        return PiGraded.coerce(other) - self

    def __mul__(self, other) -> PiGraded:
        try:
            o = PiGraded.coerce(other)
        except TypeError:
            return NotImplemented
        t: dict[int, CycloRational] = {}
        for d1, c1 in self.terms.items():
            for d2, c2 in o.terms.items():
                t[d1 + d2] = t.get(d1 + d2, ZERO) + c1 * c2
        return PiGraded(t)

    __rmul__ = __mul__

    def __truediv__(self, other) -> PiGraded:
        o = PiGraded.coerce(other)
        if len(o.terms) != 1:
            raise ZeroDivisionError("can only divide by a single π-graded term")
        ((d, c),) = o.terms.items()
        inv = c.inverse()
        return PiGraded({k - d: v * inv for k, v in self.terms.items()})

    def __rtruediv__(self, other) -> PiGraded:
        return PiGraded.coerce(other) / self

    def __pow__(self, n: int) -> PiGraded:
        if n < 0:
            return PiGraded.scalar(1) / (self ** (-n))
        out = PiGraded.scalar(1)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> PiGraded:
        return PiGraded({d: c.conj() for d, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        try:
            o = PiGraded.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms.items())))

    def __complex__(self) -> complex:
        return sum((complex(c) * math.pi**d for d, c in sorted(self.terms.items())), 0j)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for d in sorted(self.terms, reverse=True):
            body = str(self.terms[d])
            if d == 0:
                parts.append(body)
            else:
                pw = "pi" if d == 1 else f"pi**{d}" if d > 0 else f"pi**({d})"
                parts.append(f"({body})*{pw}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PiGraded({self})"


PI = PiGraded.scalar(1, 1)


def embed(x) -> complex:
    """Lower an exact scalar to a floating complex number.

    Exact zero maps to exactly ``0j``.
    """
    if isinstance(x, (CycloRational, PiGraded)):
        return complex(x)
    if isinstance(x, EisensteinInt):
        return complex(x)
    return complex(x)


_NAMES = {
    "w": PiGraded.scalar(OMEGA),
    "omega": PiGraded.scalar(OMEGA),
    "i": PiGraded.scalar(I_UNIT),
    "I": PiGraded.scalar(I_UNIT),
    "sqrt3": PiGraded.scalar(SQRT3_EXACT),
    "zeta": PiGraded.scalar(ZETA),
    "pi": PI,
}


def parse_exact(text: str) -> PiGraded:
    """Parse an exact scalar expression.

    The grammar is a Python arithmetic expression over integer literals
    and the names ``w`` (ω), ``i``, ``sqrt3``, ``zeta`` and ``pi`` with
    ``+ - * /`` and integer powers.

    Examples
    --------
    >>> str(parse_exact("-4/3*i*pi"))
    '(-4/3*i)*pi'
    """
    tree = ast.parse(text, mode="eval")

    def ev(node) -> PiGraded:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return PiGraded.scalar(node.value)
        if isinstance(node, ast.Name):
            if node.id not in _NAMES:
                raise ValueError(f"unknown name {node.id!r} in exact scalar")
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                    raise ValueError("only integer powers are allowed")
                return ev(node.left) ** node.right.value
            lhs, rhs = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return lhs + rhs
            if isinstance(node.op, ast.Sub):
                return lhs - rhs
            if isinstance(node.op, ast.Mult):
                return lhs * rhs
            if isinstance(node.op, ast.Div):
                return lhs / rhs
        raise ValueError(f"unsupported syntax in exact scalar: {ast.dump(node)}")

    return ev(tree)


# --------------------------------------------------------------------------
# modes and lattice geometry
# --------------------------------------------------------------------------


class Sector(enum.IntEnum):
    """Dirac sector of a Fourier mode: ``ν ∈ s·K + Λ*``."""

    MINUS_K = -1
    PLUS_K = 1


# 3·z(K) = −1 − 2ω
E_K = EisensteinInt(-1, -2)


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Mode ``ν = s·K + m·q₁ + n·q₂`` with ``z(q₁) = 1``, ``z(q₂) = ω``."""

    m: int
    n: int
    sector: Sector

    @property
    def eisenstein(self) -> EisensteinInt:
        """``E`` with ``ν = MODE_SCALE·E``, i.e. ``E = 3z(ν)``."""
        s = int(self.sector)
        return EisensteinInt(3 * self.m + s * E_K.a, 3 * self.n + s * E_K.b)

    @classmethod
    def from_eisenstein(cls, e: EisensteinInt) -> ModeIndex:
        sec = mode_sector(e)
        s = int(sec)
        return cls((e.a - s * E_K.a) // 3, (e.b - s * E_K.b) // 3, sec)

    @property
    def value(self) -> complex:
        return MODE_SCALE * complex(self.eisenstein)

    def exact_value(self) -> PiGraded:
        return PiGraded.scalar(MODE_SCALE_EXACT * self.eisenstein.to_cyclo(), 1)

    def exact_inverse(self) -> PiGraded:
        return exact_mode_inverse(self.eisenstein)


# MODE_SCALE = π · (4i/(3√3)) = π · (4√3/9)·i
MODE_SCALE_EXACT = CycloRational(Fraction(4, 9)) * SQRT3_EXACT * I_UNIT


def exact_mode_inverse(e: EisensteinInt) -> PiGraded:
    """``1/ν`` for ``ν = MODE_SCALE·e`` as a degree −1 π-graded scalar."""
    n = e.norm()
    if n == 0:
        raise ZeroDivisionError("zero mode")
    # 1/(cE) = conj(E) / (c·N(E)),  1/c = −(3√3/4)·i / π
    inv_c = CycloRational(Fraction(-3, 4)) * SQRT3_EXACT * I_UNIT
    return PiGraded.scalar(inv_c * e.conj().to_cyclo() / n, -1)


def mode_sector(e: EisensteinInt) -> Sector:
    r = (e.a % 3, e.b % 3)
    if r == (2, 1):
        return Sector.PLUS_K
    if r == (1, 2):
        return Sector.MINUS_K
    raise ValueError(f"{e} is not in ±K + Λ*")


def rotate_mode(nu: ModeIndex) -> ModeIndex:
    """Index of ``ω̄ν``; stays in the same sector since ``ω̄K ≡ K``."""
    return ModeIndex.from_eisenstein(nu.eisenstein.rotbar())


def mode_orbit(nu: ModeIndex) -> tuple[ModeIndex, ModeIndex, ModeIndex]:
    a = rotate_mode(nu)
    return (nu, a, rotate_mode(a))


def kappa(p: EisensteinInt) -> EisensteinInt:
    """Orbit map on ``Λ*`` in the coordinates ``z(p) = a + bω``.

    ``κ(p)`` is the dual-lattice point whose shifted mode ``κ(p) + K``
    equals ``ω̄(p + K)``.
    """
    e = EisensteinInt(3 * p.a, 3 * p.b) + E_K
    r = e.rotbar() - E_K
    return EisensteinInt(r.a // 3, r.b // 3)


def kappa_orbit(p: EisensteinInt) -> list[tuple[EisensteinInt, CycloRational]]:
    """``Orb(p)`` with the coefficient weights ``1, ω̄, ω̄²``.

    A potential obeying the rotational constraint has
    ``a_{κ^j(p)} = ω̄^j a_p``.
    """
    out = []
    q, w = p, ONE
    for _ in range(3):
        out.append((q, w))
        q, w = kappa(q), w * OMEGA_BAR
    return out


def z_map(k: complex) -> complex:
    """Rescaling map ``z(k) = √3 k / (4πi)``; sends ``Λ*`` onto ``Λ``."""
    return SQRT3 * k / (4j * math.pi)


def z_map_inverse(z: complex) -> complex:
    return 4j * math.pi * z / SQRT3


def dual_point(m: int, n: int) -> complex:
    """``m q₁ + n q₂ ∈ Λ*``."""
    return m * Q1 + n * Q2


def distance_to_dirac(k: complex) -> float:
    """Distance from ``k`` to the Dirac set ``(K + Λ*) ∪ (−K + Λ*)``."""
    best = math.inf
    for s in (1, -1):
        w = z_map(k - s * K_POINT)
        e = nearest_eisenstein(w)
        best = min(best, abs(k - s * K_POINT - z_map_inverse(complex(e))))
    return best


def iter_sector(sector: Sector, radius: int) -> Iterator[EisensteinInt]:
    """All ``E`` in the sector with ``hexnorm(E) ≤ radius``."""
    for a in range(-radius, radius + 1):
        for b in range(-radius, radius + 1):
            e = EisensteinInt(a, b)
            if e.hexnorm() > radius:
                continue
            try:
                if mode_sector(e) is sector:
                    yield e
            except ValueError:
                continue


def root_of_unity(j: int) -> complex:
    return cmath.exp(2j * math.pi * j / 3)
