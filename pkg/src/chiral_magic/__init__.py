"""Magic angles, flat bands and flat-band topology of the chiral moiré model."""
from __future__ import annotations

__version__ = "0.1.0"

from .algebra import CycloRational, EisensteinInt, PiGraded, parse_exact
from .errors import ChiralMagicError
from .potential import FourierPotential, build_interpolated, build_mixed, build_u1, build_u2, build_w, potential_from_spec
from .spectral import MagicAngle, classify, kernel_basis, magic_angles

__all__ = [
    "ChiralMagicError",
    "CycloRational",
    "EisensteinInt",
    "FourierPotential",
    "MagicAngle",
    "PiGraded",
    "build_interpolated",
    "build_mixed",
    "build_u1",
    "build_u2",
    "build_w",
    "classify",
    "kernel_basis",
    "magic_angles",
    "parse_exact",
    "potential_from_spec",
]
