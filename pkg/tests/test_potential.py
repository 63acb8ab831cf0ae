from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiral_magic.algebra import Z_STACK, EisensteinInt, PiGraded, parse_exact
from chiral_magic.errors import PotentialError
from chiral_magic.potential import (
    FourierPotential,
    SymmetryClass,
    build_interpolated,
    build_mixed,
    build_u1,
    build_u2,
    build_w,
    combine,
    evaluate,
    orbit_coefficients,
    potential_from_spec,
    validate,
)


def test_support_sizes(u1, u2):
    assert len(u1.support()) == 3
    assert len(u2.support()) == 6
    assert u1.is_exact and u2.is_exact
    assert u2.scale_sq == Fraction(1, 2)


def test_u1_closed_form(u1):
    # U₁(z) = −(4πi/3) Σ_ℓ ω^ℓ e^{i⟨z, ω^ℓ K⟩}
    rng = np.random.default_rng(3)
    z = rng.uniform(-1, 1, 6) + 1j * rng.uniform(-1, 1, 6)
    w = np.exp(2j * math.pi / 3)
    K = 4 * math.pi / 3
    brute = sum(w ** l * np.exp(1j * (np.conj(z) * (w ** l * K)).real) for l in range(3))
    got = u1.u_plus(z)
    ratio = got / brute
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    assert ratio[0] == pytest.approx(-4j * math.pi / 3, rel=1e-12)


def test_evaluate_at_stacking_point(u1):
    V = evaluate(u1, Z_STACK)
    direct = sum(complex(a) * np.exp(1j * (np.conj(Z_STACK) * v).real) for v, a in _modes(u1))
    assert V[0, 1] == pytest.approx(direct, abs=1e-12)
    assert V[0, 0] == 0 and V[1, 1] == 0


def _modes(pot):
    from chiral_magic.algebra import MODE_SCALE

    return [(MODE_SCALE * complex(e), a) for e, a in pot.shifts("plus")]


def test_validate_builders():
    for pot in (build_u1(), build_u2(), build_w(), build_mixed(0.4), build_interpolated(1.1)):
        rep = validate(pot)
        assert rep.ok, rep.messages


def test_validate_flags_perturbed_orbit(u1):
    coeffs = dict(u1.coeffs_plus)
    p = sorted(coeffs)[1]
    coeffs[p] = coeffs[p] + parse_exact("1/100")
    bad = FourierPotential(coeffs, coeffs, SymmetryClass.CHIRAL_PHYSICAL, 1.0, Fraction(1), "bad")
    rep = validate(bad)
    assert not rep.ok and not rep.orbit_ok
    assert rep.first_violation is not None


def test_validate_rotational_only():
    plus = orbit_coefficients(EisensteinInt(0, 0), parse_exact("2*i"))
    minus = orbit_coefficients(EisensteinInt(1, 2), parse_exact("3 + w"))
    pot = FourierPotential(plus, minus, SymmetryClass.ROTATIONAL_ONLY, 1.0, Fraction(1), "rot")
    rep = validate(pot)
    assert rep.ok and rep.chiral_physical is None


def test_interpolated_endpoint(u1):
    assert build_interpolated(0.0).coeffs_plus == u1.coeffs_plus
    assert build_mixed(0.0).coeffs_plus == u1.coeffs_plus


def test_mixed_family_passes_through_u2(u2):
    m = build_mixed(7 * math.pi / 4)
    z = np.array([0.3 + 0.1j, -0.7 + 0.4j, Z_STACK])
    assert np.allclose(m.u_plus(z), u2.u_plus(z), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(a, b, x, y):
    P, Q = build_u1(), build_w()
    z = complex(x, y)
    lhs = evaluate(combine([(a, P), (b, Q)]), z)
    rhs = a * evaluate(P, z) + b * evaluate(Q, z)
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)) * 10)


def test_from_spec_forms(u2):
    assert potential_from_spec("u2").coeffs_plus == u2.coeffs_plus
    assert potential_from_spec('{"mix": 0.5}').name == build_mixed(0.5).name
    custom = potential_from_spec({"modes": [{"p": [0, 0], "orbit_coeff": "-4/3*i*pi"}]})
    assert custom.coeffs_plus == build_u1().coeffs_plus
    with pytest.raises(PotentialError):
        potential_from_spec("nonsense")


def test_exact_coefficients_are_pigraded(u1):
    assert all(isinstance(c, PiGraded) for c in u1.coeffs_plus.values())
