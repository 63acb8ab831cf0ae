"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values and
then asserts.  The lines are also repeated in the pytest terminal summary.
Run standalone with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chiral_magic.algebra import CycloRational, K_POINT, OMEGA_C, Q1, Q2, PiGraded, Z_STACK  # noqa: E402
from chiral_magic.bands import bands_at, band_grid, k_grid, multiplicity  # noqa: E402
from chiral_magic.chern import (  # noqa: E402
    boundary_integral_c1,
    chern_plaquette,
    flat_band_bundle,
    quasi_periodicity_residual,
)
from chiral_magic.cli import RunConfig, run  # noqa: E402
from chiral_magic.fourier_ops import build_D  # noqa: E402
from chiral_magic.potential import build_interpolated, build_mixed, build_u1, build_u2  # noqa: E402
from chiral_magic.spectral import (  # noqa: E402
    block_eigenvalues,
    classify,
    kernel_basis,
    magic_angles,
    verify_k_independence,
)
from chiral_magic.theta import F_k, lattice_equivalent, theta1, zero_census  # noqa: E402
from chiral_magic.traces import exact_remainders, nonreal_criterion, numeric_trace, subspace_trace  # noqa: E402

from conftest import ALPHA_U1, ALPHA_U2, THETA_TABLE  # noqa: E402

S3 = math.sqrt(3)
RESULTS: dict[int, str] = {}


@dataclass
class Criterion:
    number: int
    title: str
    checks: list[tuple[str, bool]] = field(default_factory=list)

    def check(self, detail: str, ok: bool) -> None:
        self.checks.append((detail, bool(ok)))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok in self.checks)

    def line(self) -> str:
        parts = "; ".join(f"{d} [{'ok' if ok else 'FAIL'}]" for d, ok in self.checks)
        return f"{'PASS' if self.ok else 'FAIL'} criterion {self.number:2d} ({self.title}): {parts}"

    def finish(self) -> None:
        RESULTS[self.number] = self.line()
        print(self.line())
        assert self.ok, self.line()


def rational(x) -> PiGraded:
    return PiGraded.scalar(CycloRational(Fraction(x)))


# ---------------------------------------------------------------------------


def criterion_1(u1, u2) -> Criterion:
    c = Criterion(1, "magic angles")
    t0 = time.perf_counter()
    a2 = magic_angles(u2, 20, "real", count=1)[0].alpha
    dt2 = time.perf_counter() - t0
    c.check(f"U2 first real {a2.real:.7f} vs 0.853799 (tol 5e-5)", abs(a2 - 0.853799) < 5e-5)
    t0 = time.perf_counter()
    cplx = magic_angles(u1, 20, "all", count=4)
    dt1 = time.perf_counter() - t0
    target = complex(0.9628, 0.9873)
    best = min((m.alpha for m in cplx), key=lambda a: abs(a - target))
    c.check(f"U1 first complex {best.real:.5f}{best.imag:+.5f}i vs 0.9628+0.9873i (tol 2e-3)", abs(best - target) < 2e-3)
    c.check(f"runtimes {dt2:.1f}s, {dt1:.1f}s (limit 60s)", max(dt1, dt2) <= 60)
    return c


def criterion_2(u1) -> Criterion:
    c = Criterion(2, "full-trace convergence")
    for ell, want in ((2, 4 * math.pi / S3), (3, 96 * math.pi / (7 * S3)), (4, 40 * math.pi / S3)):
        v = numeric_trace(u1, ell).numeric_value.real
        c.check(f"tr A^{ell} = {v:.6f} vs {want:.6f}", abs(v - want) < 1e-3 * want)
    return c


def criterion_3(u1) -> Criterion:
    c = Criterion(3, "exact remainders")
    R = {ell: exact_remainders(u1, ell) for ell in (2, 3, 4)}
    want = {(2, 0): -9, (2, 1): -9, (2, 2): 18, (3, 2): Fraction(2430, 49), (4, 2): Fraction(13122, 91)}
    for (ell, j), w in want.items():
        c.check(f"R_{ell},{j} = {R[ell][j]}", R[ell][j] == rational(w))
    for ell in (2, 3, 4):
        c.check(f"sum R_{ell},j = 0 and R_{ell},0 = R_{ell},1",
                (R[ell][0] + R[ell][1] + R[ell][2]).is_zero() and R[ell][0] == R[ell][1])
    return c


def criterion_4(u1) -> Criterion:
    c = Criterion(4, "subspace traces")
    for ell, j, want, rtol in ((2, 0, -0.581601, None), (2, 2, 8.4184, None), (3, 2, 24.8223, 2e-3), (4, 2, 72.2499, 2e-3)):
        v = subspace_trace(u1, ell, j).numeric_value.real
        ok = abs(v - want) < 1e-3 if rtol is None else abs(v - want) < rtol * abs(want)
        c.check(f"tr A^{ell}|{j} = {v:.6f} vs {want}", ok)
    return c


def criterion_5(u1) -> Criterion:
    c = Criterion(5, "non-real criterion")
    for j, (lhs, rhs) in (("full", (526.4, 618.8)), (2, (608.2, 616.1))):
        r = nonreal_criterion(u1, j)
        close = abs(r["lhs"] - lhs) < 0.1 and abs(r["rhs"] - rhs) < 0.1
        c.check(f"{j}: {r['lhs']:.1f} < {r['rhs']:.1f}", r["holds"] and close)
    return c


def criterion_6(u1, u2) -> Criterion:
    c = Criterion(6, "rigidity pattern")
    for name, pot, alpha, want in (("U2", u2, ALPHA_U2, (0, 1, 1)), ("U1", u1, ALPHA_U1, (1, 0, 0))):
        ma = classify(pot, alpha, 16)
        c.check(f"{name} pattern {ma.pattern()} gap {ma.sv_gap:.2g}", ma.pattern() == want and ma.sv_gap >= 1e3)
    return c


def criterion_7() -> Criterion:
    c = Criterion(7, "Jordan structure")
    pot = build_mixed(THETA_TABLE)
    ma = classify(pot, 1.2400, 16)
    c.check(f"alpha {ma.alpha.real:.4f} alg {ma.algebraic_mult} geo {ma.geometric_mult}",
            abs(ma.alpha - 1.2400) < 1e-3 and (ma.algebraic_mult, ma.geometric_mult) == (2, 1))
    s = np.sort(np.linalg.svd(build_D(pot, ma.alpha, 0, 16).toarray(), compute_uv=False))
    c.check(f"second singular value {s[1]:.6f} vs 3.990 (tol 5e-2)", abs(s[1] - 3.990) < 5e-2)
    lit = magic_angles(build_interpolated(THETA_TABLE), 16, "all", count=6)
    near = min(lit, key=lambda m: abs(m.alpha - 1.24))
    print(f"info: literal interpolation nearest angle {near.alpha:.4f} ({near.classification})")
    return c


def criterion_8(u1, u2) -> Criterion:
    c = Criterion(8, "flat band and gap")
    g = band_grid(u2, ALPHA_U2, k_grid(12), 12, 4)
    flat = float(g.energies[:, :2].max())
    gap = float(g.energies[:, 2].min())
    c.check(f"max E1,E2 {flat:.2e}", flat < 1e-4)
    c.check(f"min E3 {gap:.3f} ratio {gap / flat:.2e}", gap >= 1e3 * flat)
    m = multiplicity(u2, ALPHA_U2, None, 12, grid=g).m
    c.check(f"m = {m}", m == 2)
    dirac = max(bands_at(p, 0.5, k, 12, 1)[0] for p in (u1, u2) for k in (K_POINT, -K_POINT))
    c.check(f"E1(0.5, ±K) {dirac:.1e}", dirac < 1e-8)
    return c


def criterion_9(u1, u2) -> Criterion:
    c = Criterion(9, "property suites")
    rng = np.random.default_rng(2024)
    k1, k2 = (complex(*rng.uniform(-1.5, 1.5, 2)) for _ in range(2))
    rep = verify_k_independence(u1, 16, k1, k2)
    c.check(f"k-independence {rep.max_distance:.1e} over {rep.n_matched}", rep.n_matched > 0 and rep.max_distance < 1e-6)
    from scipy.optimize import linear_sum_assignment

    e = block_eigenvalues(u2, 12)
    cost = np.abs(e[0][:, None] - e[1][None, :])
    r, col = linear_sum_assignment(cost)
    c.check(f"Spec A0|0,0 = Spec A0|0,1 {cost[r, col].max():.1e}", cost[r, col].max() < 1e-8)
    zs = rng.uniform(-0.5, 0.5, 20) + 1j * rng.uniform(-0.5, 0.5, 20)
    th = theta1(zs, reduce=False)
    q1 = np.abs(theta1(zs + 1, reduce=False) + th)
    q2 = np.abs(theta1(zs + OMEGA_C, reduce=False) + np.exp(-1j * math.pi * OMEGA_C - 2j * math.pi * zs) * th)
    qp = float(np.max(np.maximum(q1, q2) / np.maximum(1, np.abs(th))))
    c.check(f"theta quasi-periodicity {qp:.1e}", qp < 1e-12)
    ks = rng.uniform(-3, 3, 20) + 1j * rng.uniform(-3, 3, 20)
    zz = 0.2 + 0.1j + 0.3 * rng.uniform(size=20)
    f0 = F_k(zz, ks)
    fp = max(float(np.max(np.abs(F_k(zz + s, ks) - f0) / np.maximum(1, np.abs(f0)))) for s in (1, OMEGA_C))
    c.check(f"F_k periodicity {fp:.1e}", fp < 1e-10)
    kv = {v.subspace: v for v in kernel_basis(u2, ALPHA_U2, 0, 12)}
    z0 = zero_census(kv[0].coeffs, 12)
    z1 = zero_census(kv[1].coeffs, 12)
    ok0 = [z.order for z in z0] == [1, 1] and all(
        any(lattice_equivalent(z.location, s) for z in z0) for s in (Z_STACK, -Z_STACK)
    )
    ok1 = len(z1) == 1 and z1[0].order == 2 and lattice_equivalent(z1[0].location, 0)
    c.check("zeros ±z_S simple (j=0), 0 double (j=1)", ok0 and ok1)
    return c


def criterion_10(u2) -> Criterion:
    c = Criterion(10, "topology")
    for n in (24, 48):
        res = chern_plaquette(u2, ALPHA_U2, n=n)
        c.check(f"plaquette {n}^2 c1 = {res.c1} (raw {res.raw:.6f})", res.c1 == -1)
    b = flat_band_bundle(u2, ALPHA_U2, 12, 64)
    bi = boundary_integral_c1(u2, ALPHA_U2, bundle=b)
    c.check(f"boundary {bi.boundary_term:.4f} puncture {bi.puncture_term:.4f}",
            abs(bi.boundary_term + 2) < 0.05 and abs(bi.puncture_term - 1) < 0.05)
    rng = np.random.default_rng(11)
    ks = rng.uniform(-0.5, 0.5, (16, 2)) @ np.array([Q1, Q2])
    ks = ks[np.abs(ks) > 0.3]
    H = b.curvature(ks)
    rot = float(np.max(np.abs(b.curvature(OMEGA_C * ks) - H) / np.abs(H)))
    inv = float(np.max(np.abs(b.curvature(-ks) - H) / np.abs(H)))
    c.check(f"H(ωk), H(-k) rel {max(rot, inv):.1e}", max(rot, inv) < 1e-6)
    c.check(f"min H / max H {H.min() / H.max():.3f}", H.min() >= -1e-6 * H.max())
    ps = np.resize(np.array([Q1, Q2, -Q1, Q1 - Q2]), len(ks))
    qp = quasi_periodicity_residual(b, ks, ps)
    c.check(f"Gramian quasi-periodicity {qp:.1e}", qp < 1e-8)
    return c


CLI_CONFIGS = [
    dict(command="magic", potential="u2", N=10, count=2),
    dict(command="classify", potential="u2", N=10),
    dict(command="trace", potential="u1", ell=2, exact_remainder=True, schedule=[8, 12]),
    dict(command="bands", potential="u2", N=8, n_per_segment=3, n_bands=4),
    dict(command="wavefunction", potential="u2", N=10, M=16),
    dict(command="chern", potential="u2", N=10, grid=8, M=32),
    dict(command="sweep", N=6, steps=2, count=2),
]


def criterion_11() -> Criterion:
    c = Criterion(11, "determinism")
    with tempfile.TemporaryDirectory() as tmp:
        for spec in CLI_CONFIGS:
            dirs = []
            for rep in "ab":
                out = Path(tmp) / spec["command"] / rep
                run(RunConfig(**spec, out=str(out), cache=False))
                dirs.append(out)
            names = sorted(p.name for p in dirs[0].iterdir() if p.is_file())
            same = names == sorted(p.name for p in dirs[1].iterdir() if p.is_file()) and all(
                (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names
            )
            c.check(f"{spec['command']} ({len(names)} files)", same)
    return c


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def pots():
    return build_u1(), build_u2()


def test_criterion_01_magic_angles(pots):
    criterion_1(*pots).finish()


def test_criterion_02_full_traces(pots):
    criterion_2(pots[0]).finish()


def test_criterion_03_exact_remainders(pots):
    criterion_3(pots[0]).finish()


def test_criterion_04_subspace_traces(pots):
    criterion_4(pots[0]).finish()


def test_criterion_05_nonreal(pots):
    criterion_5(pots[0]).finish()


def test_criterion_06_rigidity(pots):
    criterion_6(*pots).finish()


def test_criterion_07_jordan():
    criterion_7().finish()


def test_criterion_08_flat_band(pots):
    criterion_8(*pots).finish()


def test_criterion_09_properties(pots):
    criterion_9(*pots).finish()


def test_criterion_10_topology(pots):
    criterion_10(pots[1]).finish()


def test_criterion_11_determinism():
    criterion_11().finish()


if __name__ == "__main__":
    u1, u2 = build_u1(), build_u2()
    crits = [
        lambda: criterion_1(u1, u2), lambda: criterion_2(u1), lambda: criterion_3(u1), lambda: criterion_4(u1),
        lambda: criterion_5(u1), lambda: criterion_6(u1, u2), criterion_7, lambda: criterion_8(u1, u2),
        lambda: criterion_9(u1, u2), lambda: criterion_10(u2), criterion_11,
    ]
    failed = 0
    for make in crits:
        cr = make()
        print(cr.line(), flush=True)
        failed += not cr.ok
    sys.exit(1 if failed else 0)
