"""Theta functions, Bloch multipliers and real-space wavefunction tools.

The odd theta function with modular parameter ``ω``::

    θ(ζ) = −Σ_n exp(πi(n+½)²ω + 2πi(n+½)(ζ+½))

vanishes simply on ``Λ = Z ⊕ ωZ`` and satisfies ``θ(ζ+1) = −θ(ζ)`` and
``θ(ζ+ω) = −e^{−πiω−2πiζ}θ(ζ)``.  The Bloch multiplier::

    F_k(z) = e^{(i/2)(z−z̄)k} θ(z − z(k)) / θ(z)

is ``Λ``-periodic and solves ``(2D_z̄ + k)F_k = 0`` away from ``Λ``.

Real-space samples use the offset grid ``z = s + tω`` with
``s, t ∈ {(i + ½)/M}``, which never meets ``Λ`` or ``±z_S``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize as so

from .algebra import MODE_SCALE, OMEGA_C, SQRT3, Z_STACK, lattice_coords, z_map
from .errors import IllConditionedZero, PoleAt
from .fourier_ops import TruncationParams, _as_params, build_D

POLE_TOL = 1e-10
_Q_ABS_LOG = -math.pi * SQRT3 / 2  # log|e^{πiω}|


class ThetaEvaluator:
    """Truncated theta series with a cutoff set by a target precision.

    Parameters
    ----------
    tol
        Bound on the neglected terms relative to the leading term.
    """

    def __init__(self, tol: float = 1e-17):
        self.tol = tol

    def n_terms(self, ymax: float) -> int:
        """Cutoff ``M`` so that terms with ``|n + ½| > M`` are below ``tol``.

        A term has modulus ``exp(−π(√3/2)x² + 2π|Im ζ|x)`` with ``x = n + ½``.
        """
        a = -_Q_ABS_LOG
        b = 2 * math.pi * abs(ymax)
        c = -math.log(self.tol)
        x = (b + math.sqrt(b * b + 4 * a * c)) / (2 * a)
        return int(math.ceil(x)) + 1

    def _ns(self, zeta: np.ndarray) -> np.ndarray:
        ymax = float(np.max(np.abs(np.imag(zeta)))) if zeta.size else 0.0
        M = self.n_terms(ymax)
        return np.arange(-M, M) + 0.5

    def series(self, zeta, deriv: int = 0) -> np.ndarray:
        """``θ^{(deriv)}(ζ)`` by direct summation (no argument reduction)."""
        z = np.asarray(zeta, dtype=complex)
        x = self._ns(z)
        # shape (..., n)
        ph = np.exp(1j * math.pi * x * x * OMEGA_C + 2j * math.pi * np.multiply.outer(z + 0.5, x))
        if deriv:
            ph = ph * (2j * math.pi * x) ** deriv
        return -ph.sum(axis=-1)

    def __call__(self, zeta, deriv: int = 0):
        return self.series(zeta, deriv)

    def shifted(self, z: np.ndarray, w: np.ndarray, deriv: int = 0) -> np.ndarray:
        """Matrix ``θ^{(deriv)}(z_i − w_j)`` via a factorised series."""
        z = np.asarray(z, dtype=complex).ravel()
        w = np.asarray(w, dtype=complex).ravel()
        ymax = float(np.max(np.abs(z.imag))) + float(np.max(np.abs(w.imag))) if z.size and w.size else 0.0
        M = self.n_terms(ymax)
        x = np.arange(-M, M) + 0.5
        cst = np.exp(1j * math.pi * x * x * OMEGA_C + 1j * math.pi * x)
        if deriv:
            cst = cst * (2j * math.pi * x) ** deriv
        Az = np.exp(2j * math.pi * np.outer(z, x)) * cst
        Bw = np.exp(-2j * math.pi * np.outer(x, w))
        return -(Az @ Bw)


THETA = ThetaEvaluator()


def theta1(zeta, reduce: bool = True):
    """``θ(ζ)``; with ``reduce`` the argument is first moved near the origin.

    Reduction uses ``θ(ζ + m + nω) = (−1)^{m+n} e^{−πin²ω − 2πiζn} θ(ζ)``.
    """
    z = np.asarray(zeta, dtype=complex)
    if not reduce:
        return THETA(z)
    t = z.imag / (SQRT3 / 2)
    n = np.round(t)
    s = z.real + t / 2
    m = np.round(s)
    z0 = z - m - n * OMEGA_C
    # θ(z0 + nω + m) = (−1)^m θ(z0 + nω)
    fac = (-1.0) ** (m + n) * np.exp(-1j * math.pi * n * n * OMEGA_C - 2j * math.pi * z0 * n)
    return fac * THETA(z0)


def _check_pole(z: np.ndarray) -> None:
    z = np.atleast_1d(z)
    t = z.imag / (SQRT3 / 2)
    s = z.real + t / 2
    d = np.abs(z - (np.round(s) + np.round(t) * OMEGA_C))
    # the nearest lattice point may differ from the rounded one; recheck neighbours
    for da, db in ((1, 0), (0, 1), (1, 1), (-1, 0), (0, -1), (-1, -1)):
        d = np.minimum(d, np.abs(z - (np.round(s) + da + (np.round(t) + db) * OMEGA_C)))
    if np.any(d < POLE_TOL):
        raise PoleAt(f"point within {POLE_TOL:g} of the lattice")


def F_k(z, k: complex):
    """Bloch multiplier ``F_k(z)``."""
    z = np.asarray(z, dtype=complex)
    _check_pole(z)
    return np.exp(-z.imag * k) * theta1(z - z_map(k)) / theta1(z)


def dF_dk(z, k: complex):
    """Holomorphic derivative ``∂_k F_k(z)``."""
    z = np.asarray(z, dtype=complex)
    _check_pole(z)
    zk = z - z_map(k)
    lead = np.exp(-z.imag * k) / THETA(z)
    dz = SQRT3 / (4j * math.pi)
    return lead * (-z.imag * THETA(zk) - dz * THETA(zk, 1))


def e_p(k: complex, p: complex) -> complex:
    """``e_p(k) = θ(z(k)) / θ(z(k + p))``."""
    return complex(theta1(z_map(k)) / theta1(z_map(k + p)))


# --------------------------------------------------------------------------
# Weierstrass ℘
# --------------------------------------------------------------------------


def _reduce_cell(z: np.ndarray) -> np.ndarray:
    t = z.imag / (SQRT3 / 2)
    s = z.real + t / 2
    return z - np.round(s) - np.round(t) * OMEGA_C


def _theta_consts() -> tuple[complex, complex]:
    t1 = complex(THETA(np.array([0j]), 1)[0])
    t3 = complex(THETA(np.array([0j]), 3)[0])
    return t1, t3


_T1, _T3 = _theta_consts()
_WP_CONST = _T3 / (3 * _T1)


def _logtheta_derivs(z: np.ndarray):
    th = THETA(z)
    d1, d2, d3 = THETA(z, 1) / th, THETA(z, 2) / th, THETA(z, 3) / th
    l2 = d2 - d1 * d1
    l3 = d3 - 3 * d2 * d1 + 2 * d1**3
    return l2, l3


def weierstrass_p(z, method: str = "theta"):
    """``℘(z)`` for the lattice ``Λ``.

    ``method="theta"`` uses ``℘ = −(log θ)'' + θ'''(0)/(3θ'(0))``;
    ``method="lattice"`` sums ``1/z² + Σ' [1/(z−γ)² − 1/γ²]`` over
    hexagonal shells.
    """
    z = np.asarray(z, dtype=complex)
    _check_pole(z)
    z0 = _reduce_cell(z)
    if method == "lattice":
        return np.vectorize(_wp_lattice, otypes=[complex])(z0)
    l2, _ = _logtheta_derivs(z0)
    return -l2 + _WP_CONST


def p_prime(z):
    """``℘'(z) = −(log θ)'''(z)``."""
    z = np.asarray(z, dtype=complex)
    _check_pole(z)
    _, l3 = _logtheta_derivs(_reduce_cell(z))
    return -l3


def lattice_radius(z: complex, tol: float = 1e-10) -> int:
    """Shell radius with tail ``≈ (9/4)·5|z|⁴ R⁻⁴`` below ``tol``.

    Symmetric hexagonal shells cancel every power ``γ^{-n}`` with ``6 ∤ n``,
    so the first surviving tail term is ``5z⁴ Σ γ^{-6}``.
    """
    r = abs(z)
    return max(8, int(math.ceil(r * (11.25 * 2 / tol) ** 0.25)))


def _wp_lattice(z: complex, tol: float = 1e-10) -> complex:
    R = lattice_radius(z, tol)
    a = np.arange(-R, R + 1)
    A, B = np.meshgrid(a, a, indexing="ij")
    keep = np.maximum(np.maximum(np.abs(A), np.abs(B)), np.abs(A - B)) <= R
    keep &= (A != 0) | (B != 0)
    g = (A[keep] + B[keep] * OMEGA_C).astype(complex)
    return complex(1 / z**2 + np.sum(1 / (z - g) ** 2 - 1 / g**2))


# --------------------------------------------------------------------------
# real-space sampling
# --------------------------------------------------------------------------


def grid_points(M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Offset grid ``(s, t, z)`` over one cell; ``z[i, l] = s_i + t_l ω``."""
    s = (np.arange(M) + 0.5) / M
    S, T = np.meshgrid(s, s, indexing="ij")
    return s, s, S + T * OMEGA_C


def _component_modes(t: TruncationParams, comp: int):
    b = t.basis
    return b.modes(comp)


def sample_grid(coeffs: np.ndarray, t: TruncationParams | int, M: int) -> np.ndarray:
    """Spinor samples ``(2, M, M)`` of ``Σ c_ν e^{i⟨ν,z⟩}`` on the offset grid.

    Uses ``⟨ν, s + tω⟩ = (2π/3)(a t − b s)`` for ``ν = MODE_SCALE(a + bω)``.
    """
    t = _as_params(t)
    n = t.basis.n
    s, tt, _ = grid_points(M)
    out = np.empty((2, M, M), dtype=complex)
    for comp in (1, 2):
        modes = _component_modes(t, comp)
        c = coeffs[(comp - 1) * n : comp * n]
        a_vals, a_idx = np.unique(modes[:, 0], return_inverse=True)
        b_vals, b_idx = np.unique(modes[:, 1], return_inverse=True)
        C = np.zeros((len(b_vals), len(a_vals)), dtype=complex)
        np.add.at(C, (b_idx, a_idx), c)
        Ps = np.exp(-2j * math.pi * np.outer(s, b_vals) / 3)
        Pt = np.exp(2j * math.pi * np.outer(tt, a_vals) / 3)
        out[comp - 1] = Ps @ C @ Pt.T
    return out


def evaluate_spinor(coeffs: np.ndarray, t: TruncationParams | int, z) -> np.ndarray:
    """Spinor values at arbitrary points; shape ``(2,) + z.shape``."""
    t = _as_params(t)
    z = np.asarray(z, dtype=complex)
    n = t.basis.n
    zc = np.conj(z.ravel())
    out = np.empty((2, z.size), dtype=complex)
    for comp in (1, 2):
        nu = t.basis.nu(comp)
        c = coeffs[(comp - 1) * n : comp * n]
        out[comp - 1] = np.exp(1j * np.real(np.outer(zc, nu))) @ c
    return out.reshape((2,) + z.shape)


_RESIDUE = {1: (1, 2), 2: (2, 1), 0: (0, 0)}


def grid_to_coeffs(samples: np.ndarray, residue: tuple[int, int], max_abs: int | None = None) -> dict:
    """Fourier coefficients of one sampled component.

    ``residue`` is ``(a, b) mod 3`` of the component's modes.  Returns
    ``{(a, b): c}`` with ``|A|, |B| < M/2`` in ``a = a₀ + 3A``, ``b = b₀ + 3B``.
    """
    M = samples.shape[0]
    a0, b0 = residue
    s, tt, _ = grid_points(M)
    S, T = np.meshgrid(s, tt, indexing="ij")
    f = samples * np.exp(-2j * math.pi * (a0 * T - b0 * S) / 3)
    F = np.fft.fft2(f) / (M * M)
    k = np.fft.fftfreq(M, 1.0 / M).astype(int)
    out = {}
    for p, Bneg in enumerate(k):
        for q, A in enumerate(k):
            B = -Bneg
            if 2 * abs(A) >= M or 2 * abs(B) >= M:
                continue
            # undo the half-step offset of the grid
            c = F[p, q] * np.exp(-1j * math.pi * (A - B) / M)
            out[(a0 + 3 * A, b0 + 3 * B)] = c
    return out


def spinor_from_grid(samples: np.ndarray, t: TruncationParams | int) -> tuple[np.ndarray, float]:
    """Project sampled spinor onto the truncation's modes.

    Returns the coefficient vector and the discarded ``ℓ²`` mass fraction.
    """
    t = _as_params(t)
    b = t.basis
    vec = np.zeros(2 * b.n, dtype=complex)
    total = kept = 0.0
    for comp in (1, 2):
        cs = grid_to_coeffs(samples[comp - 1], _RESIDUE[comp])
        idx = {tuple(m): i for i, m in enumerate(b.modes(comp).tolist())}
        for key, c in cs.items():
            total += abs(c) ** 2
            i = idx.get(key)
            if i is not None:
                vec[(comp - 1) * b.n + i] = c
                kept += abs(c) ** 2
    return vec, (1 - kept / total) if total else 0.0


def operator_residual(samples: np.ndarray, pot, alpha: complex, k: complex, t: TruncationParams | int) -> float:
    """``‖(D(α)+k)u‖ / ‖(2D_z̄+k)u‖`` for a sampled spinor ``u``."""
    t = _as_params(t)
    c, _ = spinor_from_grid(samples, t)
    D = build_D(pot, alpha, k, t)
    free = np.concatenate([t.basis.nu1, t.basis.nu2]) + k
    return float(np.linalg.norm(D @ c) / np.linalg.norm(free * c))


# --------------------------------------------------------------------------
# flat-band generators and Wronskians
# --------------------------------------------------------------------------


def flat_band_generator(u_samples: np.ndarray, k: complex, r: complex, M: int) -> np.ndarray:
    """``G_{k,r}(z) = F_{k+r}(z) F_{−r}(z) u(z)`` on the offset grid.

    ``u`` must vanish to second order at ``0`` (an ``L²_{0,1}`` kernel
    vector) so that the product is smooth.
    """
    _, _, z = grid_points(M)
    return F_k(z, k + r) * F_k(z, -r) * u_samples


def shifted_generator(u_samples: np.ndarray, k: complex, w: complex, M: int) -> np.ndarray:
    """``F_k(z − w) u(z)``; ``u`` must vanish at ``w``."""
    _, _, z = grid_points(M)
    return F_k(z - w, k) * u_samples


def wronskian(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``W = φ₁ψ₂ − φ₂ψ₁`` of two sampled spinors."""
    return phi[0] * psi[1] - phi[1] * psi[0]


def periodic_residual(W: np.ndarray, k: complex) -> float:
    """``‖(2D_z̄ + k)W‖`` for a periodic sampled function, in ``ℓ²`` of coefficients."""
    cs = grid_to_coeffs(W, (0, 0))
    tot = 0.0
    for (a, b), c in cs.items():
        nu = MODE_SCALE * (a + b * OMEGA_C)
        tot += abs((nu + k) * c) ** 2
    return math.sqrt(tot)


# --------------------------------------------------------------------------
# zeros
# --------------------------------------------------------------------------


@dataclass
class Zero:
    location: complex
    order: int
    slope: float
    fit_residual: float
    value: float


def _cell_key(z: complex) -> tuple[float, float]:
    s, t = lattice_coords(z)
    return (s % 1.0, t % 1.0)


def zero_census(
    coeffs: np.ndarray,
    t: TruncationParams | int,
    M: int = 64,
    seed_frac: float = 0.05,
    zero_tol: float = 1e-6,
    slope_window: float = 0.2,
) -> list[Zero]:
    """Zeros of a spinor over one cell with estimated orders.

    Seeds are grid minima of ``|u|`` below ``seed_frac·max|u|``; each is
    refined by Nelder–Mead on ``|u|²``.  The order is the log-log slope of
    the angular mean of ``|u|`` over radii from ``1e−3`` to ``1e−2``.
    """
    t = _as_params(t)
    samp = sample_grid(coeffs, t, M)
    mod = np.sqrt(np.abs(samp[0]) ** 2 + np.abs(samp[1]) ** 2)
    umax = float(mod.max())
    _, _, zg = grid_points(M)
    nb = np.full(mod.shape, True)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                nb &= mod <= np.roll(np.roll(mod, di, 0), dj, 1)
    seeds = zg[nb & (mod < seed_frac * umax)]

    def f(x):
        v = evaluate_spinor(coeffs, t, np.array([x[0] + 1j * x[1]]))
        return float(np.sum(np.abs(v) ** 2))

    found: list[Zero] = []
    keys: list[tuple[float, float]] = []
    for z0 in seeds:
        res = so.minimize(f, [z0.real, z0.imag], method="Nelder-Mead",
                          options={"xatol": 1e-13, "fatol": 1e-300, "maxiter": 4000})
        zs = complex(res.x[0], res.x[1])
        val = math.sqrt(max(res.fun, 0.0))
        if val > zero_tol * umax:
            continue
        key = _cell_key(zs)
        if any(min(abs(key[0] - k0), 1 - abs(key[0] - k0)) < 1e-6 and min(abs(key[1] - k1), 1 - abs(key[1] - k1)) < 1e-6 for k0, k1 in keys):
            continue
        radii = np.logspace(-3, -2, 9)
        ang = np.exp(2j * math.pi * np.arange(16) / 16)
        pts = zs + np.outer(radii, ang)
        vals = evaluate_spinor(coeffs, t, pts)
        logm = np.log(np.sqrt(np.abs(vals[0]) ** 2 + np.abs(vals[1]) ** 2).mean(axis=1))
        A = np.vstack([np.log(radii), np.ones_like(radii)]).T
        sol, *_ = np.linalg.lstsq(A, logm, rcond=None)
        slope = float(sol[0])
        resid = float(np.sqrt(np.mean((A @ sol - logm) ** 2)))
        order = int(round(slope))
        if abs(slope - order) > slope_window or resid > 0.05:
            raise IllConditionedZero(f"zero near {zs:.6g}: slope {slope:.3f}, fit residual {resid:.3g}")
        keys.append(key)
        found.append(Zero(zs, order, slope, resid, val / umax))
    found.sort(key=lambda q: (round(q.location.real, 6), round(q.location.imag, 6)))
    return found


def lattice_equivalent(z: complex, w: complex, tol: float = 1e-6) -> bool:
    """``z ≡ w (mod Λ)``."""
    d = complex(_reduce_cell(np.array([z - w]))[0])
    return abs(d) < tol


def wavefunction_rows(coeffs: np.ndarray, t: TruncationParams | int, M: int) -> list[tuple[float, ...]]:
    """Rows ``z_re, z_im, |u₁|, |u₂|, arg u₁, arg u₂`` on the offset grid."""
    samp = sample_grid(coeffs, t, M)
    _, _, z = grid_points(M)
    rows = []
    for i in range(M):
        for l in range(M):
            u1, u2 = samp[0, i, l], samp[1, i, l]
            rows.append((z[i, l].real, z[i, l].imag, abs(u1), abs(u2), cmath.phase(u1), cmath.phase(u2)))
    return rows


__all__ = [
    "ThetaEvaluator",
    "theta1",
    "F_k",
    "dF_dk",
    "e_p",
    "weierstrass_p",
    "p_prime",
    "grid_points",
    "sample_grid",
    "evaluate_spinor",
    "grid_to_coeffs",
    "spinor_from_grid",
    "operator_residual",
    "flat_band_generator",
    "shifted_generator",
    "wronskian",
    "periodic_residual",
    "zero_census",
    "lattice_equivalent",
    "wavefunction_rows",
    "Z_STACK",
]
