"""Command-line interface.

Every subcommand is driven by a :class:`RunConfig`, writes plain JSON/CSV
into ``--out`` and prints the JSON report on stdout.  Failures print a
JSON error object and exit with status 2.

Results are cached under ``$CHIRAL_MAGIC_CACHE`` (when set) keyed by a hash
of the canonical config; a cached payload is used only if its stored config
matches exactly.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ChiralMagicError, InexactCoefficients

log = logging.getLogger(__name__)

CACHE_ENV = "CHIRAL_MAGIC_CACHE"
COMMANDS = ("magic", "classify", "trace", "bands", "wavefunction", "chern", "sweep")
# fields that never change the output
_NON_SEMANTIC = ("out", "cache", "workers")


@dataclass
class RunConfig:
    """Everything a run depends on; serialisable to JSON."""

    command: str
    potential: Any = "u2"
    N: int = 16
    window: str = "real"
    count: int | None = 6
    alpha_max: float | None = None
    alpha: str = "first"
    ell: int = 2
    subspace: str = "full"
    exact_remainder: bool = False
    criterion: bool = False
    schedule: list[int] = field(default_factory=lambda: [16, 32, 64])
    path: list[str] = field(default_factory=lambda: ["Gamma", "K", "M", "Gamma"])
    n_per_segment: int = 20
    grid: int | None = None
    n_bands: int = 6
    model: str = "chiral"
    beta: float = 0.0
    M: int = 64
    k: str = "0"
    theta_start: float = 0.0
    theta_stop: float = 2 * math.pi
    steps: int = 64
    family: str = "mixed"
    mode: str = "magic"
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "."
    cache: bool = True
    workers: int = 1

    def semantic(self) -> dict:
        d = asdict(self)
        for key in _NON_SEMANTIC:
            d.pop(key)
        return d

    def config_hash(self) -> str:
        blob = json.dumps({"version": __version__, "config": self.semantic()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _cpx(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def parse_complex(s: str) -> complex:
    return complex(str(s).replace(" ", "").replace("i", "j"))


def _pot(cfg: RunConfig):
    from .potential import potential_from_spec

    return potential_from_spec(cfg.potential)


def _alpha(cfg: RunConfig, pot) -> complex:
    if cfg.alpha != "first":
        return parse_complex(cfg.alpha)
    from .spectral import magic_angles

    ms = magic_angles(pot, cfg.N, "real", count=1)
    if not ms:
        from .errors import EmptyKernel

        raise EmptyKernel("no real magic angle found")
    return ms[0].alpha


def _pool_map(cfg: RunConfig, fn: Callable, items) -> list:
    items = list(items)
    if cfg.workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, items))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class Payload:
    """Report plus named CSV tables (header row first)."""

    report: dict
    tables: dict[str, list[list]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"report": self.report, "tables": self.tables}


def write_payload(cfg: RunConfig, payload: Payload) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    report = dict(payload.report)
    report["config_hash"] = cfg.config_hash()
    report["command"] = cfg.command
    p = out / f"{cfg.command}.json"
    p.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    written.append(p)
    for name, rows in sorted(payload.tables.items()):
        q = out / f"{name}.csv"
        with open(q, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        written.append(q)
    return written


# --------------------------------------------------------------------------
# cache
# --------------------------------------------------------------------------


def _cache_path(cfg: RunConfig) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root or not cfg.cache:
        return None
    return Path(root) / f"{cfg.command}-{cfg.config_hash()}.json"


def cache_load(cfg: RunConfig) -> Payload | None:
    p = _cache_path(cfg)
    if p is None or not p.exists():
        return None
    try:
        blob = json.loads(p.read_text())
    except json.JSONDecodeError:
        return None
    if blob.get("config_hash") != cfg.config_hash() or blob.get("config") != cfg.semantic():
        return None
    return Payload(blob["payload"]["report"], blob["payload"]["tables"])


def cache_store(cfg: RunConfig, payload: Payload) -> None:
    p = _cache_path(cfg)
    if p is None:
        return
    p.parent.mkdir(parents=True, exist_ok=True)
    blob = {"config_hash": cfg.config_hash(), "config": cfg.semantic(), "payload": payload.to_json()}
    tmp = p.with_suffix(".tmp")
    tmp.write_text(json.dumps(blob, sort_keys=True))
    tmp.replace(p)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_magic(cfg: RunConfig) -> Payload:
    """Magic angles in a window with multiplicities."""
    from .spectral import magic_angles

    pot = _pot(cfg)
    window = cfg.window
    if window == "complex":
        window = "all"
    ms = magic_angles(pot, cfg.N, window, count=cfg.count, alpha_max=cfg.alpha_max,
                      stability_delta=cfg.tolerances.get("stability_delta"))
    rows = [["alpha_re", "alpha_im", "classification", "algebraic_mult", "geometric_mult", "subspace"]]
    rows += [[m.alpha.real, m.alpha.imag, m.classification, m.algebraic_mult, m.geometric_mult, m.subspace] for m in ms]
    rep = {"potential": pot.name, "N": cfg.N, "window": cfg.window, "angles": [m.to_dict() for m in ms]}
    return Payload(rep, {"magic": rows})


def cmd_classify(cfg: RunConfig) -> Payload:
    from .spectral import classify

    pot = _pot(cfg)
    ma = classify(pot, _alpha(cfg, pot), cfg.N)
    d = ma.to_dict()
    d["pattern"] = list(ma.pattern())
    return Payload({"potential": pot.name, "angle": d})


def cmd_trace(cfg: RunConfig) -> Payload:
    """Numeric traces, exact remainders and the non-real criterion."""
    from .traces import exact_remainders, nonreal_criterion, numeric_trace, subspace_trace

    pot = _pot(cfg)
    sched = tuple(cfg.schedule)
    rep: dict = {"potential": pot.name, "ell": cfg.ell}
    if cfg.subspace == "full":
        tr = numeric_trace(pot, cfg.ell, "full", sched)
    else:
        tr = subspace_trace(pot, cfg.ell, int(cfg.subspace), sched)
    rep["trace"] = tr.to_dict()
    if cfg.exact_remainder:
        try:
            R = exact_remainders(pot, cfg.ell)
        except InexactCoefficients as exc:
            raise InexactCoefficients(
                f"{exc}; give exact orbit coefficients and put any irrational factor in 'scale' with 'scale_sq'"
            ) from exc
        vals = [str(R[j]) for j in (0, 1, 2)]
        rep["exact_remainders"] = {"R": vals, "text": "R = [" + ", ".join(vals) + "]"}
    if cfg.criterion:
        subs = ["full", "2"] if cfg.subspace == "full" else [cfg.subspace]
        rep["criterion"] = {s: nonreal_criterion(pot, s if s == "full" else int(s), sched) for s in subs}
    return Payload(rep)


def cmd_bands(cfg: RunConfig) -> Payload:
    """Bands along a path or over a grid; chiral or full model."""
    from .bands import bands_at, full_bm_bands, k_grid, k_path, multiplicity

    pot = _pot(cfg)
    alpha = _alpha(cfg, pot)
    if cfg.grid:
        ks = k_grid(cfg.grid)
        labels: dict[int, str] = {}
    else:
        ks, labels = k_path(tuple(cfg.path), cfg.n_per_segment)
    nb = cfg.n_bands
    if cfg.model == "chiral":
        E = np.array(_pool_map(cfg, lambda k: bands_at(pot, alpha, k, cfg.N, nb), ks))
    elif cfg.model == "full":
        def one(k):
            w = full_bm_bands(pot, alpha, cfg.beta, k, cfg.N)
            mid = len(w) // 2
            return w[mid - nb : mid + nb]

        E = np.array(_pool_map(cfg, one, ks))
    else:
        raise ValueError(f"unknown model {cfg.model!r}")
    width = E.shape[1]
    rows = [["index", "k_re", "k_im", "label"] + [f"E{j + 1}" for j in range(width)]]
    for i, (k, e) in enumerate(zip(ks, E)):
        rows.append([i, float(k.real), float(k.imag), labels.get(i, "")] + [float(x) for x in e])
    rep: dict = {"potential": pot.name, "alpha": _cpx(alpha), "model": cfg.model, "beta": cfg.beta, "N": cfg.N,
                 "n_k": len(ks)}
    if cfg.model == "chiral":
        from .bands import BandGrid

        g = BandGrid(ks, E, alpha)
        try:
            mr = multiplicity(pot, alpha, ks, cfg.N, grid=g, n_bands=nb)
            rep["multiplicity"] = mr.m
            rep["flat_max"] = mr.flat_max
            rep["gap_min"] = mr.gap_min
        except ChiralMagicError as exc:
            rep["multiplicity_error"] = exc.to_dict()
        rep["band_max"] = [float(x) for x in E.max(axis=0)]
    return Payload(rep, {"bands": rows})


def cmd_wavefunction(cfg: RunConfig) -> Payload:
    """Kernel vectors at ``k``: sampled moduli and phases plus zero census."""
    from .spectral import kernel_basis
    from .theta import wavefunction_rows, zero_census

    pot = _pot(cfg)
    alpha = _alpha(cfg, pot)
    k = parse_complex(cfg.k)
    kv = kernel_basis(pot, alpha, k, cfg.N)
    tables, vecs = {}, []
    for i, v in enumerate(kv):
        c = _fix_phase(v.coeffs)
        name = f"wavefunction_{i}"
        rows = [["z_re", "z_im", "abs_u1", "abs_u2", "arg_u1", "arg_u2"]] + [list(r) for r in wavefunction_rows(c, cfg.N, cfg.M)]
        tables[name] = rows
        zs = zero_census(c, cfg.N, cfg.M)
        vecs.append({
            "index": i,
            "subspace": v.subspace,
            "residual": v.residual,
            "zeros": [{"z": _cpx(z.location), "order": z.order, "slope": z.slope} for z in zs],
        })
    rep = {"potential": pot.name, "alpha": _cpx(alpha), "k": _cpx(k), "N": cfg.N, "M": cfg.M, "vectors": vecs}
    return Payload(rep, tables)


def _fix_phase(c: np.ndarray) -> np.ndarray:
    """Deterministic phase: largest coefficient real and positive."""
    i = int(np.argmax(np.abs(c)))
    return c * (abs(c[i]) / c[i])


def cmd_chern(cfg: RunConfig) -> Payload:
    """Chern number, boundary decomposition, curvature field and slices."""
    from .algebra import Q1
    from .chern import _in_mask, boundary_integral_c1, chern_plaquette, cross_section, curvature_field, extrema_report, flat_band_bundle

    pot = _pot(cfg)
    alpha = _alpha(cfg, pot)
    n = cfg.grid or 24
    b = flat_band_bundle(pot, alpha, cfg.N, cfg.M)
    pl = chern_plaquette(pot, alpha, n, cfg.N, cfg.M)
    bi = boundary_integral_c1(pot, alpha, cfg.N, cfg.M, bundle=b)
    fld = curvature_field(pot, alpha, n, cfg.N, cfg.M, bundle=b)
    ky = (np.arange(80) + 0.5) / 80 * 2 * abs(Q1) - abs(Q1)
    ky = ky[~_in_mask(1j * ky)]
    Hs = cross_section(b, ky)
    curv = [["k_re", "k_im", "H"]] + [[float(k.real), float(k.imag), float(h)] for k, h, m in zip(fld.ks, fld.H, fld.mask) if not m]
    sec = [["k_y", "H"]] + [[float(y), float(h)] for y, h in zip(ky, Hs)]
    ext = extrema_report(b, fld)
    rep = {
        "potential": pot.name,
        "alpha": _cpx(alpha),
        "rank": b.rank,
        "c1": pl.c1,
        "plaquette_raw": pl.raw,
        "boundary": int(round(bi.boundary_term)),
        "puncture": int(round(bi.puncture_term)),
        "boundary_value": bi.boundary_term,
        "puncture_value": bi.puncture_term,
        "total_value": bi.total,
        "grid": n,
        "H_min": float(np.nanmin(fld.H)),
        "H_max": float(np.nanmax(fld.H)),
        "extrema": {key: ({"H": v["H"], "grad": v["grad"]} if "grad" in v else v) for key, v in ext.items()},
    }
    return Payload(rep, {"curvature": curv, "cross_section": sec})


def _sweep_step(cfg: RunConfig, theta: float) -> dict:
    from .potential import build_interpolated, build_mixed
    from .spectral import magic_angles

    build = {"mixed": build_mixed, "literal": build_interpolated}[cfg.family]
    pot = build(float(theta))
    if cfg.mode == "traces":
        from .traces import theta_sweep

        row = theta_sweep([theta], cfg.family, cfg.N, cfg.ell).rows[0]
        return {"theta": theta, "traces": asdict(row)}
    try:
        ms = magic_angles(pot, cfg.N, "all", count=cfg.count, alpha_max=cfg.alpha_max)
    except ChiralMagicError as exc:
        return {"theta": theta, "error": exc.to_dict(), "angles": []}
    angles = [{"alpha": _cpx(m.alpha), "classification": m.classification,
               "algebraic_mult": m.algebraic_mult, "geometric_mult": m.geometric_mult} for m in ms]
    counts = {c: sum(a["classification"] == c for a in angles) for c in ("simple", "double", "jordan_degenerate", "higher")}
    return {"theta": theta, "angles": angles, "counts": counts}


def cmd_sweep(cfg: RunConfig) -> Payload:
    """Magic-angle sets (or traces) along a θ family, checkpointed per θ."""
    thetas = [cfg.theta_start + (cfg.theta_stop - cfg.theta_start) * i / cfg.steps for i in range(cfg.steps)]
    ckdir = Path(cfg.out) / ".checkpoints" / cfg.config_hash()
    ckdir.mkdir(parents=True, exist_ok=True)

    def step(item):
        i, th = item
        p = ckdir / f"step_{i:05d}.json"
        if p.exists():
            blob = json.loads(p.read_text())
            if blob.get("theta") == th:
                return blob
        res = _sweep_step(cfg, th)
        tmp = p.with_suffix(".tmp")
        tmp.write_text(json.dumps(res, sort_keys=True))
        tmp.replace(p)
        return res

    results = _pool_map(cfg, step, list(enumerate(thetas)))
    if cfg.mode == "traces":
        keys = ["theta", "tr_j0", "tr_j1", "tr_j2", "tr_full", "consistency"]
        rows = [keys] + [[r["traces"][k] for k in keys] for r in results]
    else:
        rows = [["theta", "alpha_re", "alpha_im", "classification"]]
        for r in results:
            rows += [[r["theta"], a["alpha"][0], a["alpha"][1], a["classification"]] for a in r["angles"]]
    rep = {"family": cfg.family, "mode": cfg.mode, "N": cfg.N, "steps": cfg.steps, "results": results}
    return Payload(rep, {"sweep": rows})


HANDLERS: dict[str, Callable[[RunConfig], Payload]] = {
    "magic": cmd_magic,
    "classify": cmd_classify,
    "trace": cmd_trace,
    "bands": cmd_bands,
    "wavefunction": cmd_wavefunction,
    "chern": cmd_chern,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig) -> Payload:
    """Execute one config, using and filling the cache."""
    payload = cache_load(cfg)
    if payload is None:
        payload = HANDLERS[cfg.command](cfg)
        # round-trip through JSON so cached and fresh payloads are identical
        payload = Payload(**json.loads(json.dumps(payload.to_json(), sort_keys=True)))
        cache_store(cfg, payload)
    write_payload(cfg, payload)
    return payload


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _opt_int(s: str) -> int | None:
    return None if s.lower() == "none" else int(s)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chiral-magic", description="Magic angles and flat bands of the chiral moiré model.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON RunConfig; command-line flags override it")
        p.add_argument("--potential", default=argparse.SUPPRESS, help='u1, u2, w or JSON such as {"mix": 2.8}')
        p.add_argument("--N", type=int, default=argparse.SUPPRESS)
        p.add_argument("--out", default=argparse.SUPPRESS)
        p.add_argument("--no-cache", dest="cache", action="store_false", default=argparse.SUPPRESS)
        p.add_argument("--workers", type=int, default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--tolerances", type=json.loads, default=argparse.SUPPRESS)

    def alpha(p):
        p.add_argument("--alpha", default=argparse.SUPPRESS, help='"first" or a (complex) number')

    p = sub.add_parser("magic", help="magic angles with multiplicities")
    common(p)
    p.add_argument("--window", default=argparse.SUPPRESS, choices=["real", "complex", "all"])
    p.add_argument("--count", type=_opt_int, default=argparse.SUPPRESS)
    p.add_argument("--alpha-max", dest="alpha_max", type=float, default=argparse.SUPPRESS)

    p = sub.add_parser("classify", help="multiplicity data of one magic angle")
    common(p)
    alpha(p)

    p = sub.add_parser("trace", help="traces of powers, exact remainders, non-real criterion")
    common(p)
    p.add_argument("--ell", type=int, default=argparse.SUPPRESS)
    p.add_argument("--subspace", default=argparse.SUPPRESS, choices=["full", "0", "1", "2"])
    p.add_argument("--exact-remainder", dest="exact_remainder", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--criterion", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--schedule", type=lambda s: [int(x) for x in s.split(",")], default=argparse.SUPPRESS)

    p = sub.add_parser("bands", help="band structure along a path or on a grid")
    common(p)
    alpha(p)
    p.add_argument("--path", type=lambda s: s.split(","), default=argparse.SUPPRESS)
    p.add_argument("--n-per-segment", dest="n_per_segment", type=int, default=argparse.SUPPRESS)
    p.add_argument("--grid", type=int, default=argparse.SUPPRESS)
    p.add_argument("--n-bands", dest="n_bands", type=int, default=argparse.SUPPRESS)
    p.add_argument("--model", choices=["chiral", "full"], default=argparse.SUPPRESS)
    p.add_argument("--beta", type=float, default=argparse.SUPPRESS)

    p = sub.add_parser("wavefunction", help="kernel vectors on a real-space grid")
    common(p)
    alpha(p)
    p.add_argument("--M", type=int, default=argparse.SUPPRESS)
    p.add_argument("--k", default=argparse.SUPPRESS)

    p = sub.add_parser("chern", help="Berry curvature and Chern number")
    common(p)
    alpha(p)
    p.add_argument("--grid", type=int, default=argparse.SUPPRESS)
    p.add_argument("--M", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("sweep", help="magic angles along a θ family")
    common(p)
    p.add_argument("--theta-start", dest="theta_start", type=float, default=argparse.SUPPRESS)
    p.add_argument("--theta-stop", dest="theta_stop", type=float, default=argparse.SUPPRESS)
    p.add_argument("--steps", type=int, default=argparse.SUPPRESS)
    p.add_argument("--family", choices=["mixed", "literal"], default=argparse.SUPPRESS)
    p.add_argument("--mode", choices=["magic", "traces"], default=argparse.SUPPRESS)
    p.add_argument("--count", type=_opt_int, default=argparse.SUPPRESS)
    p.add_argument("--ell", type=int, default=argparse.SUPPRESS)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d: dict = {}
    if getattr(ns, "config", None):
        d.update(json.loads(Path(ns.config).read_text()))
    for key, val in vars(ns).items():
        if key in ("config", "verbose"):
            continue
        d[key] = val
    return RunConfig.from_dict(d)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, stream=sys.stderr)
    try:
        cfg = config_from_args(ns)
        payload = run(cfg)
    except ChiralMagicError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True))
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True))
        return 2
    rep = dict(payload.report)
    rep["config_hash"] = cfg.config_hash()
    print(json.dumps(rep, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
