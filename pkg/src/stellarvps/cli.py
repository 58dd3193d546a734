"""Command-line front end.

    stellarvps inverse   --fixture quartic-5.9
    stellarvps direct    --fixture quadratic-5.1 --R 8 --n 128
    stellarvps transform --kind abel-invert --function two-sqrt
    stellarvps models list

Outputs go to ``--out`` (default: $STELLARVPS_OUT_DIR, else ./out). A
``--config`` file of ``key=value`` lines overrides command-line flags.
Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import abel_eddington as ae
from .ans_solver import NewtonConfig, SolverError, ladder_table, refinement_ladder
from .inverse_problem import Q_FACTOR, EnergySlice, X_function, dH_dh, energy_grid, extendability_verdict
from .models import fixture, fixture_names, list_fixtures
from .potential import DomainError, RangeError

log = logging.getLogger("stellarvps")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
OUT_ENV = "STELLARVPS_OUT_DIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    fixture: str | None = None
    input: str | None = None
    R: float | None = None
    b: float | None = None
    c: float | None = None
    n: int = 128
    grid: int = 10_000
    points: int = 201
    kind: str = "abel-forward"
    function: str | None = None
    prefactor: bool = False
    quad_rtol: float = 1e-10
    newton_rtol: float = 1e-9
    bisection_rtol: float = 1e-12
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        for name in ("quad_rtol", "newton_rtol", "bisection_rtol"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")

    @property
    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "out")


# -- helpers ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return f"{float(v):.6g}"


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s", path)


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    log.info("wrote %s", path)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def _fixture(cfg: RunConfig):
    if cfg.fixture is None:
        raise UsageError("--fixture is required")
    try:
        return fixture(cfg.fixture, R=cfg.R, b=cfg.b, c=cfg.c)
    except (KeyError, TypeError, DomainError) as exc:
        raise UsageError(str(exc)) from exc


# -- commands ---------------------------------------------------------------------------

def cmd_inverse(cfg: RunConfig) -> int:
    fx = _fixture(cfg)
    if fx.density is None:
        raise UsageError(f"{fx.name} has no density; use the direct command")
    p = fx.density
    report = extendability_verdict(p, grid_size=cfg.grid)
    stem = cfg.out_dir / f"{fx.name}-inverse"
    doc = report.to_dict()
    doc["fixture"] = fx.name
    doc["expected"] = fx.expected
    _write_json(Path(f"{stem}.json"), doc)

    r = p.R * np.arange(1, cfg.points + 1) / (cfg.points + 1)
    _write_csv(Path(f"{stem}-X.csv"), ["r", "X"],
               [[_fmt(a), _fmt(b)] for a, b in zip(r, np.asarray(X_function(p, r)))])
    es = EnergySlice(p)
    if np.isfinite(es.span):
        h = energy_grid(es.span)
        d = dH_dh(p, h, slice_=es)
        _write_csv(Path(f"{stem}-q.csv"), ["h", "q", "dH_dh", "error"],
                   [[_fmt(a), _fmt(Q_FACTOR * v), _fmt(v), _fmt(e)]
                    for a, v, e in zip(h, d.value, d.error)])
    print(f"{fx.name}: {report.verdict} ({report.evidence})")
    return EXIT_OK


def cmd_direct(cfg: RunConfig) -> int:
    fx = _fixture(cfg)
    if fx.G0 is None:
        raise UsageError(f"{fx.name} has no G0 map for the direct problem")
    R = cfg.R if cfg.R is not None else fx.params.get("R", 8.0)
    ref = fx.density if fx.density is not None and fx.density.R == R else None
    newton = NewtonConfig(step_rtol=cfg.newton_rtol)
    try:
        reports = refinement_ladder(fx.G0, R, cfg.n, reference=ref, config=newton,
                                    scalar_rtol=cfg.bisection_rtol)
    except SolverError as exc:
        if exc.report is not None:
            _write_json(cfg.out_dir / f"{fx.name}-direct-failure.json", exc.report.to_dict())
        raise
    stem = cfg.out_dir / f"{fx.name}-direct"
    _write_json(Path(f"{stem}.json"),
                {"fixture": fx.name, "R": R, "reports": [rep.to_dict() for rep in reports]})
    if cfg.n >= 2:
        E0 = float(ref.potential(R)) if ref is not None else None
        rows = ladder_table(reports, r_step=R / 16, reference=ref, E0_exact=E0)
        _write_csv(Path(f"{stem}.csv"), None, rows)
    else:
        rep = reports[0]
        _write_csv(Path(f"{stem}.csv"), ["n", "x0", "E0n", "residual"],
                   [[1, _fmt(rep.x[0]), _fmt(rep.E0n), _fmt(rep.residual)]])
    fin = reports[-1]
    print(f"{fx.name}: n={fin.n} p_n(0)={fin.x[0]:.6g} E0n={fin.E0n:.6g}")
    return EXIT_OK


_BUILTIN = {
    "zero": (lambda s: np.zeros_like(s), lambda s: np.zeros_like(s), lambda s: np.zeros_like(s)),
    "one": (lambda s: np.ones_like(s), lambda s: np.zeros_like(s), lambda s: np.zeros_like(s)),
    "two-sqrt": (lambda s: 2 * np.sqrt(s), lambda s: 1 / np.sqrt(s), lambda s: -0.5 * s**-1.5),
    "inv-sqrt": (lambda s: 1 / np.sqrt(s), lambda s: -0.5 * s**-1.5, lambda s: 0.75 * s**-2.5),
}


def _transform_input(cfg: RunConfig):
    """Right-hand side as a HalfLineFunction plus the evaluation grid."""
    if cfg.input:
        try:
            data = np.loadtxt(cfg.input, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read input samples: {exc}") from exc
        x, g = data[:, 0], data[:, 1]
        if x[0] != 0.0:
            raise UsageError("input samples must start at x = 0")
        spline = CubicSpline(x, g)
        fn = ae.HalfLineFunction(float(x[-1]), spline, spline.derivative(1), spline.derivative(2))
        return fn, x[1:]
    if cfg.fixture:
        fx = _fixture(cfg)
        cl = fx.closed
        if cfg.kind.endswith("forward") and "q" in cl:
            T = fx.params.get("R", 1.0) if "P0" not in cl else cl["P0"] - cl["E0"]
            fn = ae.HalfLineFunction(T, cl["q"])
        elif cfg.kind.endswith("invert") and "F0" in cl:
            T = cl["P0"] - cl["E0"] if "P0" in cl else 1.0
            fn = ae.HalfLineFunction(T, cl["F0"], cl["dF0"], cl["d2F0"])
        else:
            raise UsageError(f"fixture {fx.name} provides no input for {cfg.kind}")
    else:
        name = cfg.function or "zero"
        if name not in _BUILTIN:
            raise UsageError(f"unknown function {name!r}; choose from {', '.join(_BUILTIN)}")
        f, df, d2f = _BUILTIN[name]
        fn = ae.HalfLineFunction(1.0, f, df, d2f)
    x = fn.T * np.arange(1, cfg.points + 1) / (cfg.points + 1)
    return fn, x


def cmd_transform(cfg: RunConfig) -> int:
    fn, x = _transform_input(cfg)
    if cfg.kind == "abel-forward":
        y = ae.abel_forward(fn, x, rtol=cfg.quad_rtol)
    elif cfg.kind == "abel-invert":
        y = ae.abel_invert(fn, x, rtol=cfg.quad_rtol)
    elif cfg.kind == "eddington-forward":
        y = ae.eddington_forward(fn, x, prefactor=cfg.prefactor, rtol=cfg.quad_rtol)
    elif cfg.kind == "eddington-invert":
        y = ae.eddington_invert(fn, x, prefactor=cfg.prefactor, rtol=cfg.quad_rtol)
    else:
        raise UsageError(f"unknown transform kind {cfg.kind!r}")
    label = cfg.fixture or (Path(cfg.input).stem if cfg.input else cfg.function or "zero")
    path = cfg.out_dir / f"{label}-{cfg.kind}.{cfg.format}"
    if cfg.format == "json":
        _write_json(path, {"x": np.asarray(x), "y": np.asarray(y), "kind": cfg.kind})
    else:
        _write_csv(path, ["x", "y"], [[_fmt(a), _fmt(b)] for a, b in zip(x, np.asarray(y))])
    print(f"{cfg.kind}: {len(x)} samples -> {path}")
    return EXIT_OK


def cmd_models(cfg: RunConfig) -> int:
    rows = list_fixtures()
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


# -- argument handling ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stellarvps", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file overriding flags")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--fixture", help=f"one of: {', '.join(fixture_names())}")
        p.add_argument("--R", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--c", type=float)

    p = sub.add_parser("inverse", help="extendability verdict for a density")
    common(p)
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--points", type=int, default=201)

    p = sub.add_parser("direct", help="refinement ladder for the direct problem")
    common(p)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--newton-rtol", dest="newton_rtol", type=float, default=1e-9)
    p.add_argument("--bisection-rtol", dest="bisection_rtol", type=float, default=1e-12)

    p = sub.add_parser("transform", help="Abel / Eddington transforms of sampled functions")
    common(p)
    p.add_argument("--kind", default="abel-forward",
                   choices=("abel-forward", "abel-invert", "eddington-forward", "eddington-invert"))
    p.add_argument("--input", help="CSV with header and columns x, g(x); first x must be 0")
    p.add_argument("--function", help=f"built-in input: {', '.join(_BUILTIN)}")
    p.add_argument("--prefactor", action="store_true", help="include 4 pi sqrt 2")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--quad-rtol", dest="quad_rtol", type=float, default=1e-10)

    p = sub.add_parser("models", help="built-in fixtures")
    p.add_argument("action", choices=("list",))
    return ap


def _apply_config_file(ns: argparse.Namespace, parser: argparse.ArgumentParser):
    """Override parsed flags with ``key=value`` lines (``#`` starts a comment)."""
    path = getattr(ns, "config", None)
    if not path:
        return
    sub = parser._subparsers._group_actions[0].choices[ns.command]
    types = {a.dest: a.type for a in sub._actions}
    flags = {a.dest for a in sub._actions if a.const is True}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types or key in ("config", "help"):
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        if key in flags:
            setattr(ns, key, value.lower() in ("1", "true", "yes", "on"))
            continue
        conv = types[key] or str
        try:
            setattr(ns, key, conv(value))
        except ValueError as exc:
            raise UsageError(f"{path}:{no}: bad value for {key}: {value}") from exc


_COMMANDS = {"inverse": cmd_inverse, "direct": cmd_direct, "transform": cmd_transform,
             "models": cmd_models}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        _apply_config_file(ns, parser)
        fields = set(RunConfig.__dataclass_fields__)
        cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in fields})
        if cfg.command == "direct" and (cfg.n < 1 or cfg.n & (cfg.n - 1)):
            raise UsageError("--n must be a power of two")
        return _COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ae.NonInvertibleError as exc:
        print(f"non-invertible input: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SolverError, RangeError, DomainError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
