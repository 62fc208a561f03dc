"""Command-line interface.

Exit codes: 0 Fredholm or success, 1 not elliptic, 2 inconclusive,
3 input or config error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import SEARCH_KEYS, load
from .conormal import conormal_family
from .contour import StripSearchConfig, strip_search
from .engine import EngineConfig, INCONCLUSIVE, _clean, check_ellipticity, weight_sweep
from .errors import ConfigError, GConeError, InputError, NumericalFailure
from .halfline import halfline_region_plot, uniform_axis, write_region_csv
from .interior import BoundaryPoint, InteriorPoint, interior_symbol_matrix, write_matrix_csv
from .mellin import selftest
from .operator_model import INFINITY, TIP, identity_operator, make_halfline_operator, make_sphere_operator

EXIT_OK, EXIT_NOT_ELLIPTIC, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3, 4

# self-test pass thresholds
PLANCHEREL_TOL = 1e-6
LAW_TOL = 1e-8
MIN_ORDER = 1.8

DEFAULT_FORMAT = {"region": "csv", "symbol-dump": "csv"}


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2, which is reserved for inconclusive verdicts
    def error(self, message):
        raise UsageError(message)


def _complex_arg(text: str) -> complex:
    s = text.strip().replace(" ", "")
    try:
        if "," in s:
            re_, im = s.split(",")
            return complex(float(re_), float(im))
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r} (use 1.5, 1+2j or 1,2)") from None


def _grid_arg(text: str) -> tuple[int, int]:
    try:
        na, nb = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 200x200, got {text!r}") from None
    if na < 1 or nb < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return na, nb


def _add_operator_args(p):
    g = p.add_argument_group("operator (a config file or inline parameters)")
    g.add_argument("--file", help="operator config document (TOML, schema 1)")
    g.add_argument("--family", choices=["sphere", "halfline", "identity"], help="inline operator family")
    for name in "abcd":
        g.add_argument(f"--{name}", type=_complex_arg, default=0j, help=f"coefficient {name} (complex)")
    g.add_argument("--beta", type=float, help="radial exponent of the shift (sphere, half-line)")
    g.add_argument("--phi0", type=float, default=0.0, help="rotation angle of the shift (sphere)")
    g.add_argument("--alpha", type=float, help="first exponent (half-line)")
    g.add_argument("--gamma-plus", type=float, default=0.0, help="weight at r = 0")
    g.add_argument("--gamma-minus", type=float, default=0.0, help="weight at r = infinity")
    s = p.add_argument_group("strip search overrides")
    s.add_argument("--sigma", type=float, nargs=2, metavar=("LO", "HI"), help="strip Re p range")
    s.add_argument("--height", type=float, help="strip half-height |Im p| <= H")
    s.add_argument("--modes", type=int, help="retain modes |n| <= N")
    s.add_argument("--newton-tol", type=float, help="Newton residual tolerance")
    s.add_argument("--root-tol", type=float, help="distance below which a zero counts as on the line")
    s.add_argument("--line-halfwidth", type=float, help="search half-width around each weight line")


def _add_output_args(p):
    p.add_argument("--format", choices=["text", "csv", "structured"], help="output format")
    p.add_argument("--output", "-o", help="output path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcone", description="Ellipticity checks for G-operators on conical manifolds.")
    parser.add_argument("--version", action="version", version=f"gcone {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="interior and conormal ellipticity report")
    _add_operator_args(p)
    _add_output_args(p)

    p = sub.add_parser("singular-weights", help="zeros of the conormal symbol in a strip")
    _add_operator_args(p)
    _add_output_args(p)

    p = sub.add_parser("sweep", help="conormal verdict on a grid of weight lines")
    _add_operator_args(p)
    _add_output_args(p)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--gammas", type=float, nargs="+", help="explicit weights")
    grid.add_argument("--range", type=float, nargs=3, metavar=("LO", "HI", "N"), help="N equispaced weights")

    p = sub.add_parser("region", help="half-line ellipticity region over (|a|, |b|)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, nargs=2, default=[0.0, 0.0], metavar=("LO", "HI"),
                   help="weight range gamma_- .. gamma_+")
    p.add_argument("--grid", type=_grid_arg, default=(200, 200), help="cells along |a| and |b|, e.g. 200x200")
    p.add_argument("--amax", type=float, default=3.0)
    p.add_argument("--bmax", type=float, default=3.0)
    _add_output_args(p)

    p = sub.add_parser("mellin-selftest", help="Plancherel, shift and derivative law residuals")
    _add_output_args(p)

    p = sub.add_parser("symbol-dump", help="truncated interior symbol matrix")
    _add_operator_args(p)
    _add_output_args(p)
    p.add_argument("--point", choices=["interior", TIP, INFINITY], default=TIP, help="cotangent context")
    p.add_argument("--tau", type=float, default=0.0, help="radial covector component")
    p.add_argument("--eta", type=float, default=1.0, help="base covector component")
    p.add_argument("--window", type=int, default=16, help="window radius W")
    p.add_argument("--s", type=float, default=0.0, help="Sobolev order of the weight")
    return parser


# -- inputs ------------------------------------------------------------------------

def _operator(args):
    if args.file is not None:
        if args.family is not None:
            raise ConfigError("give either --file or inline parameters", key="family")
        return load(args.file)
    if args.family is None:
        raise ConfigError("an operator is required: --file or --family", key="family")
    gp, gm = args.gamma_plus, args.gamma_minus
    if args.family == "identity":
        return identity_operator(gp, gm), {}
    if args.beta is None:
        raise ConfigError("missing value", key="beta")
    if args.family == "sphere":
        return make_sphere_operator(args.a, args.b, args.c, args.d, args.beta, args.phi0, gp, gm), {}
    if args.alpha is None:
        raise ConfigError("missing value", key="alpha")
    return make_halfline_operator(args.a, args.b, args.alpha, args.beta, gp, gm), {}


def _search_config(args, table: dict) -> StripSearchConfig:
    opts = {k: v for k, v in table.items() if k in SEARCH_KEYS}
    for key in ("sigma", "height", "modes", "newton_tol"):
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    try:
        return StripSearchConfig.from_mapping(opts)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key="search") from exc


def _engine_config(args, table: dict) -> EngineConfig:
    cfg = EngineConfig(search=_search_config(args, table))
    if getattr(args, "root_tol", None) is not None:
        cfg = replace(cfg, root_tol=args.root_tol)
    if getattr(args, "line_halfwidth", None) is not None:
        if not args.line_halfwidth > 0:
            raise ConfigError("must be positive", key="line_halfwidth")
        cfg = replace(cfg, line_halfwidth=args.line_halfwidth)
    return cfg


# -- formatting --------------------------------------------------------------------

def _flatten(x, prefix=""):
    if isinstance(x, dict):
        for k in sorted(x):
            yield from _flatten(x[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(x, list):
        if not x:
            yield prefix, "[]"
        for i, v in enumerate(x):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, "" if x is None else x


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _structured(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _report_text(d: dict) -> str:
    lines = [f"overall: {d['overall']}", f"family: {d['family']}", f"digest: {d['digest']}",
             f"weights: gamma_plus={_fmt(d['weights']['gamma_plus'])} gamma_minus={_fmt(d['weights']['gamma_minus'])}"]
    for part in ("interior", "conormal"):
        lines.append(f"{part}:")
        for k, v in _flatten(d[part]):
            lines.append(f"  {k} = {_fmt(v)}")
    lines.append("certificates:")
    lines += [f"  - {c}" for c in d["certificates"]]
    lines.append("notes:")
    lines += [f"  - {n}" for n in d["notes"]] or ["  (none)"]
    return "\n".join(lines) + "\n"


def _table_text(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def _emit(text: str, args) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------------

def _verdict_code(overall: str) -> int:
    if overall.startswith("NotElliptic"):
        return EXIT_NOT_ELLIPTIC
    if overall == INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_check(args, fmt) -> int:
    op, table = _operator(args)
    report = check_ellipticity(op, _engine_config(args, table))
    d = report.to_dict()
    if fmt == "structured":
        _emit(report.to_json(), args)
    elif fmt == "csv":
        _emit(_csv_text(["field", "value"], _flatten(d)), args)
    else:
        _emit(_report_text(d), args)
    return _verdict_code(report.overall)


ROOT_COLUMNS = ["mode", "re", "im", "residual", "multiplicity", "count_check"]


def cmd_singular_weights(args, fmt) -> int:
    op, table = _operator(args)
    cfg = _search_config(args, table)
    res = strip_search(conormal_family(op), cfg, op=op)
    for note in res.notes:
        print(f"gcone: note: {note}", file=sys.stderr)
    rows = [[r.as_dict()[c] for c in ROOT_COLUMNS] for r in res.roots]
    if fmt == "structured":
        _emit(_structured({"sigma": list(cfg.sigma), "height": res.height, "modes": res.modes,
                           "certified": res.certified, "notes": res.notes,
                           "roots": [r.as_dict() for r in res.roots]}), args)
    elif fmt == "csv":
        _emit(_csv_text(ROOT_COLUMNS, [["" if v is None else v for v in r] for r in rows]), args)
    else:
        head = (f"{len(rows)} zero(s) in {_fmt(cfg.sigma[0])} <= Re p <= {_fmt(cfg.sigma[1])}, "
                f"|Im p| <= {_fmt(res.height)}; certified: {res.certified}\n")
        _emit(head + _table_text(ROOT_COLUMNS, [["-" if v is None else v for v in r] for r in rows]), args)
    return EXIT_OK


SWEEP_COLUMNS = ["gamma", "verdict", "nearest_root_distance", "min_modulus", "certified"]


def cmd_sweep(args, fmt) -> int:
    op, table = _operator(args)
    if args.range is not None:
        lo, hi, n = args.range
        if n != int(n) or n < 1:
            raise ConfigError("point count must be a positive integer", key="range")
        gammas = np.linspace(lo, hi, int(n)).tolist()
    else:
        gammas = args.gammas
    rows = weight_sweep(op, gammas, _engine_config(args, table))
    if fmt == "structured":
        _emit(_structured(rows), args)
        return EXIT_OK
    table_rows = [[r[c] for c in SWEEP_COLUMNS] for r in rows]
    table_rows = [["" if v is None else v for v in r] for r in table_rows]
    if fmt == "csv":
        _emit(_csv_text(SWEEP_COLUMNS, table_rows), args)
    else:
        _emit(_table_text(SWEEP_COLUMNS, table_rows), args)
    return EXIT_OK


def cmd_region(args, fmt) -> int:
    na, nb = args.grid
    lo, hi = sorted(args.gamma)
    if not (args.amax > 0 and args.bmax > 0):
        raise ConfigError("grid bounds must be positive", key="amax" if not args.amax > 0 else "bmax")
    grid = halfline_region_plot(args.alpha, args.beta, lo, hi, uniform_axis(args.amax, na), uniform_axis(args.bmax, nb))
    ncomp = grid.components()
    if fmt == "csv":
        buf = io.StringIO()
        write_region_csv(grid, buf)
        _emit(buf.getvalue(), args)
        print(f"gcone: {ncomp} elliptic component(s)", file=sys.stderr)
    elif fmt == "structured":
        _emit(_structured({"alpha": args.alpha, "beta": args.beta, "gamma": [lo, hi],
                           "abs_a": grid.abs_a.tolist(), "abs_b": grid.abs_b.tolist(),
                           "elliptic": grid.elliptic.astype(int).tolist(), "components": ncomp}), args)
    else:
        frac = float(grid.elliptic.mean())
        _emit(f"grid {na}x{nb} over |a| <= {_fmt(args.amax)}, |b| <= {_fmt(args.bmax)}\n"
              f"elliptic fraction: {frac:.4f}\nelliptic components: {ncomp}\n", args)
    return EXIT_OK


def cmd_mellin_selftest(args, fmt) -> int:
    res = selftest()
    ok = (res["max_plancherel"] < PLANCHEREL_TOL and res["max_shift"] < LAW_TOL
          and res["max_derivative"] < LAW_TOL and res["min_derivative_order"] > MIN_ORDER)
    summary = {"max_plancherel": res["max_plancherel"], "max_shift": res["max_shift"],
               "max_derivative": res["max_derivative"], "min_derivative_order": res["min_derivative_order"]}
    if fmt == "structured":
        _emit(_structured({**res, "passed": ok}), args)
    elif fmt == "csv":
        _emit(_csv_text(["quantity", "value"], sorted(summary.items())), args)
    else:
        lines = [f"{k}: {v:.3e}" for k, v in summary.items()]
        lines += [f"skipped: {s} (outside the convergence strip)" for s in res["skipped"]]
        lines.append("PASS" if ok else "FAIL")
        _emit("\n".join(lines) + "\n", args)
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_symbol_dump(args, fmt) -> int:
    op, _ = _operator(args)
    ctx = InteriorPoint() if args.point == "interior" else BoundaryPoint(args.point, args.tau, args.eta)
    win = interior_symbol_matrix(op, ctx, (args.eta, args.tau), args.window, args.s)
    if fmt == "csv":
        buf = io.StringIO()
        write_matrix_csv(win, buf)
        _emit(buf.getvalue(), args)
    elif fmt == "structured":
        rows, cols = np.nonzero(win.matrix)
        _emit(_structured({"window": win.radius, "bandwidth": win.bandwidth, "sigma_min": win.sigma_min(),
                           "indices": win.indices.tolist(), "weights": win.weights.tolist(),
                           "entries": [[int(i), int(j), complex(win.matrix[i, j])] for i, j in zip(rows, cols)]}),
              args)
    else:
        _emit(f"window radius {win.radius}, size {win.matrix.shape[0]}x{win.matrix.shape[1]}, "
              f"bandwidth {win.bandwidth}\nsigma_min: {win.sigma_min():.6g}\n", args)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check, "singular-weights": cmd_singular_weights, "sweep": cmd_sweep,
    "region": cmd_region, "mellin-selftest": cmd_mellin_selftest, "symbol-dump": cmd_symbol_dump,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        fmt = args.format or DEFAULT_FORMAT.get(args.command, "text")
        return COMMANDS[args.command](args, fmt)
    except InputError as exc:
        print(f"gcone: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"gcone: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GConeError as exc:
        print(f"gcone: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"gcone: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
