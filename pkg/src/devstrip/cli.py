"""Command-line front end.

Exit codes: 0 converged, 1 malformed input, 2 optimizer stopped without
converging (iteration cap or line-search failure), 3 conversion hit a flat
piece of the mapping.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import formats
from .conversion import convert
from .energy import warp_profile
from .estimator import DevelopableStrip
from .exceptions import (ConversionError, DevstripError, InputError,
                         OptimizationError)
from .formats import dumps
from .preprocess import fit_polyline
from .surface import Mesh, RuledStrip
from .validation import check_curve, check_mapping, check_points

log = logging.getLogger("devstrip")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_FLAT = 0, 1, 2, 3
DENSE_RULINGS = 1000
GRID = 101


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError("arguments", message)


def _point(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(vals)


def _job_arguments(p, with_mode=True):
    p.add_argument("--curves", required=True, help="JSON file with curves c1 and c2")
    p.add_argument("--map-degree", type=int, default=2)
    p.add_argument("--coeffs", type=int, default=50, help="mapping coefficients")
    p.add_argument("--samples", type=int, default=100, help="sample rulings")
    p.add_argument("--lambda1", type=float, default=100.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    p.add_argument("--endpoint-weight", type=float, default=0.0)
    p.add_argument("--extend", nargs=3, action="append", default=[],
                   metavar=("CURVE", "END", "X,Y,Z"),
                   help="extend c1|c2 at start|end through a point")
    if with_mode:
        p.add_argument("--mode", choices=("continuous", "discrete"), default="continuous")
    p.add_argument("--interpolation", choices=("cubic", "linear"), default="cubic",
                   help="interpolant of a discrete result")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--seed", type=int, default=0, help="reserved; nothing is random")
    p.add_argument("--out-dir", required=True)


def build_parser():
    parser = _Parser(prog="devstrip", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="optimize the mapping and export the strip")
    _job_arguments(p)
    p.add_argument("--mesh", nargs=2, type=int, default=(11, 201), metavar=("NU", "NV"))

    p = sub.add_parser("convert", help="convert an optimize result to a B-spline surface")
    p.add_argument("--result", required=True)
    p.add_argument("--knot-mode", choices=("uniform", "span"), default="uniform")
    p.add_argument("--mesh", nargs=2, type=int, metavar=("NU", "NV"),
                   help="also write a tessellation of the surface")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("compare", help="compare discrete and continuous mappings")
    _job_arguments(p, with_mode=False)
    p.add_argument("--discrete-samples", type=int, default=50,
                   help="sample rulings of the discrete run")

    p = sub.add_parser("fit", help="fit B-spline curves to polylines")
    p.add_argument("--polylines", required=True,
                   help="JSON array of points, or {c1: [...], c2: [...]}")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--n-ctrl", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _extensions(raw):
    out = []
    for i, (curve, end, point) in enumerate(raw):
        try:
            out.append((curve, end, _point(point)))
        except argparse.ArgumentTypeError as exc:
            raise InputError(f"extend[{i}]", str(exc)) from None
    return out


def _estimator(args, mode, samples=None):
    return DevelopableStrip(
        map_degree=args.map_degree, n_coeffs=args.coeffs,
        n_samples=args.samples if samples is None else samples,
        lambda1=args.lambda1, lambda2=args.lambda2, endpoint_weight=args.endpoint_weight,
        mode=mode, max_iter=args.max_iter, extend=_extensions(args.extend),
        interpolation=args.interpolation)


def _fit(args, mode, samples=None):
    doc = formats.load_json(args.curves, "curves")
    formats.validate_input(doc, formats.CURVES_SCHEMA)
    est = _estimator(args, mode, samples)
    est.fit((check_curve(doc["c1"], "c1"), check_curve(doc["c2"], "c2")))
    return est


def _exit_status(report):
    if report.converged:
        return EXIT_OK
    log.warning("optimizer stopped without converging (%s after %d iterations)",
                report.status, report.iterations)
    return EXIT_NOT_CONVERGED


def _config(args, mode):
    return {"mode": mode, "map_degree": args.map_degree, "coeffs": args.coeffs,
            "samples": args.samples, "lambda1": args.lambda1, "lambda2": args.lambda2,
            "endpoint_weight": args.endpoint_weight, "max_iter": args.max_iter,
            "interpolation": args.interpolation, "seed": args.seed,
            "extend": [[c, e, list(p)] for c, e, p in _extensions(args.extend)]}


def _validated(documents, checks):
    for name, check in checks.items():
        check(documents[name])
    return documents


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_optimize(args):
    mode = args.mode
    nu, nv = args.mesh
    if nu < 2 or nv < 2:
        raise InputError("mesh", "needs NU >= 2 and NV >= 2")
    est = _fit(args, mode)
    strip = est.strip_
    trim = (0.0, 1.0)
    if args.extend:
        trim = est.trim_interval()
        strip = est.trimmed_strip()
        log.info("trimmed to t in [%.6g, %.6g]", *trim)
    prof = strip.warp_profile(args.samples)
    mesh = strip.tessellate(nu, nv)
    t_dense = np.linspace(0.0, 1.0, DENSE_RULINGS + 1)
    col = strip.warp_profile(t=np.linspace(0.0, 1.0, nv), warn=False)
    result = {
        "mode": mode,
        "mapping": strip.sigma.to_dict(),
        "c1": strip.c1.to_dict(),
        "c2": strip.c2.to_dict(),
        "transform": est.transform_.to_dict(),
        "original_intervals": {k: list(v) for k, v in est.original_intervals_.items()},
        "trim_interval": list(trim),
        "status": est.report_.status,
        "converged": est.report_.converged,
        "iterations": est.report_.iterations,
        "beta_max": prof.beta_max,
        "beta_ave": prof.beta_ave,
        "config": _config(args, mode),
    }
    if est.discrete_mapping_ is not None:
        result["discrete"] = {"t": est.discrete_mapping_.t_samples,
                              "alphas": est.discrete_mapping_.alphas}
    docs = {
        "result.json": dumps(result),
        "strip.obj": formats.obj_text(mesh),
        "strip_warp.csv": formats.warp_csv(col),
        "warp.csv": formats.warp_csv(prof),
        "mapping.csv": formats.mapping_csv(t_dense, strip.sigma(t_dense)),
        "report.csv": formats.report_csv(est.report_),
    }
    n_iter = len(est.report_.objective_trace)
    _validated(docs, {
        "result.json": lambda s: formats.validate_output(
            json.loads(s), formats.RESULT_SCHEMA, "result.json"),
        "strip.obj": lambda s: formats.validate_obj(s, nu * nv, (nu - 1) * (nv - 1)),
        "strip_warp.csv": lambda s: formats.validate_csv(s, "warp", nv),
        "warp.csv": lambda s: formats.validate_csv(s, "warp", args.samples),
        "mapping.csv": lambda s: formats.validate_csv(s, "mapping", DENSE_RULINGS + 1),
        "report.csv": lambda s: formats.validate_csv(s, "report", n_iter),
    })
    formats.write_files(args.out_dir, docs)
    log.info("beta_max %.6g deg, beta_ave %.6g deg after %d iterations (%s)",
             prof.beta_max, prof.beta_ave, est.report_.iterations, est.report_.status)
    return _exit_status(est.report_)


def _strip_from_result(doc):
    formats.validate_input(doc, formats.RESULT_SCHEMA, "result")
    return RuledStrip(check_curve(doc["c1"], "result.c1"), check_curve(doc["c2"], "result.c2"),
                      check_mapping(doc["mapping"], "result.mapping"))


def max_deviation(surface, strip, n=GRID):
    """Largest distance between surface and strip on an ``n x n`` grid."""
    g = np.linspace(0.0, 1.0, n)
    S = surface.eval_grid(g, g)
    t_src = surface.source_parameter(g)
    R = strip.eval(g[:, None], t_src[None, :])
    return float(np.max(np.linalg.norm(S - R, axis=-1)))


def cmd_convert(args):
    doc = formats.load_json(args.result, "result")
    strip = _strip_from_result(doc)
    if args.mesh is not None and min(args.mesh) < 2:
        raise InputError("mesh", "needs NU >= 2 and NV >= 2")
    surface = convert(strip, args.knot_mode)
    dev = max_deviation(surface, strip)
    log.info("surface degree 1x%d with %d pieces; max deviation %.3g",
             surface.degree_t, surface.n_pieces, dev)
    if dev > 1e-9:
        log.warning("surface deviates from the strip by %.3g", dev)
    out = {"surface": surface.to_dict(), "pieces": surface.n_pieces,
           "knot_mode": args.knot_mode, "max_deviation": dev}
    docs = {"surface.json": dumps(out)}
    checks = {"surface.json": lambda s: formats.validate_output(
        json.loads(s), formats.SURFACE_SCHEMA, "surface.json")}
    if args.mesh is not None:
        nu, nv = args.mesh
        docs["surface.obj"] = formats.obj_text(_surface_mesh(surface, nu, nv), "surface")
        checks["surface.obj"] = lambda s: formats.validate_obj(s, nu * nv, (nu - 1) * (nv - 1))
    _validated(docs, checks)
    formats.write_files(args.out_dir, docs)
    return EXIT_OK


def _surface_mesh(surface, nu, nv):
    s, t = np.linspace(0.0, 1.0, nu), np.linspace(0.0, 1.0, nv)
    V = surface.eval_grid(s, t).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(nu - 1), np.arange(nv - 1), indexing="ij")
    a = (i * nv + j).ravel()
    quads = np.stack([a, a + nv, a + nv + 1, a + 1], axis=1)
    return Mesh(V, quads, np.full(nu * nv, np.nan), nu, nv)


def cmd_compare(args):
    rows, status = [], EXIT_OK
    for mode, samples in (("continuous", args.samples), ("discrete", args.discrete_samples)):
        est = _fit(args, mode, samples)
        sample = est.warp_profile(warn=False)
        dense = warp_profile(est.strip_, DENSE_RULINGS, warn=False)
        rows.append((mode, samples, sample.beta_max, sample.beta_ave,
                     dense.beta_max, dense.beta_ave, est.report_.iterations,
                     est.report_.status))
        log.info("%s: samples (%.4g, %.4g) deg, dense (%.4g, %.4g) deg", mode,
                 sample.beta_max, sample.beta_ave, dense.beta_max, dense.beta_ave)
        status = max(status, _exit_status(est.report_))
    docs = {"compare.csv": formats.csv_text("compare", rows)}
    _validated(docs, {"compare.csv": lambda s: formats.validate_csv(s, "compare", 2)})
    formats.write_files(args.out_dir, docs)
    return status


def cmd_fit(args):
    doc = formats.load_json(args.polylines, "polylines")
    formats.validate_input(doc, formats.POLYLINES_SCHEMA, "polylines")

    def one(points, field):
        P = check_points(points, field, min_count=2)
        try:
            fit = fit_polyline(P, args.degree, args.n_ctrl)
        except InputError:
            raise
        except DevstripError as exc:
            raise InputError(field, str(exc)) from None
        log.info("%s: %d control points, max residual %.3g",
                 field, fit.curve.knots.n_basis, fit.max_residual)
        return fit.curve.to_dict()

    if isinstance(doc, dict):
        out, name = {"c1": one(doc["c1"], "polylines.c1"),
                     "c2": one(doc["c2"], "polylines.c2")}, "curves.json"
        schema = formats.CURVES_SCHEMA
    else:
        out, name, schema = one(doc, "polylines"), "curve.json", formats.CURVE_SCHEMA
    docs = {name: dumps(out)}
    _validated(docs, {name: lambda s: formats.validate_output(
        json.loads(s), schema, name)})
    formats.write_files(args.out_dir, docs)
    return EXIT_OK


COMMANDS = {"optimize": cmd_optimize, "convert": cmd_convert,
            "compare": cmd_compare, "fit": cmd_fit}


def _log_warning(message, category, *args, **kwargs):
    log.warning("%s", message)


def _thread_limit():
    raw = os.environ.get("DEVSTRIP_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise InputError("DEVSTRIP_THREADS", f"must be a positive integer, got {raw!r}")
    return n


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="devstrip: %(message)s",
                        stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.DEBUG)
        limit = _thread_limit()
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            warnings.showwarning = _log_warning
            if limit is None:
                return COMMANDS[args.command](args)
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=limit):
                return COMMANDS[args.command](args)
    except ConversionError as exc:
        lo, hi = exc.interval or (float("nan"), float("nan"))
        log.error("conversion failed on piece [%.17g, %.17g]: %s", lo, hi, exc)
        return EXIT_FLAT
    except OptimizationError as exc:
        log.error("optimization aborted: %s", exc)
        return EXIT_NOT_CONVERGED
    except InputError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INPUT
    except (DevstripError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
