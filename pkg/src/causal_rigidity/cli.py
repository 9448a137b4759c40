"""Command line front end.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 numerical failure.  Every command is deterministic given its flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import causal_chart as cc
from . import moebius as mb
from . import properties
from . import rigidity as rg
from .errors import CausalGeometryError, InvalidInput, NotConal, NotInChartDomain, NumericalFailure

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ documents


def dumps(doc) -> str:
    # json writes floats with repr, the shortest string that round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(doc, out=None) -> None:
    text = dumps(doc)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def map_document(matrix, dim: int, generator_log=(), seed=None, **extra) -> dict:
    doc = {
        "dim": int(dim),
        "matrix": np.asarray(matrix, dtype=float).tolist(),
        "generator_log": list(generator_log),
        "seed": seed,
    }
    doc.update(extra)
    return doc


def load_map(doc, strict: bool = True) -> tuple[int, np.ndarray]:
    """Validate a map document; returns ``(dim, matrix)``.

    ``strict=False`` skips the Lorentz-form check, for candidate matrices
    whose failure should surface as a verification failure instead.
    """
    if not isinstance(doc, dict):
        raise UsageError("map document must be a JSON object")
    try:
        dim = doc["dim"]
        rows = doc["matrix"]
    except KeyError as exc:
        raise UsageError(f"map document lacks field {exc.args[0]!r}") from exc
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise UsageError(f"dim must be an integer >= 2, got {dim!r}")
    try:
        m = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError("matrix must be a rectangular array of numbers") from exc
    if m.shape != (dim + 1, dim + 1):
        raise UsageError(f"matrix must be {dim + 1}x{dim + 1}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise UsageError("matrix has non-finite entries")
    return dim, mb.check_causal_matrix(m) if strict else m


def _parse_point(entry, k: int):
    if isinstance(entry, str):
        if entry == "inf":
            return mb.INF
        raise UsageError(f"unknown point literal {entry!r}")
    try:
        p = np.array(entry, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad point {entry!r}") from exc
    if p.shape != (k,):
        raise UsageError(f"boundary points need {k} coordinates, got {entry!r}")
    return p


def load_correspondences(doc) -> tuple[int, list]:
    if not isinstance(doc, dict) or "dim" not in doc or "pairs" not in doc:
        raise UsageError('correspondences need "dim" and "pairs"')
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 2:
        raise UsageError(f"dim must be an integer >= 2, got {dim!r}")
    pairs = []
    for item in doc["pairs"]:
        try:
            pairs.append((_parse_point(item["source"], dim - 1), _parse_point(item["target"], dim - 1)))
        except (KeyError, TypeError) as exc:
            raise UsageError('each pair needs "source" and "target"') from exc
    return dim, pairs


# ------------------------------------------------------------------- commands


def _pipeline_params(args) -> dict:
    return {
        "samples": args.samples,
        "verify_samples": args.verify_samples,
        "tol": args.tol,
        "tol_fit": args.tol_fit,
        "tol_verify": args.tol_verify,
        "max_iter": args.max_iter,
        "seed": args.seed,
    }


def _report_document(report: rg.RecoveryReport, params: dict, command: str) -> dict:
    doc = report.to_dict()
    doc["params"] = params
    doc["command"] = command
    doc["version"] = __version__
    return doc


def cmd_gen_conal(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be at least 2")
    if args.word_length < 0:
        raise UsageError("--word-length must be nonnegative")
    m, word = rg.random_group_element(args.dim, args.seed, args.word_length)
    doc = map_document(m, args.dim, [rg.generator_to_dict(g) for g in word], args.seed)
    emit(doc, args.output)
    return EXIT_OK


def cmd_recover(args) -> int:
    dim, truth = load_map(read_json(args.map))
    f = rg.oracle_from_matrix(truth)
    report, rec = rg.run_pipeline(
        f,
        m=args.samples,
        tol=args.tol,
        tol_fit=args.tol_fit,
        tol_verify=args.tol_verify,
        samples=args.verify_samples,
        seed=args.seed,
        max_iter=args.max_iter,
    )
    params = _pipeline_params(args)
    if args.output:
        emit(map_document(report.recovered, dim, seed=args.seed, fit_residual=rec.fit_residual), args.output)
    emit(_report_document(report, params, "recover"), args.report)
    return EXIT_OK if report.verified else EXIT_FAILED


def cmd_verify(args) -> int:
    dim, truth = load_map(read_json(args.map))
    dim2, candidate = load_map(read_json(args.candidate), strict=False)
    if dim != dim2:
        raise UsageError(f"oracle has dim {dim}, candidate has dim {dim2}")
    f = rg.oracle_from_matrix(truth)
    report = rg.verify_extension(f, candidate, args.verify_samples, args.tol_verify, args.seed)
    emit(_report_document(report, _pipeline_params(args), "verify"), args.report)
    return EXIT_OK if report.verified else EXIT_FAILED


def cmd_fit_mobius(args) -> int:
    dim, pairs = load_correspondences(read_json(args.correspondences))
    fit = mb.fit_moebius(pairs, tol=args.tol_fit)
    emit(map_document(fit.matrix, dim, fit_residual=fit.residual), args.output)
    return EXIT_OK


def cmd_convert(args) -> int:
    if args.direction == "to-hyperboloid":
        out = cc.chart_to_hyperboloid(args.point)
    else:
        out = cc.hyperboloid_to_chart(cc.as_hyperboloid_point(args.point))
        if out[0] <= 0:
            raise NotInChartDomain("point lies outside the chart component")
    emit({"direction": args.direction, "point": out.tolist()}, args.output)
    return EXIT_OK


def cmd_order_check(args) -> int:
    result = cc.future_contains(args.z, args.x)
    emit({"z": args.z, "x": args.x, "future_contains": result}, args.output)
    return EXIT_OK


def cmd_future_ball(args) -> int:
    b = cc.future_boundary_ball(args.z)
    emit({"z": args.z, "center": b.center.tolist(), "radius": b.radius}, args.output)
    return EXIT_OK


def cmd_property_suite(args) -> int:
    if args.trials <= 0:
        raise UsageError("--trials must be positive")
    if args.dim < 2:
        raise UsageError("--dim must be at least 2")
    report = properties.run_suite(args.dim, args.trials, args.seed, perturb=args.inject_perturbation)
    report["version"] = __version__
    emit(report, args.report)
    return EXIT_OK if report["passed"] else EXIT_FAILED


# --------------------------------------------------------------------- parser


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=None, help="boundary samples per ball (default 3(n+2))")
    p.add_argument("--verify-samples", type=int, default=100, help="interior verification points")
    p.add_argument("--tol", type=float, default=rg.LIMIT_TOL, help="boundary-limit tolerance")
    p.add_argument("--tol-fit", type=float, default=rg.FIT_TOL, help="Moebius fit tolerance")
    p.add_argument("--tol-verify", type=float, default=rg.VERIFY_TOL, help="verification tolerance")
    p.add_argument("--max-iter", type=int, default=rg.MAX_ITER, help="max steps per boundary limit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="report file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causal-rigidity",
        description="Causal geometry of the one-sheeted hyperboloid and recovery of conal maps",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-conal", help="write a seeded random group element as a map document")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--word-length", type=int, default=5)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_gen_conal)

    p = sub.add_parser("recover", help="recover, extend and verify the map of a map document")
    p.add_argument("--map", required=True)
    p.add_argument("-o", "--output", default=None, help="recovered map document")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("verify", help="check a candidate matrix against the oracle of a map document")
    p.add_argument("--map", required=True, help="map document defining the oracle")
    p.add_argument("--candidate", required=True, help="map document holding the candidate matrix")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit-mobius", help="fit a Moebius matrix to boundary correspondences")
    p.add_argument("--correspondences", required=True)
    p.add_argument("--tol-fit", type=float, default=mb.FIT_TOL)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_fit_mobius)

    p = sub.add_parser("convert", help="convert between chart and hyperboloid coordinates")
    p.add_argument("--direction", choices=("to-hyperboloid", "to-chart"), required=True)
    p.add_argument("point", type=float, nargs="+")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("order-check", help="is x in the future of z?")
    p.add_argument("--z", type=float, nargs="+", required=True)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_order_check)

    p = sub.add_parser("future-ball", help="boundary ball of the future of z")
    p.add_argument("z", type=float, nargs="+")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_future_ball)

    p = sub.add_parser("property-suite", help="run the randomized invariant checks")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--inject-perturbation",
        type=float,
        default=0.0,
        help="add this to one entry of every recovered matrix (negative control)",
    )
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_property_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NotConal as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except CausalGeometryError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
