"""Command-line front end: solve, sweep, verify, dynamics.

Exit statuses are part of the contract: 0 success, 1 usage or parse
error, 2 solver-reported non-existence, collapse, or non-convergence,
3 verification failure. Dynamics outcomes are data, so that command
exits 0 whenever the configuration was valid.

All floating-point output carries 17 significant digits, enough to
reconstruct the exact double. Infinite values are serialized as the
strings "inf"/"-inf" so documents stay inside strict JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Any

import numpy as np

from . import __version__
from .equilibrium import (
    Partition,
    certify,
    decoder_best_response,
    decoder_cost,
    monte_carlo_cost,
)
from .errors import (
    BinCollapseError,
    DomainError,
    EdgeOrderingError,
    NoInformativeEquilibriumError,
    NonConvergenceError,
)
from .exponential import (
    decoder_cost_infinite,
    empirical_max_bins,
    fixed_point_length,
    infinite_equilibrium,
    solve_n_bins,
)
from .dynamics import fixed_point_iterate, lloyd_method_i
from .gaussian import solve_n_bins_gauss, solve_truncated_ladder, solve_two_bin_gauss
from .sources import EXPONENTIAL, GAUSSIAN, SourceModel

__all__ = ["entry"]


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    """17-significant-digit decimal; lossless for doubles."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _render_json(obj: Any, ind: int = 0) -> str:
    pad = "  " * ind
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f'{pad}  {json.dumps(str(k))}: {_render_json(v, ind + 1)}'
                for k, v in obj.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = [f"{pad}  {_render_json(v, ind + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return _fmt(x)
        return json.dumps(_fmt(x))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _cell(v: Any) -> str:
    """Flatten one value into a CSV cell; sequences join with ';'."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt(float(v))
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def _rows_to_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in header])
    return buf.getvalue().rstrip("\n")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        print(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _parse_number(v: Any) -> float:
    """Accept JSON numbers plus the string forms 'inf'/'-inf'/'nan'."""
    if isinstance(v, str):
        token = v.strip().lower()
        if token == "inf":
            return math.inf
        if token == "-inf":
            return -math.inf
        if token == "nan":
            return math.nan
        raise ValueError(f"not a serialized number: {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"not a serialized number: {v!r}")
    return float(v)


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage failures follow the exit contract (1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", required=True, choices=("exp", "gauss"),
                   help="source family: exponential or Gaussian")
    p.add_argument("--rate", type=float,
                   help="exponential rate parameter (required with --source exp)")
    p.add_argument("--mean", type=float, default=0.0,
                   help="Gaussian mean (default 0)")
    p.add_argument("--std", type=float, default=1.0,
                   help="Gaussian standard deviation (default 1)")


def _make_source(args: argparse.Namespace, parser: argparse.ArgumentParser) -> SourceModel:
    try:
        if args.source == "exp":
            if args.rate is None:
                parser.error("--rate is required with --source exp")
            return SourceModel.exponential(args.rate)
        return SourceModel.gaussian(args.mean, args.std)
    except DomainError as err:
        parser.error(str(err))
        raise AssertionError("unreachable")


def _meta(started: float, note: str | None = None) -> dict:
    meta = {
        "tool_version": __version__,
        "runtime_ms": round((time.perf_counter() - started) * 1000.0, 3),
    }
    if note is not None:
        meta["note"] = note
    return meta


# ---------------------------------------------------------------------------
# solve


def _certificate_doc(cert) -> dict:
    doc = {
        "residuals": list(cert.residuals),
        "max_abs_residual": cert.max_abs_residual,
        "tolerance": cert.tolerance,
        "verdict": cert.verdict,
    }
    if cert.excluded_edges:
        doc["excluded_edges"] = list(cert.excluded_edges)
    return doc


def _solve_document(source: SourceModel, bias: float, solver: str,
                    partition: Partition, cert, started: float,
                    note: str | None) -> dict:
    actions = decoder_best_response(partition)
    costs = decoder_cost(partition)
    return {
        "source": source.describe(),
        "bias": bias,
        "solver": solver,
        "equilibrium": {
            "edges": list(partition.edges),
            "centroids": list(actions.centroids),
            "lengths": list(partition.lengths),
            "certificate": _certificate_doc(cert),
        },
        "costs": {"decoder": costs.decoder_cost, "encoder": costs.encoder_cost},
        "meta": _meta(started, note),
    }


def _document_csv(doc: dict) -> str:
    src = doc["source"]
    eq = doc["equilibrium"]
    cert = eq["certificate"]
    row = {
        "kind": src["kind"],
        "rate": src.get("rate"),
        "mean": src.get("mean"),
        "std": src.get("std"),
        "bias": doc["bias"],
        "solver": doc["solver"],
        "edges": eq["edges"],
        "centroids": eq["centroids"],
        "lengths": eq["lengths"],
        "residuals": cert["residuals"],
        "max_abs_residual": cert["max_abs_residual"],
        "tolerance": cert["tolerance"],
        "verdict": cert["verdict"],
        "excluded_edges": cert.get("excluded_edges", ()),
        "decoder_cost": doc["costs"]["decoder"],
        "encoder_cost": doc["costs"]["encoder"],
    }
    return _rows_to_csv(list(row), [row])


def _cmd_solve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    source = _make_source(args, parser)
    bias = args.bias
    if args.bins is not None and args.bins < 1:
        parser.error("--bins must be at least 1")
    note = None
    converged = True
    try:
        if args.source == "exp":
            if args.ladder:
                n_edges = args.edges if args.edges is not None else 64
                partition = infinite_equilibrium(source.rate, bias, n_edges)
                cert = certify(partition, tol=args.cert_tol,
                               excluded_edges=(n_edges,))
                solver = "exp-equal-ladder"
                note = ("equal-length window of the infinite-bin equilibrium; "
                        f"its decoder cost is "
                        f"{_fmt(decoder_cost_infinite(source.rate, bias))}")
            else:
                partition = solve_n_bins(source.rate, bias, args.bins)
                cert = certify(partition, tol=args.cert_tol)
                solver = "exp-n-bins"
        else:
            if args.ladder:
                n_edges = args.edges if args.edges is not None else 40
                result = solve_truncated_ladder(
                    source, bias, n_edges=n_edges, margin=args.margin,
                    damping=args.damping, max_iter=args.max_iter,
                    tol=args.tol, cert_tol=args.cert_tol)
                partition, cert = result.partition, result.certificate
                converged = result.converged
                solver = "gauss-ladder"
                note = (f"truncated ladder, {result.iterations} iterations, "
                        f"last edge movement {_fmt(result.final_change)}"
                        + ("" if result.converged else "; did not converge"))
            elif args.bins == 2:
                partition = solve_two_bin_gauss(source.mean, source.std, bias)
                cert = certify(partition, tol=args.cert_tol)
                solver = "gauss-two-bin"
            else:
                partition = solve_n_bins_gauss(
                    source.mean, source.std, bias, args.bins,
                    damping=args.damping, max_iter=args.max_iter, tol=args.tol)
                cert = certify(partition, tol=args.cert_tol)
                solver = "gauss-fixed-point"
            if bias == 0.0 and not args.ladder:
                note = ("bias 0 is the classical minimum-distortion quantizer, "
                        "included as a reference point")
    except NoInformativeEquilibriumError as err:
        sys.stderr.write(f"no informative equilibrium: {err}\n")
        return 2
    except BinCollapseError as err:
        sys.stderr.write(f"bin collapse: {err}\n")
        return 2
    except (NonConvergenceError, EdgeOrderingError) as err:
        sys.stderr.write(f"iteration failed: {err}\n")
        return 2
    except DomainError as err:
        parser.error(str(err))

    doc = _solve_document(source, bias, solver, partition, cert, started, note)
    text = _render_json(doc) if args.format == "json" else _document_csv(doc)
    _emit(text, args.out)
    if not cert.verdict:
        sys.stderr.write(
            f"certificate failed: max |residual| {_fmt(cert.max_abs_residual)} "
            f"exceeds {_fmt(cert.tolerance)}\n")
        return 2
    if not converged:
        sys.stderr.write("ladder iteration hit max-iter before tol\n")
        return 2
    return 0


# ---------------------------------------------------------------------------
# sweep


_STATUS = (
    (NoInformativeEquilibriumError, "no-informative-equilibrium"),
    (BinCollapseError, "collapse"),
    (NonConvergenceError, "non-convergence"),
    (EdgeOrderingError, "edge-ordering"),
    (DomainError, "invalid"),
)


def _classify(err: Exception) -> str:
    for kind, label in _STATUS:
        if isinstance(err, kind):
            return label
    raise err


def _sweep_row(source: SourceModel, bias: float, n_bins: int,
               cert_tol: float, args: argparse.Namespace) -> dict:
    row: dict[str, Any] = {"bias": bias, "bins": n_bins, "status": "ok"}
    if source.kind == EXPONENTIAL:
        if bias < 0.0:
            row["max_bins"] = empirical_max_bins(source.rate, bias)
        else:
            row["max_bins"] = math.inf
        if bias > 0.0:
            row["fixed_point_length"] = fixed_point_length(source.rate, bias)
            row["decoder_cost_infinite"] = decoder_cost_infinite(source.rate, bias)
    try:
        if source.kind == EXPONENTIAL:
            partition = solve_n_bins(source.rate, bias, n_bins)
        elif n_bins == 2:
            partition = solve_two_bin_gauss(source.mean, source.std, bias)
        else:
            partition = solve_n_bins_gauss(
                source.mean, source.std, bias, n_bins,
                damping=args.damping, max_iter=args.max_iter, tol=args.tol)
    except Exception as err:  # status column carries the failure
        row["status"] = _classify(err)
        return row
    cert = certify(partition, tol=cert_tol)
    costs = decoder_cost(partition)
    actions = decoder_best_response(partition)
    row.update({
        "edges": partition.edges,
        "centroids": actions.centroids,
        "lengths": partition.lengths,
        "residuals": cert.residuals,
        "max_abs_residual": cert.max_abs_residual,
        "verdict": cert.verdict,
        "decoder_cost": costs.decoder_cost,
        "encoder_cost": costs.encoder_cost,
    })
    return row


def _cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    source = _make_source(args, parser)
    if args.vary == "bias":
        if args.steps is None:
            parser.error("--steps is required when varying bias")
        if args.steps < 1:
            parser.error("--steps must be at least 1")
        biases = [float(v) for v in np.linspace(args.lo, args.hi, args.steps)]
        n_fixed = args.bins if args.bins is not None else 2
        if n_fixed < 1:
            parser.error("--bins must be at least 1")
        grid = [(b, n_fixed) for b in biases]
    else:
        if args.bias is None:
            parser.error("--bias is required when varying bins")
        for v in (args.lo, args.hi):
            if not float(v).is_integer():
                parser.error("--from/--to must be integers when varying bins")
        lo, hi = int(args.lo), int(args.hi)
        if hi < lo:
            parser.error("empty grid: --to is below --from")
        counts = list(range(lo, hi + 1))
        if args.steps is not None and args.steps != len(counts):
            parser.error(
                f"--steps {args.steps} disagrees with the {len(counts)} "
                "integer bin counts in [--from, --to]")
        if any(c < 1 for c in counts):
            parser.error("bin counts must be at least 1")
        grid = [(args.bias, c) for c in counts]
    if not grid:
        parser.error("empty sweep grid")

    rows = [
        {"index": i, **_sweep_row(source, b, n, args.cert_tol, args)}
        for i, (b, n) in enumerate(grid)
    ]
    header = ["index", "bias", "bins", "status"]
    if source.kind == EXPONENTIAL:
        header.append("max_bins")
        if any("fixed_point_length" in r for r in rows):
            header += ["fixed_point_length", "decoder_cost_infinite"]
    header += ["edges", "centroids", "lengths", "residuals",
               "max_abs_residual", "verdict", "decoder_cost", "encoder_cost"]

    if args.format == "csv":
        text = _rows_to_csv(header, rows)
    else:
        doc = {
            "source": source.describe(),
            "vary": args.vary,
            "rows": [{k: r.get(k) for k in header} for r in rows],
            "meta": _meta(started),
        }
        text = _render_json(doc)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# verify


def _load_partition(doc: dict) -> tuple[SourceModel, Partition, dict]:
    src = doc["source"]
    kind = src["kind"]
    if kind == EXPONENTIAL:
        source = SourceModel.exponential(_parse_number(src["rate"]))
    elif kind == GAUSSIAN:
        source = SourceModel.gaussian(
            _parse_number(src["mean"]), _parse_number(src["std"]))
    else:
        raise ValueError(f"unknown source kind {kind!r}")
    bias = _parse_number(doc["bias"])
    eq = doc["equilibrium"]
    edges = tuple(_parse_number(v) for v in eq["edges"])
    return source, Partition(edges, source, bias), eq["certificate"]


def _cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    if args.mc_samples < 2:
        parser.error("--mc-samples must be at least 2")
    try:
        with open(args.document, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        source, partition, cert_doc = _load_partition(doc)
        stored_tol = _parse_number(cert_doc["tolerance"])
        stored_verdict = bool(cert_doc["verdict"])
        excluded = tuple(int(i) for i in cert_doc.get("excluded_edges", ()))
        stored_decoder = _parse_number(doc["costs"]["decoder"])
        stored_encoder = _parse_number(doc["costs"]["encoder"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError,
            DomainError) as err:
        sys.stderr.write(f"cannot parse result document: {err}\n")
        return 1

    failures: list[str] = []
    cert = certify(partition, tol=stored_tol, excluded_edges=excluded)
    if not stored_verdict:
        failures.append("stored certificate already reports failure")
    if not cert.verdict:
        failures.append(
            f"recomputed max |residual| {_fmt(cert.max_abs_residual)} exceeds "
            f"tolerance {_fmt(stored_tol)}")

    costs = decoder_cost(partition)
    for label, stored, fresh in (("decoder", stored_decoder, costs.decoder_cost),
                                 ("encoder", stored_encoder, costs.encoder_cost)):
        if abs(fresh - stored) > 1e-12 * max(1.0, abs(stored)):
            failures.append(
                f"stored {label} cost {_fmt(stored)} does not match "
                f"recomputed {_fmt(fresh)}")

    estimate, se = monte_carlo_cost(partition, args.mc_samples, args.seed)
    gap = abs(estimate - costs.decoder_cost)
    if gap > 4.0 * se:
        failures.append(
            f"Monte Carlo decoder cost {_fmt(estimate)} is {_fmt(gap / se)} "
            "standard errors from the closed form (limit 4)")

    report = {
        "document": args.document,
        "verified": not failures,
        "certificate": _certificate_doc(cert),
        "costs": {"decoder": costs.decoder_cost, "encoder": costs.encoder_cost},
        "monte_carlo": {
            "samples": args.mc_samples,
            "seed": args.seed,
            "estimate": estimate,
            "standard_error": se,
        },
        "failures": failures,
        "meta": _meta(started),
    }
    _emit(_render_json(report), args.out)
    if failures:
        for f in failures:
            sys.stderr.write(f"verification failure: {f}\n")
        return 3
    return 0


# ---------------------------------------------------------------------------
# dynamics


def _dynamics_init(source: SourceModel, args: argparse.Namespace,
                   parser: argparse.ArgumentParser) -> Partition:
    lo, hi = source.support
    if args.init is not None:
        try:
            interior = tuple(float(tok) for tok in args.init.split(","))
        except ValueError:
            parser.error(f"--init must be comma-separated numbers, got {args.init!r}")
        if len(interior) != args.bins - 1:
            parser.error(
                f"--init needs {args.bins - 1} interior edges for "
                f"--bins {args.bins}, got {len(interior)}")
        try:
            return Partition((lo, *interior, hi), source, args.bias)
        except DomainError as err:
            parser.error(str(err))
    rng = np.random.default_rng(args.seed)
    box = (source.quantile(0.001), source.quantile(0.999))
    while True:
        draws = np.sort(rng.uniform(box[0], box[1], size=args.bins - 1))
        if draws.size < 2 or np.all(np.diff(draws) > 0.0):
            break
    return Partition((lo, *draws, hi), source, args.bias)


def _cmd_dynamics(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    started = time.perf_counter()
    source = _make_source(args, parser)
    if args.bins < 2:
        parser.error("--bins must be at least 2 for dynamics runs")
    if (args.init is None) == (args.seed is None):
        parser.error("provide exactly one of --init or --seed")
    init = _dynamics_init(source, args, parser)
    if args.method == "lloyd":
        trace = lloyd_method_i(source, args.bias, init, args.max_iter, args.tol)
    else:
        trace = fixed_point_iterate(source, args.bias, init, args.damping,
                                    args.max_iter, args.tol)

    outcome = {
        "status": trace.outcome.status,
        "iteration": trace.outcome.iteration,
        "bin_index": trace.outcome.bin_index,
    }
    doc: dict[str, Any] = {
        "source": source.describe(),
        "bias": args.bias,
        "bins": args.bins,
        "method": args.method,
        "init_edges": list(init.edges),
        "outcome": outcome,
        "iterations": trace.iterations,
        "recorded_steps": list(trace.recorded_steps),
        "residual_history": list(trace.residual_history),
    }
    if trace.outcome.status == "converged":
        final = trace.final_partition
        cert = certify(final, tol=args.tol * 10.0)
        doc["final"] = {
            "edges": list(final.edges),
            "centroids": list(decoder_best_response(final).centroids),
            "certificate": _certificate_doc(cert),
        }
    doc["meta"] = _meta(started)

    if args.format == "csv":
        rows = [
            {"step": s, "residual": r, "edges": p.edges}
            for s, r, p in zip(trace.recorded_steps, trace.residual_history,
                               trace.iterates)
        ]
        for row in rows:
            row["status"] = trace.outcome.status
        text = _rows_to_csv(["step", "residual", "edges", "status"], rows)
    else:
        text = _render_json(doc)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# wiring


def _build_parser() -> _Parser:
    top = _Parser(
        prog="cheaptalk",
        description=("Compute, sweep, verify, and iterate quantized "
                     "cheap-talk equilibria."))
    top.add_argument("--version", action="version",
                     version=f"%(prog)s {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="compute one equilibrium")
    _add_source_args(solve)
    solve.add_argument("--bias", type=float, required=True)
    what = solve.add_mutually_exclusive_group(required=True)
    what.add_argument("--bins", type=int, help="number of quantization bins")
    what.add_argument("--ladder", action="store_true",
                      help="equal-length (exp) or truncated (gauss) "
                           "infinite-bin ladder")
    solve.add_argument("--edges", type=int,
                       help="ladder edge count (default: 64 exp, 40 gauss)")
    solve.add_argument("--margin", type=int, default=5,
                       help="gauss ladder: edges excluded near the cut")
    solve.add_argument("--damping", type=float, default=0.5)
    solve.add_argument("--max-iter", type=int, default=100_000)
    solve.add_argument("--tol", type=float, default=1e-10,
                       help="iteration stopping tolerance (gauss)")
    solve.add_argument("--cert-tol", type=float, default=1e-8)
    solve.add_argument("--format", choices=("json", "csv"), default="json")
    solve.add_argument("--out", help="output path (default: stdout)")

    sweep = sub.add_parser("sweep", help="solve across a parameter grid")
    _add_source_args(sweep)
    sweep.add_argument("--vary", choices=("bias", "bins"), required=True)
    sweep.add_argument("--from", dest="lo", type=float, required=True)
    sweep.add_argument("--to", dest="hi", type=float, required=True)
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--bias", type=float,
                       help="fixed bias when varying bins")
    sweep.add_argument("--bins", type=int,
                       help="fixed bin count when varying bias (default 2)")
    sweep.add_argument("--damping", type=float, default=0.5)
    sweep.add_argument("--max-iter", type=int, default=100_000)
    sweep.add_argument("--tol", type=float, default=1e-10)
    sweep.add_argument("--cert-tol", type=float, default=1e-8)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--out")

    verify = sub.add_parser("verify", help="re-check a solve result document")
    verify.add_argument("document", help="path to a solve JSON document")
    verify.add_argument("--seed", type=int, required=True,
                        help="Monte Carlo seed")
    verify.add_argument("--mc-samples", type=int, default=1_000_000)
    verify.add_argument("--out")

    dyn = sub.add_parser("dynamics", help="run best-response dynamics")
    _add_source_args(dyn)
    dyn.add_argument("--bias", type=float, required=True)
    dyn.add_argument("--bins", type=int, required=True)
    dyn.add_argument("--method", choices=("lloyd", "fixed-point"),
                     default="lloyd")
    dyn.add_argument("--damping", type=float, default=0.5)
    dyn.add_argument("--max-iter", type=int, default=10_000)
    dyn.add_argument("--tol", type=float, default=1e-10)
    dyn.add_argument("--init",
                     help="comma-separated interior edges (deterministic start)")
    dyn.add_argument("--seed", type=int,
                     help="random start: sorted uniforms between the 0.001 "
                          "and 0.999 quantiles")
    dyn.add_argument("--format", choices=("json", "csv"), default="json")
    dyn.add_argument("--out")

    return top


_DISPATCH = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "dynamics": _cmd_dynamics,
}


def entry(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return _DISPATCH[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(entry())
