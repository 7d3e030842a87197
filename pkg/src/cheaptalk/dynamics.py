"""Best-response dynamics for the quantized signaling game.

Two engines over the same state space of partitions with a fixed bin
count: lloyd_method_i alternates exact decoder and encoder best
responses; fixed_point_iterate damps the combined midpoint map on the
interior edges. Whether either converges for biased games is an open
question, so these engines measure behavior rather than assume it:
collapse and running out of iterations are reported as outcomes, never
raised.

A run is declared converged only when both the sup-norm edge movement
and the equilibrium defect (max-abs residual) fall to tol, which makes
"converged implies the final snapshot certifies" true by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import ActionProfile, Partition, decoder_best_response
from .errors import DomainError
from .sources import SourceModel

__all__ = [
    "COLLAPSE_PROB",
    "COLLAPSE_LENGTH",
    "IterationOutcome",
    "IterationTrace",
    "lloyd_method_i",
    "fixed_point_iterate",
    "BasinProbeSummary",
    "basin_probe",
]

# A bin below either floor is dead: centroids divide by its mass.
COLLAPSE_PROB = 1e-14
COLLAPSE_LENGTH = 1e-12

_THIN_AFTER = 1000
_THIN_STRIDE = 10


@dataclass(frozen=True)
class IterationOutcome:
    """Terminal status of a dynamics run.

    status is one of "converged", "collapsed", "max_iter". iteration is
    the step at which the run stopped; bin_index (1-based) is set only
    for collapses, and may be None when the offending bin cannot be
    attributed.
    """

    status: str
    iteration: int
    bin_index: int | None = None

    def __post_init__(self) -> None:
        if self.status not in ("converged", "collapsed", "max_iter"):
            raise DomainError(f"unknown outcome status {self.status!r}")
        if self.bin_index is not None and self.status != "collapsed":
            raise DomainError("bin_index is only meaningful for collapses")


@dataclass(frozen=True)
class IterationTrace:
    """Recorded trajectory of one dynamics run.

    iterates[i] is the partition after recorded_steps[i] iterations
    (step 0 is the initial state) and residual_history[i] is its
    max-abs equilibrium residual. Snapshots are thinned: every step is
    kept through 1000 iterations, every 10th after, the final state
    always.
    """

    iterates: tuple[Partition, ...]
    residual_history: tuple[float, ...]
    recorded_steps: tuple[int, ...]
    outcome: IterationOutcome
    iterations: int

    def __post_init__(self) -> None:
        n = len(self.iterates)
        if len(self.residual_history) != n or len(self.recorded_steps) != n:
            raise DomainError("trace columns must have equal length")
        if n == 0:
            raise DomainError("a trace records at least the initial state")

    @property
    def final_partition(self) -> Partition:
        return self.iterates[-1]

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]


class _Recorder:
    """Thinned (step, partition, residual) log."""

    def __init__(self) -> None:
        self.steps: list[int] = []
        self.partitions: list[Partition] = []
        self.residuals: list[float] = []

    def add(self, step: int, partition: Partition, residual: float,
            force: bool = False) -> None:
        if not (force or step <= _THIN_AFTER or step % _THIN_STRIDE == 0):
            return
        if self.steps and self.steps[-1] == step:
            return
        self.steps.append(step)
        self.partitions.append(partition)
        self.residuals.append(residual)

    def trace(self, outcome: IterationOutcome, iterations: int) -> IterationTrace:
        return IterationTrace(
            iterates=tuple(self.partitions),
            residual_history=tuple(self.residuals),
            recorded_steps=tuple(self.steps),
            outcome=outcome,
            iterations=iterations,
        )


def _max_residual(partition: Partition, actions: ActionProfile) -> float:
    """Max-abs equilibrium defect of a partition given decoder actions."""
    edges = partition.interior_edges
    u = actions.centroids
    bias = partition.bias
    return max(
        (abs(edges[k] - 0.5 * (u[k] + u[k + 1]) - bias) for k in range(len(edges))),
        default=0.0,
    )


def _collapsed_bin(partition: Partition) -> int | None:
    """1-based index of the first dead bin, or None if all alive."""
    edges = partition.edges
    for k in range(partition.n_bins):
        lo, hi = edges[k], edges[k + 1]
        if math.isfinite(lo) and math.isfinite(hi) and hi - lo < COLLAPSE_LENGTH:
            return k + 1
        if partition.source.interval_prob(lo, hi) < COLLAPSE_PROB:
            return k + 1
    return None


def _finish_collapsed(rec: _Recorder, iteration: int,
                      bin_index: int | None) -> IterationTrace:
    outcome = IterationOutcome("collapsed", iteration, bin_index)
    return rec.trace(outcome, iteration)


def lloyd_method_i(source: SourceModel, bias: float, init: Partition,
                   max_iter: int = 10_000, tol: float = 1e-10) -> IterationTrace:
    """Alternate the centroid and biased-midpoint rules from init.

    One iteration replaces the actions with the bin means and every
    interior edge with the midpoint of its neighboring means plus the
    bias. A certified equilibrium is an exact fixed point and converges
    in one iteration with zero movement. Collapse (an edge falling off
    the support or crossing a neighbor, or a bin shrinking below the
    probability/length floors) ends the run as an outcome. Unlike
    encoder_best_response, a transient step whose actions land outside
    their own bins is not an error here; only equilibria, not iterates,
    owe that property.
    """
    return _run(source, bias, init, max_iter, tol, damping=1.0)


def fixed_point_iterate(source: SourceModel, bias: float, init: Partition,
                        damping: float = 0.5, max_iter: int = 10_000,
                        tol: float = 1e-10) -> IterationTrace:
    """Damped iteration of the combined midpoint map on interior edges.

    Each edge moves a fraction damping of the way to the midpoint of
    its neighboring bin means plus the bias. damping = 1 reproduces
    lloyd_method_i exactly. Same outcome contract as lloyd_method_i;
    edge-ordering violations are collapses, not exceptions.
    """
    return _run(source, bias, init, max_iter, tol, damping=damping)


def _run(source: SourceModel, bias: float, init: Partition, max_iter: int,
         tol: float, damping: float) -> IterationTrace:
    if not 0.0 < damping <= 1.0:
        raise DomainError(f"damping must lie in (0, 1], got {damping!r}")
    if not (isinstance(max_iter, int) and max_iter >= 1):
        raise DomainError(f"max_iter must be a positive integer, got {max_iter!r}")
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    # Rebind the edges to this run's source and bias; validates support.
    current = Partition(init.edges, source, bias)
    rec = _Recorder()

    dead = _collapsed_bin(current)
    if dead is not None:
        rec.add(0, current, math.nan, force=True)
        return _finish_collapsed(rec, 0, dead)
    actions = decoder_best_response(current)
    rec.add(0, current, _max_residual(current, actions), force=True)

    lo, hi = source.support
    for it in range(1, max_iter + 1):
        try:
            u = np.asarray(actions.centroids)
            rows = 0.5 * (u[:-1] + u[1:]) + bias
            old = np.asarray(current.interior_edges)
            moved = (1.0 - damping) * old + damping * rows
            if moved.size and not (
                    lo < moved[0] and moved[-1] < hi
                    and np.all(np.diff(moved) > 0.0)):
                bad = int(np.flatnonzero(np.diff(
                    np.concatenate(([lo], moved, [hi]))) <= 0.0)[0]) + 1
                return _finish_collapsed(rec, it, bad)
            nxt = Partition((lo, *moved, hi), source, bias)
        except DomainError:
            return _finish_collapsed(rec, it, None)

        dead = _collapsed_bin(nxt)
        if dead is not None:
            rec.add(it, nxt, math.nan, force=True)
            return _finish_collapsed(rec, it, dead)

        try:
            nxt_actions = decoder_best_response(nxt)
        except DomainError:
            return _finish_collapsed(rec, it, None)
        residual = _max_residual(nxt, nxt_actions)
        movement = max(
            (abs(a - b)
             for a, b in zip(nxt.interior_edges, current.interior_edges)),
            default=0.0)
        current, actions = nxt, nxt_actions
        rec.add(it, current, residual)
        if movement <= tol and residual <= tol:
            rec.add(it, current, residual, force=True)
            return rec.trace(IterationOutcome("converged", it), it)

    rec.add(max_iter, current, _max_residual(current, actions), force=True)
    return rec.trace(IterationOutcome("max_iter", max_iter), max_iter)


@dataclass(frozen=True)
class BasinProbeSummary:
    """Aggregate of many dynamics runs from random initializations.

    distinct_limits holds the interior edges of one representative per
    limit cluster (sup-norm clustering at cluster_tol, greedy in
    initialization order); cluster_sizes aligns with it.
    """

    method: str
    n_inits: int
    seed: int
    fraction_converged: float
    distinct_limits: tuple[tuple[float, ...], ...]
    cluster_sizes: tuple[int, ...]
    collapsed: int
    hit_max_iter: int
    cluster_tol: float = field(default=1e-6)

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_limits)


def basin_probe(source: SourceModel, bias: float, n_bins: int, n_inits: int,
                seed: int, method: str = "lloyd", *, damping: float = 0.5,
                max_iter: int = 10_000, tol: float = 1e-10,
                cluster_tol: float = 1e-6) -> BasinProbeSummary:
    """Run one dynamics method from n_inits random starts and cluster limits.

    Initial interior edges are sorted uniform draws between the 0.001
    and 0.999 source quantiles, so starts cover the region where
    equilibria can live without wasting mass in the far tails. The
    whole probe is deterministic under a fixed seed: draws, run order,
    and greedy clustering all follow initialization index.
    """
    if method not in ("lloyd", "fixed-point"):
        raise DomainError(f"method must be 'lloyd' or 'fixed-point', got {method!r}")
    if not (isinstance(n_inits, int) and n_inits >= 1):
        raise DomainError(f"n_inits must be a positive integer, got {n_inits!r}")
    if not (isinstance(n_bins, int) and n_bins >= 2):
        raise DomainError(f"basin probing needs n_bins >= 2, got {n_bins!r}")
    rng = np.random.default_rng(seed)
    lo, hi = source.support
    box = (source.quantile(0.001), source.quantile(0.999))

    converged = 0
    collapsed = 0
    hit_max = 0
    reps: list[np.ndarray] = []
    sizes: list[int] = []
    for _ in range(n_inits):
        while True:
            draws = np.sort(rng.uniform(box[0], box[1], size=n_bins - 1))
            if draws.size < 2 or np.all(np.diff(draws) > 0.0):
                break
        init = Partition((lo, *draws, hi), source, bias)
        if method == "lloyd":
            trace = lloyd_method_i(source, bias, init, max_iter, tol)
        else:
            trace = fixed_point_iterate(source, bias, init, damping,
                                        max_iter, tol)
        status = trace.outcome.status
        if status == "collapsed":
            collapsed += 1
            continue
        if status == "max_iter":
            hit_max += 1
            continue
        converged += 1
        limit = np.asarray(trace.final_partition.interior_edges)
        for j, rep in enumerate(reps):
            if float(np.max(np.abs(limit - rep))) <= cluster_tol:
                sizes[j] += 1
                break
        else:
            reps.append(limit)
            sizes.append(1)

    return BasinProbeSummary(
        method=method,
        n_inits=n_inits,
        seed=seed,
        fraction_converged=converged / n_inits,
        distinct_limits=tuple(tuple(float(v) for v in r) for r in reps),
        cluster_sizes=tuple(sizes),
        collapsed=collapsed,
        hit_max_iter=hit_max,
        cluster_tol=cluster_tol,
    )
