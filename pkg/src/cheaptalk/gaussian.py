"""Equilibrium construction for Gaussian sources.

The two-bin equilibrium always exists: its normalized edge c solves
two_bin_balance(c) = 2*bias/std, and the balance map is odd and strictly
increasing, so an expanding bracket plus the shared root-finder settles
it. Finite bin counts above two and the (truncated) infinite ladder have
no closed form; they are found by damped fixed-point iteration of the
midpoint map on the interior edges.

An infinite ladder cannot be iterated whole. The artifact keeps a
truncated window of edges anchored at the two-bin edge on the bounded
side, extends the far side by one synthetic bin of the asymptotic length
2|bias| (the limit the true bin lengths approach), and excludes a margin
of edges nearest the cut from certification, where the truncation still
distorts the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .equilibrium import EquilibriumCertificate, Partition, certify
from .errors import (
    DomainError,
    EdgeOrderingError,
    NonConvergenceError,
)
from .sources import GAUSSIAN, SourceModel, _std_interval_mean
from .special import Bracket, find_root, mills_ratio, std_normal_cdf, std_normal_pdf

__all__ = [
    "two_bin_balance",
    "solve_two_bin_gauss",
    "balance_derivative_floor",
    "lower_mills_peak",
    "half_line_bin_bound",
    "asymptotic_bin_length",
    "ladder_boxes",
    "TruncatedLadder",
    "LadderResult",
    "solve_truncated_ladder",
    "solve_n_bins_gauss",
]


def two_bin_balance(c: float) -> float:
    """2c - mills_ratio(c) + mills_ratio(-c): odd, strictly increasing.

    Setting this equal to 2*bias/std characterizes the normalized
    two-bin edge c = (m_1 - mean)/std. The two Mills terms are the
    distances from the edge to the two conditional means, so the value
    is (edge minus action midpoint) rescaled.
    """
    return 2.0 * c - mills_ratio(c) + mills_ratio(-c)


def solve_two_bin_gauss(mean: float, std: float, bias: float) -> Partition:
    """The two-bin equilibrium, which exists for every bias.

    The normalized edge shares the sign of the bias and depends only on
    bias/std; the returned edge is mean + std*c.
    """
    source = SourceModel.gaussian(mean, std)
    if not math.isfinite(bias):
        raise DomainError(f"bias must be finite, got {bias!r}")
    y = 2.0 * bias / std
    c = _solve_balance(y)
    return Partition((-math.inf, mean + std * c, math.inf), source, bias)


def _solve_balance(y: float) -> float:
    """Root of two_bin_balance(c) = y; oddness reduces to y >= 0."""
    if y == 0.0:
        return 0.0
    if y < 0.0:
        return -_solve_balance(-y)
    hi = 1.0
    while two_bin_balance(hi) < y:
        hi *= 2.0

    def defect(c: float) -> float:
        return two_bin_balance(c) - y

    return find_root(defect, Bracket(0.0, hi, -y, two_bin_balance(hi) - y),
                     tol=1e-12)


def balance_derivative_floor(grid, step: float = 1e-5) -> float:
    """Minimum central-difference derivative of two_bin_balance on a grid.

    The analytic derivative is even with a single interior minimum at 0;
    this numerical scan is the check that it stays bounded away from
    zero, which is what makes the two-bin root unique.
    """
    if step <= 0.0:
        raise DomainError(f"step must be positive, got {step!r}")
    values = [
        (two_bin_balance(c + step) - two_bin_balance(c - step)) / (2.0 * step)
        for c in grid
    ]
    if not values:
        raise DomainError("grid must be nonempty")
    return min(values)


def lower_mills_peak() -> tuple[float, float]:
    """Location and value of the interior maximum of c*pdf(c)/cdf(c).

    This product bounds one of the two Mills terms in the balance map's
    derivative; its peak is what the derivative floor subtracts. Found
    numerically on (0, 4), where the unique stationary point lives.
    """
    res = minimize_scalar(
        lambda c: -c * std_normal_pdf(c) / std_normal_cdf(c),
        bounds=(1e-6, 4.0), method="bounded",
        options={"xatol": 1e-12})
    return float(res.x), float(-res.fun)


def half_line_bin_bound(std: float, bias: float) -> int:
    """floor(std/(2|bias|)): cap on bins packed on the bounded side.

    For bias < 0 the cap applies to bins contained in [mean, inf), for
    bias > 0 to bins in (-inf, mean]. Zero means no interior edge fits
    on that side at all.
    """
    if not (math.isfinite(std) and std > 0.0):
        raise DomainError(f"std must be a finite positive real, got {std!r}")
    if not math.isfinite(bias) or bias == 0.0:
        raise DomainError(
            f"the half-line bound needs a nonzero finite bias, got {bias!r}")
    return int(math.floor(std / (2.0 * abs(bias))))


def asymptotic_bin_length(bias: float) -> float:
    """2|bias|: the limit of bin lengths far from the mean."""
    if not (math.isfinite(bias) and bias != 0.0):
        raise DomainError(
            f"asymptotic length needs a nonzero finite bias, got {bias!r}")
    return 2.0 * abs(bias)


def ladder_boxes(mean: float, std: float,
                 bias: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """A priori (anchor range, length range) boxes for converged ladders.

    Every converged truncated ladder must keep its anchor edge in the
    first interval and all its bin lengths in the second; the boxes for
    negative bias are the positive-bias ones reflected about the mean.
    """
    if not (math.isfinite(std) and std > 0.0):
        raise DomainError(f"std must be a finite positive real, got {std!r}")
    if not (math.isfinite(bias) and bias != 0.0):
        raise DomainError(f"ladder boxes need a nonzero finite bias, got {bias!r}")
    w = abs(bias)
    k = half_line_bin_bound(std, bias)
    span = k * (2.0 * std - 2.0 * w) + 2.0 * std
    if bias > 0.0:
        anchor = (mean - span, mean + 2.0 * w + std)
    else:
        anchor = (mean - 2.0 * w - std, mean + span)
    return anchor, (2.0 * w, 2.0 * w + 2.0 * std)


@dataclass(frozen=True)
class TruncatedLadder:
    """A finite window of an infinite-bin edge ladder.

    lengths are in left-to-right spatial order. The anchor is the edge
    on the bounded side of the game: left-most for positive bias (the
    ladder climbs rightward), right-most for negative bias. margin is
    how many edges nearest the truncation cut are excluded from
    certification.
    """

    anchor_edge: float
    lengths: tuple[float, ...]
    margin: int = 5

    def __post_init__(self) -> None:
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if not math.isfinite(self.anchor_edge):
            raise DomainError(f"anchor edge must be finite, got {self.anchor_edge!r}")
        if len(lengths) < 1:
            raise DomainError("a ladder needs at least one bin length")
        if any(not (math.isfinite(v) and v > 0.0) for v in lengths):
            raise DomainError("ladder lengths must be finite and positive")
        if not (isinstance(self.margin, int) and self.margin >= 0):
            raise DomainError(f"margin must be a nonnegative integer, got {self.margin!r}")

    @property
    def n_edges(self) -> int:
        return len(self.lengths) + 1

    def edges_for(self, bias: float) -> np.ndarray:
        """The edge positions this ladder describes, ordered ascending."""
        if bias > 0.0:
            return self.anchor_edge + np.concatenate(
                ([0.0], np.cumsum(self.lengths)))
        if bias < 0.0:
            offsets = np.concatenate(([0.0], np.cumsum(self.lengths)))
            return self.anchor_edge - offsets[-1] + offsets
        raise DomainError("a one-sided ladder is undefined at bias = 0")


@dataclass(frozen=True)
class LadderResult:
    """Outcome of a truncated-ladder solve.

    Non-convergence is data, not an exception: converged is False and
    final_change holds the last sup-norm edge movement. The certificate
    is evaluated on the full partition with the margin edges excluded.
    """

    ladder: TruncatedLadder
    partition: Partition
    certificate: EquilibriumCertificate
    converged: bool
    iterations: int
    final_change: float


def _midpoint_rows(edges: np.ndarray, mean: float, std: float, bias: float,
                   closing_edge: float) -> np.ndarray:
    """One application of the midpoint map to a truncated edge vector.

    Bins are (-inf, e_0), (e_0, e_1), ..., (e_last, closing_edge); row i
    averages the conditional means of the bins flanking edge i and adds
    the bias.
    """
    full = np.concatenate(([-np.inf], edges, [closing_edge]))
    za = (full[:-1] - mean) / std
    zb = (full[1:] - mean) / std
    means = mean + std * _std_interval_mean(za, zb)
    return 0.5 * (means[:-1] + means[1:]) + bias


def _iterate_ladder(mean: float, std: float, bias: float, edges: np.ndarray,
                    damping: float, max_iter: int,
                    tol: float) -> tuple[np.ndarray, bool, int, float]:
    """Damped ladder iteration for bias > 0; returns
    (edges, converged, iterations, last_change)."""
    step = asymptotic_bin_length(bias)
    delta = math.inf
    for it in range(1, max_iter + 1):
        rows = _midpoint_rows(edges, mean, std, bias, edges[-1] + step)
        new = (1.0 - damping) * edges + damping * rows
        if not np.all(np.diff(new) > 0.0):
            raise EdgeOrderingError(
                f"ladder edges crossed at iteration {it}", iteration=it)
        delta = float(np.max(np.abs(new - edges)))
        edges = new
        if delta <= tol:
            return edges, True, it, delta
    return edges, False, max_iter, delta


def _check_iteration_params(damping: float, max_iter: int, tol: float) -> None:
    if not (0.0 < damping <= 1.0):
        raise DomainError(f"damping must lie in (0, 1], got {damping!r}")
    if not (isinstance(max_iter, int) and max_iter >= 1):
        raise DomainError(f"max_iter must be a positive integer, got {max_iter!r}")
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")


def solve_truncated_ladder(source: SourceModel, bias: float,
                           init: TruncatedLadder | None = None, *,
                           n_edges: int = 40, margin: int = 5,
                           damping: float = 0.5, max_iter: int = 100_000,
                           tol: float = 1e-10,
                           cert_tol: float = 1e-8) -> LadderResult:
    """Damped fixed-point solve of a truncated infinite-bin ladder.

    Starts from init when given (its margin wins), otherwise from equal
    spacing of width max(2|bias|, std/4) anchored at the two-bin edge.
    Negative bias is handled by reflecting the game about the mean,
    which flips the bias sign and leaves the source invariant; results
    are mapped back, so the excluded margin sits on the left there.
    Raises EdgeOrderingError if iteration crosses edges; reaching
    max_iter yields converged=False rather than an exception.
    """
    if source.kind != GAUSSIAN:
        raise DomainError("truncated ladders apply to Gaussian sources only")
    if not (math.isfinite(bias) and bias != 0.0):
        raise DomainError(
            f"the one-sided ladder needs a nonzero finite bias, got {bias!r}")
    _check_iteration_params(damping, max_iter, tol)
    mean, std = source.mean, source.std
    if init is not None:
        margin = init.margin
        edges = init.edges_for(bias)
        n_edges = len(edges)
    else:
        if not (isinstance(n_edges, int) and n_edges >= 2):
            raise DomainError(f"n_edges must be an integer >= 2, got {n_edges!r}")
        width = max(2.0 * abs(bias), std / 4.0)
        anchor = solve_two_bin_gauss(mean, std, bias).edges[1]
        start = TruncatedLadder(anchor, (width,) * (n_edges - 1), margin)
        edges = start.edges_for(bias)
    if not (isinstance(margin, int) and 0 <= margin < n_edges):
        raise DomainError(
            f"margin must satisfy 0 <= margin < n_edges, got {margin!r}")

    flip = bias < 0.0
    work_bias = abs(bias)
    work_edges = np.sort(2.0 * mean - edges) if flip else np.asarray(edges, float)
    work_edges, converged, iterations, change = _iterate_ladder(
        mean, std, work_bias, work_edges, damping, max_iter, tol)
    final = np.sort(2.0 * mean - work_edges) if flip else work_edges

    anchor = float(final[-1] if flip else final[0])
    ladder = TruncatedLadder(anchor, tuple(np.diff(final)), margin)
    partition = Partition((-math.inf, *final, math.inf), source, bias)
    k = n_edges
    excluded = range(1, margin + 1) if flip else range(k - margin + 1, k + 1)
    certificate = certify(partition, tol=cert_tol, excluded_edges=tuple(excluded))
    return LadderResult(ladder=ladder, partition=partition,
                        certificate=certificate, converged=converged,
                        iterations=iterations, final_change=change)


def _default_interior(mean: float, std: float, bias: float,
                      n_bins: int) -> np.ndarray:
    """Default interior-edge seed for the finite-bin iteration."""
    width = max(2.0 * abs(bias), std / 4.0)
    count = n_bins - 1
    if bias > 0.0:
        anchor = solve_two_bin_gauss(mean, std, bias).edges[1]
        return anchor + width * np.arange(count)
    if bias < 0.0:
        anchor = solve_two_bin_gauss(mean, std, bias).edges[1]
        return anchor - width * np.arange(count - 1, -1, -1)
    return mean + width * (np.arange(1, count + 1) - 0.5 * n_bins)


def solve_n_bins_gauss(mean: float, std: float, bias: float, n_bins: int,
                       init: Partition | None = None, *,
                       damping: float = 0.5, max_iter: int = 100_000,
                       tol: float = 1e-10) -> Partition:
    """Finite-bin Gaussian equilibrium by damped midpoint iteration.

    Both extreme bins are genuinely half-infinite here. There is no
    closed form and no general existence result for n_bins >= 3, so the
    iteration simply reports what it finds: a Partition on convergence,
    NonConvergenceError (carrying the last edges) when max_iter runs
    out, EdgeOrderingError if edges cross. bias = 0 is permitted and
    yields the classical mean-squared-optimal quantizer, outside the
    strategic story but a useful anchor.
    """
    source = SourceModel.gaussian(mean, std)
    if not math.isfinite(bias):
        raise DomainError(f"bias must be finite, got {bias!r}")
    if not (isinstance(n_bins, int) and n_bins >= 1):
        raise DomainError(f"n_bins must be a positive integer, got {n_bins!r}")
    _check_iteration_params(damping, max_iter, tol)
    if n_bins == 1:
        return Partition((-math.inf, math.inf), source, bias)
    if init is not None:
        if init.n_bins != n_bins:
            raise DomainError(
                f"init has {init.n_bins} bins, expected {n_bins}")
        edges = np.asarray(init.interior_edges, dtype=float)
    else:
        edges = _default_interior(mean, std, bias, n_bins)

    delta = math.inf
    for it in range(1, max_iter + 1):
        full = np.concatenate(([-np.inf], edges, [np.inf]))
        za = (full[:-1] - mean) / std
        zb = (full[1:] - mean) / std
        means = mean + std * _std_interval_mean(za, zb)
        rows = 0.5 * (means[:-1] + means[1:]) + bias
        new = (1.0 - damping) * edges + damping * rows
        if len(new) > 1 and not np.all(np.diff(new) > 0.0):
            raise EdgeOrderingError(
                f"interior edges crossed at iteration {it}", iteration=it)
        delta = float(np.max(np.abs(new - edges)))
        edges = new
        if delta <= tol:
            return Partition((-math.inf, *edges, math.inf), source, bias)
    raise NonConvergenceError(
        f"midpoint iteration did not reach tol={tol} within {max_iter} "
        f"iterations (last change {delta:.3e})",
        iterations=max_iter, final_change=delta, edges=tuple(edges))
