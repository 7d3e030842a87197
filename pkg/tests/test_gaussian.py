"""Gaussian-source equilibria: two-bin balance, ladders, finite bins."""

import math

import numpy as np
import pytest

from cheaptalk.equilibrium import certify
from cheaptalk.errors import DomainError, NonConvergenceError
from cheaptalk.gaussian import (
    TruncatedLadder,
    asymptotic_bin_length,
    balance_derivative_floor,
    half_line_bin_bound,
    ladder_boxes,
    lower_mills_peak,
    solve_n_bins_gauss,
    solve_truncated_ladder,
    solve_two_bin_gauss,
    two_bin_balance,
)
from cheaptalk.sources import SourceModel

STD_GAUSS = SourceModel.gaussian(0.0, 1.0)


class TestBalance:
    def test_odd(self):
        for c in (0.3, 1.7, 4.0):
            assert two_bin_balance(-c) == pytest.approx(-two_bin_balance(c),
                                                        rel=1e-14)
        assert two_bin_balance(0.0) == 0.0

    def test_strictly_increasing(self):
        grid = np.linspace(-8.0, 8.0, 400)
        vals = [two_bin_balance(c) for c in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_derivative_floor(self):
        # flattest at zero, where the slope is 2 - 2*pdf(0)^2/cdf(0)^2
        floor = balance_derivative_floor(np.linspace(-6.0, 6.0, 125))
        expected = 2.0 - 4.0 / math.pi
        assert floor == pytest.approx(expected, abs=1e-7)
        assert floor > 0.07

    def test_derivative_floor_validation(self):
        with pytest.raises(DomainError):
            balance_derivative_floor([], step=1e-5)
        with pytest.raises(DomainError):
            balance_derivative_floor([0.0], step=0.0)

    def test_lower_mills_peak(self):
        loc, val = lower_mills_peak()
        assert loc == pytest.approx(0.8399236756923727, abs=1e-6)
        assert val == pytest.approx(0.29452821901141396, abs=1e-12)


class TestTwoBin:
    def test_frozen_standard_edge(self):
        edge = solve_two_bin_gauss(0.0, 1.0, 0.5).interior_edges[0]
        assert edge == pytest.approx(1.2780119500746878, abs=1e-11)

    def test_zero_bias_splits_at_mean(self):
        assert solve_two_bin_gauss(3.0, 2.0, 0.0).interior_edges[0] == \
            pytest.approx(3.0, abs=1e-12)

    def test_edge_sign_follows_bias(self):
        for bias in (0.01, 0.4, 2.0):
            assert solve_two_bin_gauss(0.0, 1.0, bias).interior_edges[0] > 0.0
            assert solve_two_bin_gauss(0.0, 1.0, -bias).interior_edges[0] < 0.0

    def test_location_scale_covariance(self):
        c = solve_two_bin_gauss(0.0, 1.0, 0.5).interior_edges[0]
        edge = solve_two_bin_gauss(2.0, 3.0, 1.5).interior_edges[0]
        assert edge == pytest.approx(2.0 + 3.0 * c, rel=1e-13)

    def test_certifies_across_biases(self):
        for bias in (-1.5, -0.2, 0.0, 0.3, 4.0):
            p = solve_two_bin_gauss(0.5, 1.2, bias)
            assert certify(p, tol=1e-9).verdict

    def test_edge_satisfies_balance(self):
        for bias in (0.25, 1.0):
            c = solve_two_bin_gauss(0.0, 1.0, bias).interior_edges[0]
            assert two_bin_balance(c) == pytest.approx(2.0 * bias, abs=1e-11)


class TestSideCaps:
    def test_half_line_bound_values(self):
        assert half_line_bin_bound(1.0, 0.5) == 1
        assert half_line_bin_bound(1.0, 0.05) == 10
        assert half_line_bin_bound(2.0, -0.3) == 3

    def test_half_line_bound_validation(self):
        with pytest.raises(DomainError):
            half_line_bin_bound(1.0, 0.0)
        with pytest.raises(DomainError):
            half_line_bin_bound(1.0, math.inf)
        with pytest.raises(DomainError):
            half_line_bin_bound(0.0, 0.5)

    def test_asymptotic_length(self):
        assert asymptotic_bin_length(-0.3) == pytest.approx(0.6)
        assert asymptotic_bin_length(0.25) == pytest.approx(0.5)
        with pytest.raises(DomainError):
            asymptotic_bin_length(0.0)

    def test_ladder_boxes_reflect(self):
        (alo, ahi), lens = ladder_boxes(0.0, 1.0, 0.3)
        (blo, bhi), lens2 = ladder_boxes(0.0, 1.0, -0.3)
        assert (blo, bhi) == (-ahi, -alo)
        assert lens == lens2


class TestTruncatedLadderType:
    def test_validation(self):
        with pytest.raises(DomainError):
            TruncatedLadder(math.inf, (1.0,))
        with pytest.raises(DomainError):
            TruncatedLadder(0.0, ())
        with pytest.raises(DomainError):
            TruncatedLadder(0.0, (1.0, -0.5))
        with pytest.raises(DomainError):
            TruncatedLadder(0.0, (1.0,), margin=-1)

    def test_edges_for_orientation(self):
        ladder = TruncatedLadder(1.0, (0.5, 0.7))
        up = ladder.edges_for(0.3)
        assert up == pytest.approx([1.0, 1.5, 2.2])
        down = ladder.edges_for(-0.3)
        assert down == pytest.approx([-0.2, 0.3, 1.0])
        with pytest.raises(DomainError):
            ladder.edges_for(0.0)

    def test_n_edges(self):
        assert TruncatedLadder(0.0, (1.0, 1.0, 1.0)).n_edges == 4


class TestTruncatedLadderSolve:
    def test_converges_and_certifies(self):
        for bias in (0.3, 0.5):
            res = solve_truncated_ladder(STD_GAUSS, bias)
            assert res.converged
            assert res.certificate.verdict
            assert res.certificate.excluded_edges == (36, 37, 38, 39, 40)
            assert res.final_change <= 1e-10

    def test_frozen_anchor(self):
        res = solve_truncated_ladder(STD_GAUSS, 0.3)
        assert res.ladder.anchor_edge == pytest.approx(0.6864167174135143,
                                                       abs=1e-9)

    def test_negative_bias_is_the_mirror_image(self):
        pos = solve_truncated_ladder(STD_GAUSS, 0.3)
        neg = solve_truncated_ladder(STD_GAUSS, -0.3)
        assert neg.converged and neg.certificate.verdict
        assert neg.certificate.excluded_edges == (1, 2, 3, 4, 5)
        assert neg.ladder.anchor_edge == pytest.approx(
            -pos.ladder.anchor_edge, abs=1e-12)
        assert neg.ladder.lengths == pytest.approx(
            tuple(reversed(pos.ladder.lengths)), abs=1e-12)

    def test_window_widening_leaves_kept_edges_put(self):
        small = solve_truncated_ladder(STD_GAUSS, 0.3, n_edges=40)
        large = solve_truncated_ladder(STD_GAUSS, 0.3, n_edges=80)
        kept = 40 - small.ladder.margin
        drift = np.abs(small.ladder.edges_for(0.3)[:kept]
                       - large.ladder.edges_for(0.3)[:kept])
        assert float(drift.max()) < 1e-8

    def test_result_respects_a_priori_boxes(self):
        for bias in (0.3, -0.5):
            res = solve_truncated_ladder(STD_GAUSS, bias)
            (alo, ahi), (llo, lhi) = ladder_boxes(0.0, 1.0, bias)
            assert alo < res.ladder.anchor_edge < ahi
            assert all(llo < x < lhi for x in res.ladder.lengths)

    def test_restart_from_solution_is_stationary(self):
        first = solve_truncated_ladder(STD_GAUSS, 0.3)
        again = solve_truncated_ladder(STD_GAUSS, 0.3, init=first.ladder)
        assert again.converged
        assert again.iterations <= 3
        assert again.ladder.anchor_edge == pytest.approx(
            first.ladder.anchor_edge, abs=1e-9)

    def test_init_margin_wins(self):
        init = TruncatedLadder(1.2780119500746878, (0.7,) * 9, margin=3)
        res = solve_truncated_ladder(STD_GAUSS, 0.5, init=init)
        assert res.certificate.excluded_edges == (8, 9, 10)

    def test_non_convergence_is_data(self):
        res = solve_truncated_ladder(STD_GAUSS, 0.3, max_iter=5)
        assert not res.converged
        assert res.iterations == 5
        assert res.final_change > 1e-10
        assert not res.certificate.verdict

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            solve_truncated_ladder(SourceModel.exponential(1.0), 0.3)
        with pytest.raises(DomainError):
            solve_truncated_ladder(STD_GAUSS, 0.0)
        with pytest.raises(DomainError):
            solve_truncated_ladder(STD_GAUSS, 0.3, n_edges=1)
        with pytest.raises(DomainError):
            solve_truncated_ladder(STD_GAUSS, 0.3, margin=40)


class TestFiniteBins:
    def test_zero_bias_is_symmetric(self):
        p = solve_n_bins_gauss(0.0, 1.0, 0.0, 4)
        e = p.interior_edges
        assert e[1] == pytest.approx(0.0, abs=1e-12)
        assert e[0] == pytest.approx(-e[2], abs=1e-9)
        assert certify(p, tol=1e-8).verdict

    def test_negative_bias_certifies(self):
        p = solve_n_bins_gauss(0.0, 1.0, -0.2, 4)
        assert certify(p, tol=1e-8).verdict
        assert all(e < 0.0 for e in p.interior_edges)

    def test_general_location_scale(self):
        p = solve_n_bins_gauss(1.0, 2.0, -0.3, 3)
        assert certify(p, tol=1e-8).verdict

    def test_single_bin(self):
        p = solve_n_bins_gauss(0.0, 1.0, 5.0, 1)
        assert p.edges == (-math.inf, math.inf)

    def test_two_bins_match_closed_form(self):
        iterated = solve_n_bins_gauss(0.0, 1.0, 0.5, 2).interior_edges[0]
        direct = solve_two_bin_gauss(0.0, 1.0, 0.5).interior_edges[0]
        assert iterated == pytest.approx(direct, abs=1e-9)

    def test_restart_from_solution_is_stationary(self):
        p = solve_n_bins_gauss(0.0, 1.0, -0.2, 4)
        q = solve_n_bins_gauss(0.0, 1.0, -0.2, 4, init=p)
        drift = max(abs(a - b) for a, b in zip(q.interior_edges,
                                               p.interior_edges))
        assert drift < 1e-9

    def test_non_convergence_error_payload(self):
        with pytest.raises(NonConvergenceError) as err:
            solve_n_bins_gauss(0.0, 1.0, 0.3, 5, max_iter=3)
        assert err.value.iterations == 3
        assert err.value.final_change > 0.0
        assert len(err.value.edges) == 4

    def test_input_validation(self):
        with pytest.raises(DomainError):
            solve_n_bins_gauss(0.0, 1.0, math.nan, 3)
        with pytest.raises(DomainError):
            solve_n_bins_gauss(0.0, 1.0, 0.2, 0)
        with pytest.raises(DomainError):
            solve_n_bins_gauss(0.0, 1.0, 0.2, 3, damping=0.0)
        with pytest.raises(DomainError):
            init = solve_n_bins_gauss(0.0, 1.0, 0.2, 3)
            solve_n_bins_gauss(0.0, 1.0, 0.2, 4, init=init)
