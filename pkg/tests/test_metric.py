import math

import numpy as np
import pytest

from grhilbert import (
    AffineImage,
    BallNotContained,
    FullChart,
    OperatorNormBall,
    PointOutside,
    ProjectiveTransform,
    RankOneDirection,
    hilbert_classical,
    hilbert_lower_bound,
    k_estimate,
    rho,
    rho_lower_bound_ball,
    svd_chain,
)
from grhilbert.domains import sample_interior, sample_rank_one_pair
from grhilbert.metric import MetricBudget, feasible_chain, _chain_cost

from conftest import col, make_box

E11 = RankOneDirection([1.0, 0.0], [1.0, 0.0])
LOG3 = math.log(3.0)


def chord_distance_oracle(contains, x, y, steps=60):
    """Independent Hilbert-distance oracle: exit points by pure doubling and
    interval halving on the membership predicate, then the cross ratio."""
    diff = y - x
    length = float(np.linalg.norm(diff))
    unit = diff / length

    def exit_param(sign):
        lo, hi = 0.0, 1.0
        while contains(x + sign * hi * unit):
            lo, hi = hi, 2.0 * hi
            if hi > 1e9:
                return math.inf
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            if contains(x + sign * mid * unit):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    t_plus = exit_param(+1.0)
    t_minus = exit_param(-1.0)
    ratio = ((t_plus - 0.0) * (length + t_minus)) / ((0.0 + t_minus) * (t_plus - length))
    return abs(math.log(ratio))


class TestRho:
    def test_interval_hand_value(self, interval):
        value = rho(interval, np.array([[0.0]]), np.array([[0.5]])).value
        assert value == pytest.approx(LOG3, abs=1e-12)

    def test_coincident(self, ball22, rng):
        x = sample_interior(ball22, rng, 1)[0]
        assert rho(ball22, x, x).value == 0.0

    def test_rank_two_infinite(self, ball22):
        assert rho(ball22, np.zeros((2, 2)), 0.5 * np.eye(2)).value == math.inf

    def test_rank_one_reduces_to_interval(self, ball22):
        value = rho(ball22, np.zeros((2, 2)), 0.5 * E11.matrix).value
        assert value == pytest.approx(LOG3, abs=1e-10)

    def test_symmetry(self, ball22, rng):
        for _ in range(100):
            x, y, _, _ = sample_rank_one_pair(ball22, rng)
            assert abs(rho(ball22, x, y).value - rho(ball22, y, x).value) <= 1e-10

    def test_outside(self, ball22):
        with pytest.raises(PointOutside):
            rho(ball22, 2.0 * np.eye(2), np.zeros((2, 2)))

    def test_full_chart_degenerate_zero(self, rng):
        chart = FullChart(2, 2)
        for _ in range(20):
            x = rng.standard_normal((2, 2))
            s = RankOneDirection(rng.standard_normal(2), rng.standard_normal(2))
            result = rho(chart, x, x + 2.0 * s.matrix)
            assert result.value == 0.0
            assert result.properness_violation

    def test_projective_invariance_chart_affine(self, ball22, rng):
        worst = 0.0
        for _ in range(20):
            a = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
            b = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
            c = 0.2 * rng.standard_normal((2, 2))
            transform = ProjectiveTransform.from_chart_affine(a, b, c)
            image = AffineImage.from_left_right(ball22, a, b, c)
            for _ in range(20):
                x, y, _, _ = sample_rank_one_pair(ball22, rng)
                base = rho(ball22, x, y).value
                moved = rho(image, transform.apply(x), transform.apply(y)).value
                worst = max(worst, abs(base - moved))
        assert worst <= 1e-9

    def test_monotone_under_inclusion(self, ball22, box22, rng):
        # box22 sits inside ball22; bigger body means smaller distance
        for _ in range(200):
            x, y, _, _ = sample_rank_one_pair(box22, rng)
            assert rho(ball22, x, y).value <= rho(box22, x, y).value + 1e-10


class TestSvdChain:
    def test_rank_one_single_segment(self, rng):
        x = rng.standard_normal((2, 2))
        chain = svd_chain(x, x + 0.7 * E11.matrix)
        assert chain.segments == 1

    def test_larger_singular_value_first(self):
        chain = svd_chain(np.zeros((2, 2)), np.diag([0.3, 0.4]))
        assert chain.segments == 2
        assert np.allclose(chain.waypoints[1], np.diag([0.0, 0.4]), atol=1e-12)
        assert chain.steps[0] == pytest.approx(0.4)

    def test_telescoping(self, rng):
        x = rng.standard_normal((3, 3))
        y = rng.standard_normal((3, 3))
        chain = svd_chain(x, y)
        assert np.linalg.norm(chain.waypoints[-1] - y) <= 1e-12
        assert chain.reconstruction_error() <= 1e-12

    def test_feasible_chain_members(self, ball22, rng):
        for _ in range(50):
            x = sample_interior(ball22, rng, 1)[0]
            y = sample_interior(ball22, rng, 1)[0]
            chain = feasible_chain(ball22, x, y)
            assert all(ball22.contains(w) for w in chain.waypoints)
            assert chain.reconstruction_error() <= 1e-12


class TestKEstimate:
    def test_same_point(self, ball22):
        estimate = k_estimate(ball22, 0.1 * np.eye(2), 0.1 * np.eye(2))
        assert estimate.value == 0.0
        assert estimate.chain.segments == 0

    def test_interval_exact(self, interval):
        estimate = k_estimate(interval, np.array([[0.0]]), np.array([[0.5]]))
        assert estimate.value == pytest.approx(LOG3, abs=1e-12)

    def test_p1_matches_classical(self, disk, simplex2, rng):
        for body in (disk, simplex2):
            for _ in range(25):
                x = sample_interior(body, rng, 1)[0]
                y = sample_interior(body, rng, 1)[0]
                estimate = k_estimate(body, x, y)
                classical = hilbert_classical(body, x, y)
                assert estimate.value == pytest.approx(classical, abs=1e-9)

    def test_monotone_trace_below_svd_cost(self, ball22, rng):
        for _ in range(5):
            x = sample_interior(ball22, rng, 1)[0]
            y = sample_interior(ball22, rng, 1)[0]
            estimate = k_estimate(ball22, x, y)
            svd_cost, _ = _chain_cost(ball22, svd_chain(x, y).waypoints)
            assert all(
                later <= earlier + 1e-12
                for earlier, later in zip(estimate.trace, estimate.trace[1:])
            )
            assert estimate.trace[-1] <= estimate.trace[0] <= svd_cost + 1e-12
            assert estimate.value == pytest.approx(sum(estimate.segment_rhos), abs=1e-12)

    def test_routed_triangle(self, ball22, rng):
        budget = MetricBudget(restarts=0)
        for _ in range(3):
            x = sample_interior(ball22, rng, 1)[0]
            y = sample_interior(ball22, rng, 1)[0]
            z = sample_interior(ball22, rng, 1)[0]
            through = k_estimate(ball22, x, z, budget=budget, seed_waypoints=[y])
            legs = (
                k_estimate(ball22, x, y, budget=budget).value
                + k_estimate(ball22, y, z, budget=budget).value
            )
            assert through.value <= legs + 1e-9

    def test_matched_budget_symmetry(self, ball22, rng):
        for _ in range(3):
            x = sample_interior(ball22, rng, 1)[0]
            y = sample_interior(ball22, rng, 1)[0]
            forward = k_estimate(ball22, x, y).value
            backward = k_estimate(ball22, y, x).value
            assert abs(forward - backward) <= 1e-3 * max(forward, 1e-12)

    def test_serialization_fields(self, ball22, rng):
        x = sample_interior(ball22, rng, 1)[0]
        y = sample_interior(ball22, rng, 1)[0]
        blob = k_estimate(ball22, x, y).to_jsonable()
        assert set(blob) == {"value", "chain", "segment_rhos", "trace", "seed", "budget"}


class TestHilbertClassical:
    def test_disk_diameter(self, disk):
        assert hilbert_classical(disk, col(0, 0), col(0.5, 0)) == pytest.approx(
            LOG3, abs=1e-12
        )

    def test_same_point(self, disk):
        assert hilbert_classical(disk, col(0.2, 0.1), col(0.2, 0.1)) == 0.0

    def test_requires_p1(self, ball22):
        with pytest.raises(ValueError):
            hilbert_classical(ball22, np.zeros((2, 2)), 0.1 * np.eye(2))

    def test_simplex_against_oracle(self, simplex2):
        x, y = col(0.25, 0.25), col(0.5, 0.25)
        oracle = chord_distance_oracle(simplex2.contains, x, y)
        # by hand: exits at first coordinate 0 and 0.75 give cross ratio 4
        assert oracle == pytest.approx(math.log(4.0), abs=1e-9)
        assert hilbert_classical(simplex2, x, y) == pytest.approx(oracle, abs=1e-9)

    def test_disk_klein_model(self, disk, rng):
        # Klein-model distance: the chord cross ratio against the circle
        for _ in range(20):
            x = sample_interior(disk, rng, 1)[0]
            y = sample_interior(disk, rng, 1)[0]
            if np.linalg.norm(x - y) < 1e-8:
                continue
            oracle = chord_distance_oracle(disk.contains, x, y)
            assert hilbert_classical(disk, x, y) == pytest.approx(oracle, abs=1e-8)

    def test_slab_product_property(self, rng):
        # R x (-1, 1): distance depends only on the bounded coordinate
        from grhilbert import Polytope

        e2 = np.array([[0.0], [1.0]])
        slab = Polytope(2, 1, [(e2, 1.0), (-e2, 1.0)])
        for _ in range(50):
            x1, x2 = rng.uniform(-3, 3, size=2)
            y1, y2 = rng.uniform(-0.95, 0.95, size=2)
            if abs(y1 - y2) < 1e-10:
                continue
            value = hilbert_classical(slab, col(x1, y1), col(x2, y2))
            reference = hilbert_classical(slab, col(0, y1), col(0, y2))
            assert value == pytest.approx(reference, abs=1e-9)


class TestHilbertLowerBound:
    def test_p1_equals_classical(self, disk, rng):
        for _ in range(20):
            x = sample_interior(disk, rng, 1)[0]
            y = sample_interior(disk, rng, 1)[0]
            assert hilbert_lower_bound(disk, x, y) == hilbert_classical(disk, x, y)

    def test_tight_on_central_rank_one_segment(self, ball22):
        x = np.zeros((2, 2))
        y = 0.5 * E11.matrix
        assert hilbert_lower_bound(ball22, x, y) == pytest.approx(LOG3, abs=1e-10)
        assert hilbert_lower_bound(ball22, x, y) == pytest.approx(
            rho(ball22, x, y).value, abs=1e-10
        )

    def test_sandwich(self, ball22, rng):
        for _ in range(100):
            x = sample_interior(ball22, rng, 1)[0]
            y = sample_interior(ball22, rng, 1)[0]
            lower = hilbert_lower_bound(ball22, x, y)
            assert lower <= k_estimate(ball22, x, y, budget=MetricBudget(
                rounds=1, restarts=0, slide_iters=0)).value + 1e-9

    def test_boundary_divergence(self, ball22):
        values = [
            hilbert_lower_bound(ball22, np.zeros((2, 2)), r * np.eye(2))
            for r in (0.5, 0.8, 0.9, 0.95, 0.99)
        ]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[3] > 3.0  # r = 0.95
        # analytic check: ambient chord through 0 exits at +/- I
        for r, value in zip((0.5, 0.8, 0.9, 0.95, 0.99), values):
            assert value == pytest.approx(math.log((1 + r) / (1 - r)), abs=1e-9)


class TestRhoLowerBoundBall:
    def test_interval_example(self, interval):
        bound = rho_lower_bound_ball(interval, np.array([[0.0]]), 0.5)
        assert bound.m_sample_max <= 1.5
        assert bound.factor >= 0.5

    def test_no_violation_against_rho(self, ball22, rng):
        eps = 0.3
        bound = rho_lower_bound_ball(ball22, np.zeros((2, 2)), eps, seed=3)
        for _ in range(300):
            z1 = sample_interior(ball22, rng, 1, scale=eps)[0]
            if np.linalg.norm(z1) > eps:
                continue
            s = RankOneDirection(rng.standard_normal(2), rng.standard_normal(2))
            t = rng.uniform(-eps, eps)
            z2 = z1 + t * s.matrix
            if np.linalg.norm(z2) > eps:
                continue
            separation = float(np.linalg.norm(z2 - z1))
            assert rho(ball22, z1, z2).value >= bound.bound(separation) - 1e-12

    def test_explicit_m(self, interval):
        bound = rho_lower_bound_ball(interval, np.array([[0.0]]), 0.25, m_bound=1.0)
        assert bound.factor == pytest.approx(0.8)

    def test_ball_not_contained(self, interval):
        with pytest.raises(BallNotContained):
            rho_lower_bound_ball(interval, np.array([[0.5]]), 0.6)
