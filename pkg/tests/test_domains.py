import math

import numpy as np
import pytest

from grhilbert import (
    AffineImage,
    DescriptorError,
    EmptyClip,
    FullChart,
    GeometryError,
    NotBoundary,
    OperatorNormBall,
    PointOutside,
    Polytope,
    PositiveHalfCone,
    RankOneDirection,
    body_from_descriptor,
    boundary_adjacent,
    boundary_hits,
    certify_boundary,
    delta_along,
    extreme_point_test,
    hausdorff_distance_clipped,
    is_r_proper,
    tangent_cone,
    z_hypersurface_contains,
)
from grhilbert.domains import (
    BISECT_TOL,
    coordinate_directions,
    line_exit,
    sample_interior,
    spectral_norm,
    symmetric_min_eig,
)

from conftest import make_box

E11 = RankOneDirection([1.0, 0.0], [1.0, 0.0])


def random_rotation(rng, n=2):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q


class TestSmallMatrixHelpers:
    def test_spectral_norm_matches_svd(self, rng):
        for _ in range(300):
            m = rng.standard_normal((2, 2)) * rng.uniform(0.1, 3.0)
            assert spectral_norm(m) == pytest.approx(
                np.linalg.svd(m, compute_uv=False)[0], abs=1e-12
            )

    def test_spectral_norm_near_unit_sphere(self, rng):
        # exact boundary matrices must not be misclassified by cancellation
        for _ in range(100):
            u = random_rotation(rng)
            v = random_rotation(rng)
            m = u @ np.diag([1.0, rng.uniform(0, 1)]) @ v
            assert abs(spectral_norm(m) - 1.0) < 1e-14

    def test_symmetric_min_eig(self, rng):
        for _ in range(200):
            s = rng.standard_normal((2, 2))
            s = s + s.T
            assert symmetric_min_eig(s) == pytest.approx(
                np.linalg.eigvalsh(s)[0], abs=1e-12
            )


class TestMembershipOracles:
    def test_ball_matches_gram_condition(self, rng):
        ball = OperatorNormBall(2, 2)
        for _ in range(200):
            x = rng.uniform(-1.2, 1.2, size=(2, 2))
            gram_positive = np.all(
                np.linalg.eigvalsh(np.eye(2) - x.T @ x) > 0
            )
            assert ball.contains(x) == bool(gram_positive)

    def test_half_cone(self, rng):
        cone = PositiveHalfCone(2)
        assert cone.contains(np.eye(2))
        assert not cone.contains(-np.eye(2))
        assert not cone.contains(np.zeros((2, 2)))
        # antisymmetric part is irrelevant
        assert cone.contains(np.eye(2) + np.array([[0.0, 5.0], [-5.0, 0.0]]))

    def test_cone_scaling_invariance(self, rng):
        cone = PositiveHalfCone(2)
        for _ in range(100):
            x = rng.standard_normal((2, 2))
            inside = cone.contains(x)
            for lam in (0.1, 1.0, 10.0):
                assert cone.contains(lam * x) == inside

    def test_full_chart(self, rng):
        chart = FullChart(3, 2)
        assert chart.contains(1e6 * rng.standard_normal((3, 2)))

    def test_polytope_box(self, box22):
        assert box22.contains(np.zeros((2, 2)))
        assert not box22.contains(0.5 * np.eye(2))
        assert box22.bounding_radius == pytest.approx(0.8)
        assert np.allclose(box22.interior_point, 0.0, atol=1e-9)

    def test_polytope_unbounded_slab(self):
        e2 = np.array([[0.0], [1.0]])
        slab = Polytope(2, 1, [(e2, 1.0), (-e2, 1.0)])
        assert slab.bounding_radius is None
        assert slab.contains(np.array([[100.0], [0.5]]))

    def test_affine_image(self, ball22, rng):
        a = np.eye(2) + 0.2 * rng.standard_normal((2, 2))
        b = np.eye(2) + 0.2 * rng.standard_normal((2, 2))
        c = 0.1 * rng.standard_normal((2, 2))
        image = AffineImage.from_left_right(ball22, a, b, c)
        for _ in range(100):
            x = rng.uniform(-1.4, 1.4, size=(2, 2))
            assert image.contains(a @ x @ b + c) == ball22.contains(x)

    def test_convexity_certificates(self, ball22, disk, half_cone2, box22, rng):
        for body in (ball22, disk, half_cone2, box22):
            points = sample_interior(body, rng, 200)
            for first, second in zip(points[::2], points[1::2]):
                assert body.contains(0.5 * (first + second))

    def test_openness(self, ball22, half_cone2, rng):
        for body in (ball22, half_cone2):
            for x in sample_interior(body, rng, 50):
                shift = rng.standard_normal(body.shape)
                shift *= 1e-9 / np.linalg.norm(shift)
                assert body.contains(x + shift)


class TestBoundaryHits:
    def test_ball_diameter(self, ball22):
        hit = boundary_hits(ball22, np.zeros((2, 2)), E11)
        assert hit.t_minus == pytest.approx(-1.0, abs=1e-10)
        assert hit.t_plus == pytest.approx(1.0, abs=1e-10)

    def test_half_cone_one_sided(self, half_cone2):
        # symmetrized condition 2 I + 2 t e1 e1^T > 0 exits exactly at t = -1
        hit = boundary_hits(half_cone2, np.eye(2), E11)
        assert hit.t_plus == math.inf
        assert hit.t_minus == pytest.approx(-1.0, abs=1e-10)

    def test_full_chart_unbounded(self, rng):
        chart = FullChart(2, 2)
        hit = boundary_hits(chart, rng.standard_normal((2, 2)), E11)
        assert hit.unbounded_both

    def test_point_outside(self, ball22):
        with pytest.raises(PointOutside):
            boundary_hits(ball22, 2.0 * np.eye(2), E11)

    def test_bracketing_certificate(self, ball22, box22, rng):
        eps = 1e-10
        for body in (ball22, box22):
            for _ in range(200):
                x = sample_interior(body, rng, 1)[0]
                s = RankOneDirection(rng.standard_normal(2), rng.standard_normal(2))
                hit = boundary_hits(body, x, s)
                for t in (hit.t_minus, hit.t_plus):
                    scale = max(1.0, abs(t))
                    assert body.contains(x + (t - math.copysign(eps * scale, t)) * s.matrix)
                    assert not body.contains(x + (t + math.copysign(10 * eps * scale, t)) * s.matrix)

    def test_delta_along(self, ball22, half_cone2):
        assert delta_along(ball22, np.zeros((2, 2)), E11) == pytest.approx(1.0, abs=1e-10)
        chart = FullChart(2, 2)
        assert delta_along(chart, np.zeros((2, 2)), E11) == math.inf
        assert math.isfinite(delta_along(half_cone2, np.eye(2), E11))


class TestCertifyBoundary:
    def test_projects_inexact_points(self, ball22):
        point = certify_boundary(ball22, (1.0 + 1e-9) * np.eye(2))
        assert abs(spectral_norm(point) - 1.0) < 1e-12

    def test_interior_rejected(self, ball22):
        with pytest.raises(NotBoundary):
            certify_boundary(ball22, 0.5 * np.eye(2))

    def test_far_outside_rejected(self, ball22):
        with pytest.raises(NotBoundary):
            certify_boundary(ball22, 2.0 * np.eye(2))


class TestTangentCone:
    def test_interval_cone(self, interval):
        cone = tangent_cone(interval, np.array([[1.0]]))
        for y in (-5.0, -1.0, 0.0, 0.99):
            assert cone.contains(np.array([[y]]))
        # outside margins must exceed the scan-floor resolution (~1e-3)
        for y in (1.01, 1.5, 4.0):
            assert not cone.contains(np.array([[y]]))
        assert cone.is_cone
        assert cone.apex[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_cone_is_its_own_tangent_cone_at_apex(self, half_cone2, rng):
        # apex of the half cone is 0; approach it from inside for the ray test
        cone = tangent_cone(half_cone2, np.zeros((2, 2)))
        agree = 0
        for _ in range(300):
            x = 3.0 * rng.standard_normal((2, 2))
            agree += cone.contains(x) == half_cone2.contains(x)
        assert agree >= 298  # scan-floor resolution at the cone boundary

    def test_scan_monotonicity(self, ball22, rng):
        cone = tangent_cone(ball22, np.eye(2))
        for _ in range(50):
            y = rng.standard_normal((2, 2))
            scale = cone.membership_scale(y)
            if scale is not None and scale > 2.0 ** -39:
                assert ball22.contains(cone.apex + 0.5 * scale * (y - cone.apex))

    def test_not_boundary(self, ball22):
        with pytest.raises(NotBoundary):
            tangent_cone(ball22, 0.2 * np.eye(2))


class TestHausdorff:
    def test_identical(self, ball22):
        assert hausdorff_distance_clipped(ball22, ball22, 2.0, 64, seed=5) == 0.0

    def test_scaled_disk(self, disk):
        delta = 0.1
        scaled = AffineImage(disk, (1.0 + delta) * np.eye(2))
        value = hausdorff_distance_clipped(scaled, disk, 2.0, 512, seed=1)
        assert value == pytest.approx(delta, rel=0.1)

    def test_rescaled_vs_tangent_cone_decreasing(self, ball22):
        from grhilbert.rescaling import rescaled_body

        cone = tangent_cone(ball22, np.eye(2))
        values = [
            hausdorff_distance_clipped(
                rescaled_body(ball22, cone.apex, math.exp(t)), cone, 2.0, 64,
                seed=3, base_point=np.zeros((2, 2)),
            )
            for t in (1.0, 2.0, 3.0)
        ]
        assert values[0] >= values[1] >= values[2]

    def test_empty_clip(self, ball22):
        shifted = AffineImage(ball22, np.eye(4), 10.0 * np.ones((2, 2)))
        with pytest.raises(EmptyClip):
            hausdorff_distance_clipped(shifted, ball22, 0.5, 16, seed=0)


class TestZHypersurface:
    def test_equal_points(self, rng):
        x = rng.standard_normal((2, 2))
        assert z_hypersurface_contains(x, x)

    def test_transverse(self):
        x = np.diag([1.0, 0.5])
        xi = np.diag([0.5, -0.5])
        assert np.linalg.det(x - xi) == pytest.approx(0.5)
        assert not z_hypersurface_contains(xi, x)

    def test_orthogonal_never_meets_ball(self, ball22, rng):
        for _ in range(50):
            e = random_rotation(rng)
            x = sample_interior(ball22, rng, 1)[0]
            assert not z_hypersurface_contains(e, x)

    def test_basis_form(self, rng):
        x = rng.standard_normal((2, 2))
        # the plane of x itself, as an explicit basis
        basis = np.vstack([np.eye(2), x])
        assert z_hypersurface_contains(basis, x)


class TestExtremePointTest:
    def test_identity_extreme(self, ball22):
        result = extreme_point_test(ball22, np.eye(2))
        assert result.is_extreme
        assert result.attained_min > 1e-8

    def test_rank_deficient_contact(self, ball22):
        result = extreme_point_test(ball22, np.diag([1.0, 0.3]))
        assert not result.is_extreme
        assert result.attained_min <= 1e-8
        assert ball22.contains(result.witness)
        assert abs(np.linalg.det(result.witness - np.diag([1.0, 0.3]))) <= 1e-8

    def test_corner_contact(self, ball22):
        result = extreme_point_test(ball22, np.diag([1.0, 0.0]))
        assert not result.is_extreme

    def test_interval_endpoint(self, interval):
        result = extreme_point_test(interval, np.array([[1.0]]))
        assert result.is_extreme

    def test_consistency_with_z_test(self, rng):
        # orthogonal contacts are extreme; rank-deficient contacts are not
        for p in (2, 3):
            ball = OperatorNormBall(p, p)
            for _ in range(3):
                rotation = random_rotation(rng, p)
                assert extreme_point_test(ball, rotation).is_extreme
                sigma = np.ones(p)
                sigma[-1] = rng.uniform(0.0, 0.8)
                flat = rotation @ np.diag(sigma) @ random_rotation(rng, p)
                assert not extreme_point_test(ball, flat).is_extreme


class TestBoundaryAdjacent:
    def test_same_point(self, ball22):
        verdict = boundary_adjacent(ball22, np.eye(2), np.eye(2))
        assert verdict.adjacent

    def test_shared_face(self, ball22):
        verdict = boundary_adjacent(ball22, np.diag([1.0, 0.2]), np.diag([1.0, 0.6]))
        assert verdict.adjacent
        assert verdict.difference_rank == 1

    def test_antipodal(self, ball22):
        verdict = boundary_adjacent(ball22, np.eye(2), -np.eye(2))
        assert not verdict.adjacent
        assert verdict.difference_rank == 2

    def test_face_endpoint_not_adjacent(self, ball22):
        # I is the endpoint of the boundary segment toward diag(0.6, 1)
        verdict = boundary_adjacent(ball22, np.eye(2), np.diag([0.6, 1.0]))
        assert not verdict.adjacent


class TestRProper:
    def test_bounded_bodies_no_violation(self, ball22, disk, box22):
        for body in (ball22, disk, box22):
            assert not is_r_proper(body).violation

    def test_half_cone_no_violation(self, half_cone2):
        assert not is_r_proper(half_cone2).violation

    def test_full_chart_witness(self):
        chart = FullChart(2, 2)
        verdict = is_r_proper(chart)
        assert verdict.violation
        x, s = verdict.witness_point, verdict.witness_direction
        for t in np.linspace(-1e3, 1e3, 41):
            assert chart.contains(x + t * s.matrix)

    def test_tangent_cone_of_flat_contact(self, ball22):
        cone = tangent_cone(ball22, np.diag([1.0, 0.3]))
        verdict = is_r_proper(cone)
        assert verdict.violation
        x, s = verdict.witness_point, verdict.witness_direction
        for t in np.linspace(-1e3, 1e3, 21):
            assert cone.contains(x + t * s.matrix)


class TestDescriptors:
    def test_roundtrip(self, ball22, half_cone2, box22, rng):
        chart = FullChart(2, 2)
        mapped = AffineImage.from_left_right(ball22, 1.1 * np.eye(2), np.eye(2))
        for body in (ball22, half_cone2, box22, chart, mapped):
            clone = body_from_descriptor(body.descriptor())
            for _ in range(50):
                x = rng.uniform(-1.5, 1.5, size=body.shape)
                assert clone.contains(x) == body.contains(x)

    def test_tangent_cone_descriptor(self, ball22, rng):
        cone = tangent_cone(ball22, np.eye(2))
        clone = body_from_descriptor(cone.descriptor())
        for _ in range(50):
            x = rng.uniform(-2.0, 2.0, size=(2, 2))
            assert clone.contains(x) == cone.contains(x)

    def test_unknown_kind(self):
        with pytest.raises(DescriptorError):
            body_from_descriptor({"kind": "mystery", "p": 2, "q": 2})

    def test_unknown_field(self):
        with pytest.raises(DescriptorError):
            body_from_descriptor({"kind": "operator_ball", "p": 2, "q": 2, "x": 1})

    def test_missing_field(self):
        with pytest.raises(DescriptorError):
            body_from_descriptor({"kind": "operator_ball", "p": 2})
