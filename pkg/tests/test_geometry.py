import math
import random

import pytest

from vhsim.geometry import (
    Environment,
    Pose,
    Rect,
    Segment,
    Vec2,
    angle_between,
    angle_difference,
    disc_rect_intersection_area,
    distance_point_segment,
    distance_segment_segment,
    narrow_passage,
    nearest_wall_distance,
    nearest_wall_distance_segment,
    normalize_angle,
    open_square,
)


class TestDistancePointSegment:
    def test_point_on_segment_is_zero(self):
        s = Segment(Vec2(0, 0), Vec2(2, 0))
        assert distance_point_segment(Vec2(1, 0), s) == 0.0

    def test_perpendicular_foot_inside_segment(self):
        s = Segment(Vec2(0, 0), Vec2(2, 0))
        assert distance_point_segment(Vec2(0, 1), s) == pytest.approx(1.0)

    def test_nearest_point_is_endpoint(self):
        s = Segment(Vec2(0, 0), Vec2(2, 0))
        assert distance_point_segment(Vec2(3, 0), s) == pytest.approx(1.0)

    def test_degenerate_segment(self):
        s = Segment(Vec2(1, 1), Vec2(1, 1))
        assert distance_point_segment(Vec2(4, 5), s) == pytest.approx(5.0)

    def test_reflection_symmetry_and_nonnegative(self):
        rng = random.Random(7)
        for _ in range(200):
            p = Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5))
            a = Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5))
            b = Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5))
            d = distance_point_segment(p, Segment(a, b))
            assert d >= 0.0
            # mirror the whole scene across the x axis
            d_mirror = distance_point_segment(
                Vec2(p.x, -p.y), Segment(Vec2(a.x, -a.y), Vec2(b.x, -b.y))
            )
            assert d == pytest.approx(d_mirror, abs=1e-12)

    def test_zero_iff_on_segment(self):
        rng = random.Random(11)
        s = Segment(Vec2(-1, -1), Vec2(2, 3))
        for _ in range(100):
            t = rng.random()
            on = Vec2(-1 + 3 * t, -1 + 4 * t)
            assert distance_point_segment(on, s) < 1e-9
            off = Vec2(on.x + 0.01, on.y - 0.0075)
            assert distance_point_segment(off, s) > 0.0


class TestAngleBetween:
    def test_parallel(self):
        assert angle_between(Vec2(1, 0), Vec2(1, 0)) == pytest.approx(0.0)

    def test_perpendicular(self):
        assert angle_between(Vec2(1, 0), Vec2(0, 1)) == pytest.approx(math.pi / 2)

    def test_opposite(self):
        assert angle_between(Vec2(1, 0), Vec2(-1, 0)) == pytest.approx(math.pi)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            angle_between(Vec2(0, 0), Vec2(1, 0))

    def test_symmetric_and_rotation_invariant(self):
        rng = random.Random(3)
        for _ in range(200):
            u = Vec2(rng.uniform(-2, 2) or 0.5, rng.uniform(-2, 2) or 0.5)
            v = Vec2(rng.uniform(-2, 2) or -0.5, rng.uniform(-2, 2) or 0.7)
            if u.norm() == 0 or v.norm() == 0:
                continue
            a = angle_between(u, v)
            assert a == pytest.approx(angle_between(v, u), abs=1e-12)
            phi = rng.uniform(0, 2 * math.pi)
            assert a == pytest.approx(angle_between(u.rotated(phi), v.rotated(phi)), abs=1e-9)


class TestAngles:
    def test_normalize_angle_range(self):
        for raw in (-7.5, -math.pi, 0.0, 1.0, 9.42, 100.0):
            a = normalize_angle(raw)
            assert 0.0 <= a < 2 * math.pi
            assert math.isclose(math.cos(a), math.cos(raw), abs_tol=1e-9)

    def test_angle_difference_shortest(self):
        assert angle_difference(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)
        assert angle_difference(2 * math.pi - 0.1, 0.1) == pytest.approx(-0.2)

    def test_pose_normalizes_orientation(self):
        p = Pose(Vec2(0, 0), -math.pi / 2)
        assert p.orientation == pytest.approx(1.5 * math.pi)


class TestEnvironment:
    def test_narrow_passage_centerline(self):
        env = narrow_passage(3.0, 20.0)
        assert nearest_wall_distance(env, Vec2(1.5, 10.0)) == pytest.approx(1.5)

    def test_half_meter_from_wall(self):
        env = narrow_passage(3.0, 20.0)
        assert nearest_wall_distance(env, Vec2(0.5, 4.0)) == pytest.approx(0.5)

    def test_open_square_has_no_walls(self):
        env = open_square(20.0)
        assert env.walls == []
        assert nearest_wall_distance(env, env.center()) == math.inf

    def test_declared_walls_only(self):
        # 20x20 bounds with a single interior wall: distance by hand geometry
        wall = Segment(Vec2(4.0, 0.0), Vec2(4.0, 20.0))
        env = Environment(width=20.0, height=20.0, walls=[wall])
        assert nearest_wall_distance(env, Vec2(10.0, 10.0)) == pytest.approx(6.0)

    def test_wall_outside_bounds_rejected(self):
        with pytest.raises(ValueError):
            Environment(width=5.0, height=5.0, walls=[Segment(Vec2(0, 0), Vec2(9, 0))])

    def test_goal_box_outside_bounds_rejected(self):
        with pytest.raises(ValueError):
            Environment(width=5.0, height=5.0, goal_boxes_top=[Rect(4.0, 4.8, 6.0, 5.0)])

    def test_goal_boxes_cover_edges(self):
        env = open_square(12.0)
        assert len(env.goal_boxes_top) == 5
        assert len(env.goal_boxes_bottom) == 5
        assert env.goal_boxes_top[0].x_min == 0.0
        assert env.goal_boxes_top[-1].x_max == pytest.approx(12.0)

    def test_segment_wall_distance(self):
        env = narrow_passage(3.0, 20.0)
        dyad = Segment(Vec2(0.75, 10.0), Vec2(2.25, 10.0))
        assert nearest_wall_distance_segment(env, dyad) == pytest.approx(0.75)


class TestSegmentSegment:
    def test_crossing_segments(self):
        a = Segment(Vec2(-1, 0), Vec2(1, 0))
        b = Segment(Vec2(0, -1), Vec2(0, 1))
        assert distance_segment_segment(a, b) == 0.0

    def test_parallel_segments(self):
        a = Segment(Vec2(0, 0), Vec2(1, 0))
        b = Segment(Vec2(0, 2), Vec2(1, 2))
        assert distance_segment_segment(a, b) == pytest.approx(2.0)


class TestDiscRectArea:
    def test_disc_inside_rect(self):
        area = disc_rect_intersection_area(Vec2(10, 10), 2.0, Rect(0, 0, 20, 20))
        assert area == pytest.approx(math.pi * 4.0, rel=1e-4)

    def test_inscribed_disc(self):
        area = disc_rect_intersection_area(Vec2(6, 6), 6.0, Rect(0, 0, 12, 12))
        assert area == pytest.approx(math.pi * 36.0, rel=1e-4)

    def test_half_disc(self):
        area = disc_rect_intersection_area(Vec2(0, 10), 3.0, Rect(0, 0, 20, 20))
        assert area == pytest.approx(math.pi * 4.5, rel=1e-4)

    def test_disjoint(self):
        assert disc_rect_intersection_area(Vec2(-10, -10), 2.0, Rect(0, 0, 20, 20)) == 0.0


class TestVec2:
    def test_rotated_preserves_norm(self):
        rng = random.Random(5)
        for _ in range(100):
            v = Vec2(rng.uniform(-3, 3), rng.uniform(-3, 3))
            w = v.rotated(rng.uniform(0, 7))
            assert w.norm() == pytest.approx(v.norm(), abs=1e-12)

    def test_normalize_zero_rejected(self):
        with pytest.raises(ValueError):
            Vec2(0, 0).normalized()

    def test_finite_check(self):
        assert Vec2(1.0, 2.0).is_finite()
        assert not Vec2(float("nan"), 0.0).is_finite()
        assert not Vec2(0.0, float("inf")).is_finite()
