import math
import random

import numpy as np
import pytest

from vhsim.comfort import (
    ComfortCoefficients,
    best_arrangement,
    comfort_from_distance,
    distance_comfort,
    ingroup_comfort,
    outgroup_comfort,
    points_segment_distance,
)
from vhsim.geometry import Pose, Segment, Vec2, distance_point_segment, narrow_passage, open_square
from vhsim.prediction import PredictedTrajectory
from vhsim.proxemics import (
    ArrangementType,
    Crowdedness,
    Definiteness,
    ProxemicsParams,
    SpatialContext,
)

COEFFS = ComfortCoefficients()
PROX = ProxemicsParams()


def traj_from_points(points, pid=0, dt=0.1):
    pts = np.asarray(points, dtype=float)
    times = np.arange(len(pts)) * dt
    return PredictedTrajectory(pid, times, pts, d_min=0.0)


class TestDistanceComfort:
    def test_zero_at_450mm(self):
        g = Segment(Vec2(0, 0), Vec2(1.5, 0))
        score = distance_comfort(g, [Vec2(0.75, 0.45)], COEFFS)
        assert score == 0.0

    def test_one_at_saturation_distance(self):
        g = Segment(Vec2(0, 0), Vec2(1.5, 0))
        score = distance_comfort(g, [Vec2(0.75, 0.67005)], COEFFS)
        assert score == pytest.approx(1.0, abs=1e-3)

    def test_empty_set_is_fully_comfortable(self):
        assert distance_comfort(Segment(Vec2(0, 0), Vec2(1, 0)), [], COEFFS) == 1.0

    def test_pedestrian_on_segment(self):
        g = Segment(Vec2(0, 0), Vec2(1.5, 0))
        assert distance_comfort(g, [Vec2(0.5, 0.0)], COEFFS) == 0.0

    def test_closest_pedestrian_governs(self):
        g = Segment(Vec2(0, 0), Vec2(1.5, 0))
        near = Vec2(0.75, 0.5)
        far = Vec2(0.75, 3.0)
        assert distance_comfort(g, [near, far], COEFFS) == distance_comfort(g, [near], COEFFS)

    def test_monotone_in_distance(self):
        g = Segment(Vec2(0, 0), Vec2(1.5, 0))
        prev = -1.0
        for mm in range(350, 800, 10):
            score = distance_comfort(g, [Vec2(0.75, mm / 1000.0)], COEFFS)
            assert score >= prev
            prev = score

    def test_bounds(self):
        rng = random.Random(41)
        g = Segment(Vec2(0, 0), Vec2(1.5, 0))
        for _ in range(200):
            p = Vec2(rng.uniform(-2, 4), rng.uniform(-3, 3))
            score = distance_comfort(g, [p], COEFFS)
            assert 0.0 <= score <= 1.0
            d = distance_point_segment(p, g)
            if d <= 0.45:
                assert score == 0.0
            if d >= 0.67005:
                assert score == 1.0


class TestComfortFromDistance:
    def test_formula_at_600mm(self):
        # 3.045 - 1370.25/600
        assert comfort_from_distance(0.6, COEFFS) == pytest.approx(0.76125, abs=1e-9)

    def test_coefficient_validation(self):
        with pytest.raises(ValueError):
            ComfortCoefficients(scale_mm=100.0, offset=3.0)
        with pytest.raises(ValueError):
            ComfortCoefficients(scale_mm=-100.0, offset=0.5)


class TestOutgroupComfort:
    def test_no_pedestrians(self):
        assert outgroup_comfort(Vec2(1.5, 0), Vec2(0, 0), [], COEFFS) == 1.0

    def test_path_crossing_segment(self):
        traj = traj_from_points([(0.75, -1.0), (0.75, 0.0), (0.75, 1.0)])
        assert outgroup_comfort(Vec2(1.5, 0), Vec2(0, 0), [traj], COEFFS) == 0.0

    def test_closest_approach_600mm(self):
        traj = traj_from_points([(0.75, 2.0), (0.75, 0.6), (0.75, 1.4)])
        score = outgroup_comfort(Vec2(1.5, 0), Vec2(0, 0), [traj], COEFFS)
        assert score == pytest.approx(0.76125, abs=1e-9)

    def test_equals_min_over_time_of_distance_comfort(self):
        rng = random.Random(59)
        user = Vec2(0, 0)
        cand = Vec2(1.2, 0.4)
        g = Segment(user, cand)
        for _ in range(50):
            n = rng.randint(1, 4)
            trajs = []
            for pid in range(n):
                pts = [(rng.uniform(-2, 3), rng.uniform(-2, 2)) for _ in range(rng.randint(1, 20))]
                trajs.append(traj_from_points(pts, pid=pid))
            got = outgroup_comfort(cand, user, trajs, COEFFS)
            k = max(len(t.points) for t in trajs)
            per_time = []
            for i in range(k):
                positions = [
                    Vec2(*t.points[i]) for t in trajs if i < len(t.points)
                ]
                per_time.append(distance_comfort(g, positions, COEFFS))
            assert got == pytest.approx(min(per_time), abs=1e-12)

    def test_never_exceeds_any_time_slice(self):
        traj = traj_from_points([(2.0, 0.0), (0.9, 0.55), (0.2, 2.0)])
        user, cand = Vec2(0, 0), Vec2(1.5, 0)
        total = outgroup_comfort(cand, user, [traj], COEFFS)
        g = Segment(user, cand)
        for p in traj.points:
            assert total <= distance_comfort(g, [Vec2(*p)], COEFFS) + 1e-12


class TestPointsSegmentDistance:
    def test_matches_scalar_version(self):
        rng = random.Random(67)
        a, b = Vec2(-1, 0.5), Vec2(2, -0.5)
        pts = np.array([(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(100)])
        got = points_segment_distance(pts, a, b)
        for p, d in zip(pts, got):
            assert d == pytest.approx(distance_point_segment(Vec2(*p), Segment(a, b)), abs=1e-12)

    def test_degenerate_segment(self):
        pts = np.array([(1.0, 0.0), (0.0, 2.0)])
        got = points_segment_distance(pts, Vec2(0, 0), Vec2(0, 0))
        assert got == pytest.approx([1.0, 2.0])


class TestIngroupComfort:
    def test_open_uncrowded_alpha_zero(self):
        user = Pose(Vec2(0, 0), 0.0)
        ctx = SpatialContext(Definiteness.OPEN_SPACE, Crowdedness.UNCROWDED)
        score = ingroup_comfort(Vec2(1.0, 0.0), user, context=ctx, params=PROX)
        assert score == 1.0  # closed feasible and preferred

    def test_out_of_range_candidate(self):
        user = Pose(Vec2(0, 0), 0.0)
        ctx = SpatialContext(Definiteness.OPEN_SPACE, Crowdedness.UNCROWDED)
        assert ingroup_comfort(Vec2(2.0, 0.0), user, context=ctx, params=PROX) == 0.0

    def test_near_wall_crowded_l_and_open(self):
        user = Pose(Vec2(0, 0), math.radians(80))
        ctx = SpatialContext(Definiteness.NEAR_WALL, Crowdedness.CROWDED)
        # alpha = 80: closed out of reach, feasible {L-shaped, open} -> max(1.0, 0.6)
        score = ingroup_comfort(Vec2(1.0, 0.0), user, context=ctx, params=PROX)
        assert score == 1.0

    def test_value_set(self):
        rng = random.Random(73)
        user = Pose(Vec2(0, 0), 0.0)
        for key in (
            (Definiteness.OPEN_SPACE, Crowdedness.UNCROWDED),
            (Definiteness.OPEN_SPACE, Crowdedness.CROWDED),
            (Definiteness.NEAR_WALL, Crowdedness.UNCROWDED),
            (Definiteness.NEAR_WALL, Crowdedness.CROWDED),
        ):
            ctx = SpatialContext(*key)
            for _ in range(100):
                cand = Vec2(rng.uniform(-2, 2), rng.uniform(-2, 2))
                if cand == user.position:
                    continue
                score = ingroup_comfort(cand, user, context=ctx, params=PROX)
                assert score in (0.0, 0.2, 0.6, 1.0)

    def test_classifies_context_when_not_given(self):
        env = open_square(20.0)
        user = Pose(Vec2(10, 9.25), math.pi / 2)
        score = ingroup_comfort(Vec2(10, 10.75), user, env=env, pedestrians=[], params=PROX)
        assert score == 1.0

    def test_requires_env_or_context(self):
        with pytest.raises(ValueError):
            ingroup_comfort(Vec2(1, 0), Pose(Vec2(0, 0), 0.0), params=PROX)


class TestBestArrangement:
    def test_tie_prefers_more_closed(self):
        user = Pose(Vec2(0, 0), 0.0)
        ctx = SpatialContext(Definiteness.NEAR_WALL, Crowdedness.UNCROWDED)
        # alpha = 0: feasible {closed, L}; both score 0.6 near a wall uncrowded
        arrangement, score = best_arrangement(Vec2(1.0, 0.0), user, ctx, PROX)
        assert arrangement is ArrangementType.CLOSED
        assert score == 0.6

    def test_no_formation(self):
        user = Pose(Vec2(0, 0), 0.0)
        ctx = SpatialContext(Definiteness.OPEN_SPACE, Crowdedness.UNCROWDED)
        arrangement, score = best_arrangement(Vec2(-1.0, 0.0), user, ctx, PROX)
        assert arrangement is None and score == 0.0
