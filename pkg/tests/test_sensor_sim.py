import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apfbench.core import Obstacle, ObstacleKind, PlannerParams, Vec2, distance, empty_scenario, in_collision
from apfbench.planners import PLANNERS
from apfbench.sensor_sim import (RoverState, SensorModel, TrialStatus, detect, run_trial, wrap_angle,
                                 write_trace)
from apfbench.terrain import generate_scenario, preset

CENTER = SensorModel(edge=False)


def _at(d, bearing_deg, r=0.05):
    a = math.radians(bearing_deg)
    return Obstacle.at(d * math.cos(a), d * math.sin(a), r)


def test_sensor_defaults():
    s = SensorModel()
    assert s.range == 0.8 and s.fov == pytest.approx(math.radians(62))
    with pytest.raises(ValueError):
        SensorModel(range=0)
    with pytest.raises(ValueError):
        SensorModel(fov=7.0)


@pytest.mark.parametrize("sensor", [CENTER, SensorModel()])
def test_detect_examples(sensor):
    st0 = RoverState(Vec2(0, 0), 0.0)
    ahead = _at(0.5, 0)
    far = _at(1.0, 0)
    side = _at(0.5, 40)
    assert detect(st0, [ahead, far, side], sensor) == [ahead]


def test_detect_follows_heading():
    o = Obstacle.at(0, 0.5, 0.05)
    assert detect(RoverState(Vec2(0, 0), 0.0), [o], CENTER) == []
    assert detect(RoverState(Vec2(0, 0), math.pi / 2), [o], CENTER) == [o]


def test_edge_mode_sees_large_disc_before_its_center():
    big = Obstacle.at(1.5, 0, 1.0)
    st0 = RoverState(Vec2(0, 0), 0.0)
    assert detect(st0, [big], CENTER) == []
    assert detect(st0, [big], SensorModel()) == [big]


def test_detect_noise_hook():
    o = _at(0.5, 0)
    moved = detect(RoverState(Vec2(0, 0), 0.0), [o], CENTER,
                   noise=lambda ob: Obstacle(Vec2(ob.center.x + 0.01, ob.center.y), ob.radius, ob.kind))
    assert moved[0].center.x == pytest.approx(0.51)


angles = st.floats(-math.pi, math.pi)


@given(st.floats(-2, 2), st.floats(-2, 2), angles, st.floats(0.1, 2.0), st.floats(0.1, 2 * math.pi),
       st.floats(0.01, 1.0))
def test_center_detection_matches_definition(ox, oy, heading, rng, fov, r):
    o = Obstacle.at(ox, oy, r)
    sensor = SensorModel(range=rng, fov=fov, edge=False)
    got = bool(detect(RoverState(Vec2(0, 0), heading), [o], sensor))
    d = math.hypot(ox, oy)
    bearing = math.atan2(oy, ox) - heading
    bearing = math.atan2(math.sin(bearing), math.cos(bearing))
    margin = 1e-9
    if d <= rng - margin and (abs(bearing) <= fov / 2 - margin or d == 0):
        assert got
    elif d > rng + margin or abs(bearing) > fov / 2 + margin:
        assert not got or d == 0


@settings(max_examples=150)
@given(st.floats(-2, 2), st.floats(-2, 2), angles, st.floats(0.1, 2.0), st.floats(0.1, 2 * math.pi),
       st.floats(0.01, 1.0))
def test_edge_detection_against_sampled_disc(ox, oy, heading, rng, fov, r):
    o = Obstacle.at(ox, oy, r)
    st0 = RoverState(Vec2(0, 0), heading)
    edge = bool(detect(st0, [o], SensorModel(range=rng, fov=fov)))
    center = bool(detect(st0, [o], SensorModel(range=rng, fov=fov, edge=False)))
    assert edge or not center
    if edge:
        assert math.hypot(ox, oy) <= rng + r + 1e-9
    # sample the disc; any sample strictly inside the sector must be seen
    rho, phi = np.meshgrid(np.linspace(0, r, 25), np.linspace(0, 2 * math.pi, 73))
    xs = ox + rho * np.cos(phi)
    ys = oy + rho * np.sin(phi)
    d = np.hypot(xs, ys)
    b = np.angle(np.exp(1j * (np.arctan2(ys, xs) - heading)))
    inside = (d < rng * (1 - 1e-9)) & ((np.abs(b) < fov / 2 * (1 - 1e-9)) | (d == 0))
    if inside.any():
        assert edge


@given(st.floats(-1e4, 1e4))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(a), abs=1e-9)
    assert math.sin(w) == pytest.approx(math.sin(a), abs=1e-9)


def test_wrap_angle_pi_boundary():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert RoverState(Vec2(0, 0), 3 * math.pi).heading == pytest.approx(math.pi)


# -- closed-loop trials -------------------------------------------------------------

STRAIGHT = math.dist((2, 2), (28, 28))


@pytest.mark.parametrize("planner", list(PLANNERS))
def test_empty_scenario_walks_straight(planner):
    o = run_trial(empty_scenario(), planner, seed=1)
    assert o.status is TrialStatus.REACHED
    assert o.walked_length == pytest.approx(STRAIGHT, rel=0.02)
    assert o.replan_count == 1
    assert o.safety_samples == []


@pytest.mark.parametrize("planner", list(PLANNERS))
def test_obstacle_off_route_is_never_seen(planner):
    sc = empty_scenario(obstacles=(Obstacle.at(15.0, 10.0, 0.3),))
    o = run_trial(sc, planner, seed=2)
    assert o.status is TrialStatus.REACHED
    assert o.replan_count == 1 and o.safety_samples == []


def test_single_rock_forces_replan_for_rapf():
    sc = empty_scenario(obstacles=(Obstacle.at(15.0, 15.0, 0.3),))
    o = run_trial(sc, "rapf", seed=3, record_trace=True)
    assert o.status is TrialStatus.REACHED
    assert o.replan_count >= 2
    assert len(o.safety_samples) == 1 and o.safety_samples[0][0] == 0
    # safety sample is the closest walked approach to the rock center
    closest = min(distance(w, (15, 15)) for w in o.walked)
    assert o.safety_samples[0][1] == pytest.approx(closest, abs=1e-12)
    assert closest - 0.3 > 0
    assert sum(f for *_, f in o.trace) == o.replan_count


def _check_invariants(sc, o, step):
    w = o.walked
    assert w[0] == sc.start
    gaps = [distance(a, b) for a, b in zip(w, w[1:])]
    for g in gaps[:-1]:
        assert g == pytest.approx(step, abs=1e-9)
    if gaps:
        assert gaps[-1] <= step + 1e-9
    collided = any(in_collision(p, sc.rover_radius, sc.obstacles) for p in w)
    assert (o.status is TrialStatus.COLLISION) == collided
    if o.status is TrialStatus.REACHED:
        assert distance(w[-1], sc.goal_center) < sc.goal_radius
    ids = [i for i, _ in o.safety_samples]
    assert len(ids) == len(set(ids)) and all(0 <= i < len(sc.obstacles) for i in ids)
    assert o.walked_length == pytest.approx(sum(gaps), rel=1e-12)


@pytest.mark.parametrize("planner", list(PLANNERS))
def test_trial_invariants_on_generated_terrain(planner):
    params = PlannerParams()
    for name, seed in (("A", 11), ("B", 12), ("C", 13)):
        sc = generate_scenario(preset(name), seed)
        o = run_trial(sc, planner, params, seed=seed)
        _check_invariants(sc, o, params.step_size)
        again = run_trial(sc, planner, params, seed=seed)
        assert again.status == o.status and again.walked == o.walked
        assert again.safety_samples == o.safety_samples and again.potential_evals == o.potential_evals
        assert again.replan_count == o.replan_count and again.artificial_count == o.artificial_count


def test_known_set_only_grows_and_comes_from_detection():
    sc = generate_scenario(preset("C"), 5)
    o = run_trial(sc, "rapf", seed=5, record_trace=True)
    # the first plan, then only new detections (or an exhausted plan) trigger replanning
    assert 1 <= o.replan_count <= 1 + len(o.safety_samples) + o.artificial_count + len(o.walked)
    seen = {i for i, _ in o.safety_samples}
    assert len(seen) == len(o.safety_samples)
    # every detected obstacle was inside the sensing reach of some walked position
    for i in seen:
        ob = sc.obstacles[i]
        assert min(distance(w, ob.center) for w in o.walked) <= SensorModel().range + ob.radius + 1e-9


def test_center_detection_misses_big_crater_edge():
    # the straight route grazes a large crater whose center stays out of range
    crater = Obstacle.at(16.5, 13.5, 2.0, ObstacleKind.CRATER)
    sc = empty_scenario(obstacles=(crater,))
    o = run_trial(sc, "rapf", sensor=CENTER, seed=0)
    assert o.status is TrialStatus.COLLISION
    _check_invariants(sc, o, PlannerParams().step_size)
    ok = run_trial(sc, "rapf", seed=0)
    assert ok.status is TrialStatus.REACHED


def test_sealed_goal_is_no_path():
    ring = tuple(Obstacle.at(28 + 1.5 * math.cos(a), 28 + 1.5 * math.sin(a), 0.4)
                 for a in np.linspace(0, 2 * math.pi, 16, endpoint=False))
    sc = empty_scenario(obstacles=ring, world_size=(32.0, 32.0))
    o = run_trial(sc, "astar", omniscient=True)
    assert o.status is TrialStatus.NO_PATH
    assert o.replan_count == 1


def test_walk_budget_times_out():
    o = run_trial(empty_scenario(), "rapf", walk_budget=10)
    assert o.status is TrialStatus.TIMEOUT
    assert len(o.walked) == 11


def test_omniscient_plans_once_on_known_map():
    sc = generate_scenario(preset("A"), 21)
    o = run_trial(sc, "astar", omniscient=True)
    assert o.replan_count == 1
    assert len(o.safety_samples) == len(sc.obstacles)


def test_trace_csv(tmp_path):
    sc = empty_scenario(obstacles=(Obstacle.at(15.0, 15.0, 0.3),))
    o = run_trial(sc, "rapf", seed=3, record_trace=True)
    f = tmp_path / "trace.csv"
    write_trace(o, f)
    rows = list(csv.reader(f.open()))
    assert rows[0] == ["step", "x", "y", "heading", "replan_flag"]
    assert rows[1][0] == "0" and rows[1][4] == "1"
    assert sum(int(r[4]) for r in rows[1:]) == o.replan_count
    assert float(rows[-1][1]) == pytest.approx(o.walked[-1].x, abs=1e-6)
    with pytest.raises(ValueError):
        write_trace(run_trial(empty_scenario(), "apf"), f)
