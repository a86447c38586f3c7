import math

import pytest
from hypothesis import assume, given, strategies as st

import onss.engine as engine
from onss.engine import EngineConfig, run_episode
from onss.harness import generate_scenario
from onss.kinematics import Action, KinParams, NeedlePose, apply_action
from onss.matcher import DetectionEvent, Deviation, Ok, match_batch
from onss.optimizer import Plan
from onss.plant import NoiseModel, Observation
from onss.scenario import ScenarioParams

P = Action.PUSH
KIN = KinParams()


def plan_of(n, start=NeedlePose(10.0, 10.0, 0.0, 1)):
    poses = [start]
    for _ in range(n):
        poses.append(apply_action(poses[-1], P, KIN))
    return Plan((P,) * n, tuple(poses), (), KIN.step_len, KIN.radius)


def obs_along(plan, progress, shift=(0.0, 0.0), force=1.0):
    pts = [plan.pose_at(progress * (i + 1) / 4) for i in range(4)]
    return [Observation((p.x + shift[0], p.y + shift[1]), force, i) for i, p in enumerate(pts)]


def test_on_arc_is_ok():
    plan = plan_of(3)
    assert match_batch(obs_along(plan, 4.0), plan, 4.0, 2.0, 6.0) == Ok()


def test_far_observation_is_deviation():
    plan = plan_of(3)
    res = match_batch(obs_along(plan, 4.0, (0.0, 10.0)), plan, 4.0, 3.0, 6.0)
    assert isinstance(res, Deviation)
    assert res.distance_mm == pytest.approx(10.0)


def test_detection_has_priority():
    plan = plan_of(3)
    obs = obs_along(plan, 4.0, (0.0, 10.0))
    obs[2] = Observation(obs[2].measured_pos, 12.0, 2)
    res = match_batch(obs, plan, 4.0, 3.0, 6.0)
    assert isinstance(res, DetectionEvent) and res.sample_index == 2


def test_empty_batch_ok():
    assert match_batch([], plan_of(1), 0.0, 2.0, 6.0) == Ok()


def test_offset_is_removed():
    plan = plan_of(2)
    obs = obs_along(plan, 2.0, (2.5, -1.5))
    assert match_batch(obs, plan, 2.0, 2.0, 6.0, offset=(2.5, -1.5)) == Ok()
    assert isinstance(match_batch(obs, plan, 2.0, 2.0, 6.0), Deviation)


shift = st.tuples(st.floats(-20, 20), st.floats(-20, 20))


@given(shift, st.floats(0.1, 10), st.floats(0, 30), st.integers(0, 3))
def test_result_classes(sh, eps, spike, at):
    plan = plan_of(3)
    obs = obs_along(plan, 6.0, sh)
    obs[at] = Observation(obs[at].measured_pos, spike, at)
    assume(abs(math.hypot(*sh) - eps) > 1e-9)
    res = match_batch(obs, plan, 6.0, eps, 6.0)
    assert res == match_batch(list(obs), plan, 6.0, eps, 6.0)
    if spike > 6.0:
        assert isinstance(res, DetectionEvent)
    elif math.hypot(*sh) > eps:
        assert isinstance(res, Deviation) and res.distance_mm > eps
    else:
        assert res == Ok()


@pytest.mark.parametrize("seed", range(6))
def test_no_deviation_without_plant_deviations(seed, monkeypatch):
    seen = []

    def spy(*a, **kw):
        r = match_batch(*a, **kw)
        seen.append(r)
        return r

    monkeypatch.setattr(engine, "match_batch", spy)
    sc = generate_scenario(ScenarioParams(), seed)
    cfg = EngineConfig(wall_timeout=None)
    run_episode(sc, cfg, seed, noise=NoiseModel(3.0, 0.1, 0.0))
    assert seen
    assert not any(isinstance(r, Deviation) for r in seen)
