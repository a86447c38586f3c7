import itertools
import logging
import math
from dataclasses import replace

import pytest

import onss.engine as engine
from onss.engine import EngineConfig, Outcome, _Episode, run_episode
from onss.errors import ConfigurationError
from onss.harness import DEFAULT_INSERTION, count_violations, generate_scenario
from onss.kinematics import Action, NeedlePose
from onss.plant import NoiseModel
from onss.regions import Region, RegionMap, RegionType, add_discovered_cr
from onss.scenario import Scenario, ScenarioParams

NO_DEV = NoiseModel(3.0, 0.1, 0.0)


def hand_scenario(crs, known, tr=((40.0, 50.0), 4.0), params=ScenarioParams()):
    m = RegionMap(crs=tuple(Region(c, r) for c, r in crs), tr=Region(tr[0], tr[1], RegionType.TR))
    return Scenario(params, 0, DEFAULT_INSERTION, m, tuple(known))


def test_zero_crs_straight_success():
    sc = generate_scenario(ScenarioParams(n_crs=0), 3)
    res = run_episode(sc, EngineConfig(), 3, noise=NO_DEV)
    assert res.outcome is Outcome.SUCCESS
    assert res.readjustments == 0 and len(res.synthesis_times) == 1
    assert res.outcome.exit_code == 0


def test_enclosed_target_aborts_without_steps():
    ring = [((40 + 12 * math.cos(a), 50 + 12 * math.sin(a)), 3.0)
            for a in [2 * math.pi * k / 12 for k in range(12)]]
    sc = hand_scenario(ring, [True] * 12)
    res = run_episode(sc, EngineConfig(), 0)
    assert res.outcome is Outcome.ABORTED and res.steps == 0
    assert res.outcome.exit_code == 1
    assert len(res.synthesis_times) == 1


def true_trace_clear(res, sc):
    return count_violations(res, sc.true_map) == 0


@pytest.mark.parametrize("seed", range(4))
def test_unknown_cr_on_path(seed):
    sc = hand_scenario([((22.0, 50.0), 3.0)], [False])
    res = run_episode(sc, EngineConfig(), seed)
    assert res.discovered_crs >= 1 and res.readjustments >= 1
    assert res.outcome in (Outcome.SUCCESS, Outcome.ABORTED)
    c = sc.true_map.crs[0]
    for rec in res.plant_log:
        assert math.dist(rec.true_pos, c.center) > c.radius


def episode(sc, **cfg):
    ep = _Episode(sc, replace(EngineConfig(), **cfg), 0, NoiseModel(0.0, 0.0, 0.0), None,
                  lambda: 0.0)
    ep.synthesize()
    return ep


def test_readjust_pulls_back_to_arc_position():
    sc = hand_scenario([], [])
    ep = episode(sc, pullback_len=4.0)
    for _ in range(5):
        ep.execute(Action.PUSH)
    assert ep.trace.length == pytest.approx(10.0)
    start = ep.readjust()
    assert not start
    assert ep.trace.length == pytest.approx(6.0) and ep.plant.trace.length == pytest.approx(6.0)
    assert ep.pose.xy == pytest.approx(ep.plant.pose.xy)
    assert ep.readjustments == 1


def test_two_pullbacks_reach_start():
    sc = hand_scenario([], [])
    ep = episode(sc, pullback_len=6.0)
    for _ in range(5):
        ep.execute(Action.PUSH)
    assert not ep.readjust()
    assert ep.readjust()
    assert ep.at_start() and ep.pose == sc.insertion


def test_resynthesis_avoids_discovery():
    sc = hand_scenario([], [])
    ep = episode(sc)
    before = ep.strategy
    ep.model = add_discovered_cr(ep.model, (30.0, 50.0), 3.0)
    after = ep.synthesize()
    assert after is not before
    g = after.graph
    assert g.locate(NeedlePose(30.0, 50.0, 0.0, 1)) == g.DEAD
    assert g.locate(NeedlePose(30.0, 50.0 + 3.0 + 4.9, 0.0, 1)) == g.DEAD
    # a push from just outside the DR towards the CR must be losing
    s = g.locate(NeedlePose(21.5, 50.5, 0.0, 1))
    assert (g.succ[0][s] == g.DEAD).all()
    assert len(ep.synthesis_times) == 2


def test_bad_margins_refused():
    m = RegionMap(dr_width=2.0, safety_margin=1.0, tr=Region((40, 50), 4, RegionType.TR))
    sc = Scenario(ScenarioParams(), 0, DEFAULT_INSERTION, m, ())
    with pytest.raises(ConfigurationError):
        run_episode(sc)
    with pytest.raises(ConfigurationError):
        run_episode(hand_scenario([], []), EngineConfig(pullback_len=1.0))


def test_step_budget_timeout():
    sc = hand_scenario([], [])
    res = run_episode(sc, EngineConfig(step_budget=3), 0)
    assert res.outcome is Outcome.TIMEOUT and res.steps == 3 and res.reason == "step budget"
    assert res.outcome.exit_code == 2


def test_wall_timeout_logged(caplog):
    ticks = itertools.count(0.0, 50.0)
    sc = hand_scenario([], [])
    with caplog.at_level(logging.INFO, logger="onss.engine"):
        res = run_episode(sc, EngineConfig(), 0, clock=lambda: next(ticks))
    assert res.outcome is Outcome.TIMEOUT and res.reason == "wall timeout"
    assert "timed out" in caplog.text


FUZZ = [(ScenarioParams(), s) for s in range(6)] + [
    (ScenarioParams(n_crs=10), 11), (ScenarioParams(cr_size_mm=1.0), 12),
    (ScenarioParams(assumed_cr_size_mm=10.0), 13), (ScenarioParams(tr_dist_mm=50.0), 14),
    (ScenarioParams(known_pct=60), 15), (ScenarioParams(n_crs=20), 16)]


@pytest.fixture(scope="module")
def fuzzed():
    out = []
    for p, seed in FUZZ:
        sc = generate_scenario(p, seed)
        calls = []
        real = engine.plant_pullback

        def counting(*a, **kw):
            calls.append(1)
            return real(*a, **kw)

        engine.plant_pullback = counting
        try:
            res = run_episode(sc, EngineConfig(wall_timeout=None), seed)
        finally:
            engine.plant_pullback = real
        out.append((sc, res, len(calls)))
    return out


def test_global_safety(fuzzed):
    for sc, res, _ in fuzzed:
        assert true_trace_clear(res, sc)


def test_termination_classified(fuzzed):
    for _, res, _ in fuzzed:
        assert res.outcome in set(Outcome)
        assert res.steps <= EngineConfig().step_budget
        assert res.synthesis_times


def test_success_means_in_target(fuzzed):
    for sc, res, _ in fuzzed:
        inside = sc.true_map.tr.distance(res.final_trace.tip.xy) <= 0.0
        if res.outcome is Outcome.SUCCESS:
            assert inside


def test_actions_allowed_trail(fuzzed):
    for _, res, _ in fuzzed:
        assert res.trail
        for state, a, allowed in res.trail:
            assert a in allowed and a is not Action.PULL


def test_readjustments_count_pullbacks(fuzzed):
    for _, res, n in fuzzed:
        assert res.readjustments == n
