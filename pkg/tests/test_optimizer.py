import math

import pytest
from hypothesis import given, strategies as st

from onss.errors import UsageError
from onss.kinematics import Action, NeedlePose, apply_action, KinParams
from onss.optimizer import CostWeights, Plan, plan_cost, plan_metrics, select_plan, with_metrics
from onss.regions import mark_safe

from conftest import small_map

P, R = Action.PUSH, Action.ROTATE


def make_plan(actions, start=NeedlePose(2.0, 10.0, 0.0, 1), radius=math.inf, step=2.0):
    kin = KinParams(step_len=step, radius=radius)
    poses = [start]
    for a in actions:
        poses.append(apply_action(poses[-1], a, kin))
    return Plan(tuple(actions), tuple(poses), (), step, radius)


def safe_everywhere(m):
    nx, ny = m.shape
    return mark_safe(m, [(i, j) for i in range(nx) for j in range(ny)])


def test_single_length_term():
    m = safe_everywhere(small_map(tr=((12, 10), 2)))
    p = make_plan([P] * 5)
    assert plan_cost(p, CostWeights(), m, 10.0) == pytest.approx(10.0)


def test_rotations_add():
    m = safe_everywhere(small_map(tr=((12, 10), 2)))
    p = make_plan([P, R, P, P, R, P, P])
    assert plan_metrics(p, m).rotations == 2
    assert plan_cost(p, CostWeights(w_rot=5), m, 10.0) == pytest.approx(20.0)


def brute_clearance(plan, crs, n=400):
    # dense resampling of the straight plan, independent of the optimizer's sampler
    a, b = plan.poses[0], plan.poses[-1]
    best = math.inf
    for i in range(n + 1):
        t = i / n
        x, y = a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)
        for c, r in crs:
            best = min(best, math.hypot(x - c[0], y - c[1]) - r)
    return best


def test_clearance_deficit():
    crs = [((8.0, 14.0), 2.0)]
    m = safe_everywhere(small_map(crs, tr=((12, 10), 2)))
    p = make_plan([P] * 5)
    clear = brute_clearance(p, crs)
    assert clear == pytest.approx(2.0)
    assert plan_metrics(p, m).min_clearance_mm == pytest.approx(clear)
    assert plan_cost(p, CostWeights(w_clear=3), m, 4.0) == pytest.approx(10.0 + 6.0)


def test_ur_and_center_terms():
    m = small_map(tr=((12, 13), 2))
    p = make_plan([P] * 5)
    mt = plan_metrics(p, m)
    assert mt.ur_length_mm == pytest.approx(10.0)
    assert mt.final_center_dist_mm == pytest.approx(3.0)
    w = CostWeights(0, 0, 0, 10, 2)
    assert plan_cost(p, w, m, 0.0) == pytest.approx(100 + 6)
    # samples inside the target do not count as UR
    assert plan_metrics(p, small_map(tr=((12, 12), 2))).ur_length_mm == pytest.approx(9.5)


def test_select_examples():
    m = small_map()
    a = make_plan([P, P])
    assert select_plan([a], CostWeights(), m) is a
    b = make_plan([P, P])
    assert select_plan([a, b], CostWeights(), m) is a
    with pytest.raises(UsageError):
        select_plan([], CostWeights(), m)


def test_default_weight_ordering():
    w = CostWeights()
    assert w.w_ur > w.w_rot > w.w_len
    with pytest.raises(ValueError):
        CostWeights(w_len=-1)


action_seq = st.lists(st.sampled_from([P, R]), min_size=1, max_size=7)
weights = st.builds(CostWeights, *[st.floats(0, 20)] * 5)
START = NeedlePose(3.0, 10.0, 0.0, 1)
MAP = small_map([((10, 15), 1.5)], tr=((14, 8), 3))


def plans_from(seqs):
    return [with_metrics(make_plan(s, START, radius=5.0), MAP) for s in seqs]


@given(st.lists(action_seq, min_size=1, max_size=50), weights)
def test_select_equals_linear_scan(seqs, w):
    plans = plans_from(seqs)
    costs = [plan_cost(p, w, MAP, 10.0) for p in plans]
    best = min(range(len(plans)), key=lambda i: (costs[i], i))
    assert select_plan(plans, w, MAP, 10.0) is plans[best]


@given(st.lists(action_seq, min_size=1, max_size=12), weights, st.sampled_from([0.5, 2.0, 4.0, 8.0]))
def test_scaling_invariance(seqs, w, c):
    # powers of two keep the scaled costs exact, so ties resolve identically
    plans = plans_from(seqs)
    assert select_plan(plans, w, MAP, 10.0) is select_plan(plans, w.scaled(c), MAP, 10.0)


@given(action_seq, weights, st.floats(0, 30))
def test_cost_nonnegative(seq, w, target):
    assert plan_cost(plans_from([seq])[0], w, MAP, target) >= 0.0


@given(st.lists(st.floats(0, 50), min_size=2, max_size=8, unique=True))
def test_more_clearance_weight_keeps_spacious(ws):
    m = safe_everywhere(small_map([((10, 12.5), 1.0)], tr=((18, 10), 1.5)))
    close = make_plan([P] * 8, NeedlePose(2.0, 10.0, 0.0, 1))
    # longer but further from the CR
    wide = make_plan([P] * 9, NeedlePose(2.0, 6.0, 0.0, 1))
    plans = [close, wide]
    picks = [select_plan(plans, CostWeights(0, 1, wc, 0, 0), m, 10.0) for wc in sorted(ws)]
    for a, b in zip(picks, picks[1:]):
        assert not (a is wide and b is close)
    assert picks[-1] is wide or sorted(ws)[-1] < 1.0
