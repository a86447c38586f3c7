"""Weighted scalarisation of the soft plan requirements.

Rotations, path length, CR clearance, distance travelled through unknown
tissue and the final offset from the target centre are combined with fixed
non-negative weights; the cheapest extracted plan wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import UsageError
from .kinematics import Action, NeedlePose
from .regions import RegionMap, RegionType, classify, min_clearance


@dataclass(frozen=True)
class CostWeights:
    w_rot: float = 5.0
    w_len: float = 1.0
    w_clear: float = 3.0
    w_ur: float = 10.0
    w_center: float = 2.0

    def __post_init__(self):
        for name in ("w_rot", "w_len", "w_clear", "w_ur", "w_center"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def scaled(self, c: float) -> "CostWeights":
        return CostWeights(self.w_rot * c, self.w_len * c, self.w_clear * c,
                           self.w_ur * c, self.w_center * c)


@dataclass(frozen=True)
class PlanMetrics:
    rotations: int
    length_mm: float
    min_clearance_mm: float
    ur_length_mm: float
    final_center_dist_mm: float


@dataclass(frozen=True)
class Plan:
    """Action sequence with its nominal predicted poses (one more than actions)."""

    actions: tuple[Action, ...]
    poses: tuple[NeedlePose, ...] = ()
    states: tuple[int, ...] = ()
    step_len: float = 2.0
    radius: float = math.inf
    metrics: Optional[PlanMetrics] = field(default=None, compare=False)

    @property
    def arc_length(self) -> float:
        return self.step_len * sum(1 for a in self.actions if a is Action.PUSH)

    def pose_at(self, progress: float) -> NeedlePose:
        """Predicted pose after ``progress`` mm of push arc from the plan start."""
        from .kinematics import arc_end

        if not self.poses:
            raise UsageError("plan carries no predicted poses")
        done = 0.0
        for a, before, after in zip(self.actions, self.poses, self.poses[1:]):
            if a is not Action.PUSH:
                continue
            if progress <= done + 1e-9:
                return before
            if progress < done + self.step_len - 1e-9:
                return arc_end(before, progress - done, self.radius)
            done += self.step_len
        return self.poses[-1]


def _sample_path(plan: Plan, spacing: float = 0.5) -> list[tuple[float, float]]:
    from .kinematics import arc_end

    pts = [plan.poses[0].xy]
    for a, before in zip(plan.actions, plan.poses):
        if a is not Action.PUSH:
            continue
        n = max(1, int(math.ceil(plan.step_len / spacing - 1e-9)))
        for i in range(n):
            pts.append(arc_end(before, min(plan.step_len, (i + 1) * spacing), plan.radius).xy)
    return pts


def plan_metrics(plan: Plan, rmap: RegionMap, spacing: float = 0.5) -> PlanMetrics:
    if len(plan.poses) != len(plan.actions) + 1:
        raise UsageError("plan needs one predicted pose per action plus the start")
    pts = _sample_path(plan, spacing)
    ur = 0.0
    # every sample after the first stands for the arc piece leading to it
    seg = plan.step_len / max(1, int(math.ceil(plan.step_len / spacing - 1e-9)))
    for p in pts[1:]:
        if rmap.workspace.contains(p) and classify(rmap, p) is RegionType.UR:
            ur += seg
    end = plan.poses[-1]
    center = 0.0
    if rmap.tr is not None:
        center = math.hypot(end.x - rmap.tr.center[0], end.y - rmap.tr.center[1])
    return PlanMetrics(
        rotations=sum(1 for a in plan.actions if a is Action.ROTATE),
        length_mm=plan.arc_length,
        min_clearance_mm=min_clearance(rmap, pts),
        ur_length_mm=ur,
        final_center_dist_mm=center,
    )


def with_metrics(plan: Plan, rmap: RegionMap) -> Plan:
    return replace(plan, metrics=plan_metrics(plan, rmap))


def plan_cost(plan: Plan, w: CostWeights, rmap: RegionMap, clearance_target: float) -> float:
    m = plan.metrics if plan.metrics is not None else plan_metrics(plan, rmap)
    return (w.w_rot * m.rotations
            + w.w_len * m.length_mm
            + w.w_clear * max(0.0, clearance_target - m.min_clearance_mm)
            + w.w_ur * m.ur_length_mm
            + w.w_center * m.final_center_dist_mm)


def select_plan(plans: Sequence[Plan], w: CostWeights, rmap: RegionMap,
                clearance_target: Optional[float] = None) -> Plan:
    """Cheapest plan; the earliest one wins ties."""
    if not plans:
        raise UsageError("no plans to select from")
    if clearance_target is None:
        clearance_target = 2.0 * rmap.dr_width
    best, best_cost = None, math.inf
    for p in plans:
        c = plan_cost(p, w, rmap, clearance_target)
        if c < best_cost:
            best, best_cost = p, c
    return best
