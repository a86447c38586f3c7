"""Acceptor that compares tracking data with the active plan."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .optimizer import Plan
from .plant import Observation, detect_dr
from .regions import Point


@dataclass(frozen=True)
class Ok:
    pass


@dataclass(frozen=True)
class Deviation:
    observed_pos: Point
    predicted_pos: Point
    distance_mm: float


@dataclass(frozen=True)
class DetectionEvent:
    est_boundary_point: Point
    sample_index: int


MatchResult = Union[Ok, Deviation, DetectionEvent]


def match_batch(obs: list, plan: Plan, progress: float, eps_match: float,
                force_threshold: float, offset: Optional[Point] = None) -> MatchResult:
    """Classify one action's batch of observations.

    A force detection wins over positional disagreement. The position check
    uses only the last sample, compared with the plan's prediction at the
    same arc-length ``progress``. ``offset`` is the calibrated static
    tracking offset, subtracted from every measurement.
    """
    if not obs:
        return Ok()
    ox, oy = offset if offset is not None else (0.0, 0.0)
    det = detect_dr(obs, force_threshold)
    if det is not None:
        p = det.est_boundary_point
        return DetectionEvent((p[0] - ox, p[1] - oy), det.sample_index)
    last = obs[-1].measured_pos
    seen = (last[0] - ox, last[1] - oy)
    pred = plan.pose_at(progress).xy
    dist = math.hypot(seen[0] - pred[0], seen[1] - pred[1])
    if dist > eps_match:
        return Deviation(seen, pred, dist)
    return Ok()
