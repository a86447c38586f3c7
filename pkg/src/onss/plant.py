"""Ground-truth needle and tissue simulator.

Holds every CR (known to the model or not), executes actions with a random
heading deviation, and reports tracked positions with a static per-episode
offset plus bounded jitter. The measured force rises linearly with the
penetration depth into a detection region.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UsageError
from .kinematics import (Action, KinParams, NeedlePose, Trace, apply_action, invert_path,
                         push_samples)
from .regions import Point, RegionMap, dr_penetration


@dataclass(frozen=True)
class NoiseModel:
    pos_error_max: float = 3.0
    jitter_max: float = 0.1
    deviation_max: float = 2 * math.pi / 32


@dataclass(frozen=True)
class ForceModel:
    baseline: float = 1.0
    dr_gain: float = 10.0

    def threshold(self, trip_depth: float = 0.5) -> float:
        return self.baseline + self.dr_gain * trip_depth


@dataclass(frozen=True)
class Observation:
    measured_pos: Point
    force: float
    sample_index: int


@dataclass(frozen=True)
class Detection:
    est_boundary_point: Point
    sample_index: int


@dataclass
class StepLog:
    t_index: int
    true_pos: Point
    meas_pos: Point
    force: float
    action: str


@dataclass
class GroundTruth:
    true_map: RegionMap
    pose: NeedlePose
    kin: KinParams
    noise: NoiseModel = field(default_factory=NoiseModel)
    force: ForceModel = field(default_factory=ForceModel)
    seed: Optional[int] = None
    rng: np.random.Generator = field(init=False, repr=False)
    trace: Trace = field(init=False)
    offset: np.ndarray = field(init=False, repr=False)
    log: list = field(init=False, default_factory=list, repr=False)
    n_samples: int = field(init=False, default=0)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self.trace = Trace(self.pose, self.kin.sample_spacing)
        # static tracking offset, leaving room for the jitter inside the error bound
        mag = max(0.0, self.noise.pos_error_max - self.noise.jitter_max)
        ang = self.rng.uniform(0.0, 2 * math.pi)
        r = mag * math.sqrt(self.rng.uniform())
        self.offset = np.array([r * math.cos(ang), r * math.sin(ang)])

    def _measure(self, p: Point) -> Point:
        j = self.noise.jitter_max
        ang = self.rng.uniform(0.0, 2 * math.pi)
        r = j * math.sqrt(self.rng.uniform()) if j > 0 else 0.0
        return (p[0] + self.offset[0] + r * math.cos(ang),
                p[1] + self.offset[1] + r * math.sin(ang))

    def force_at(self, p: Point) -> float:
        depth = dr_penetration(self.true_map.crs, self.true_map.dr_width, p)
        return self.force.baseline + self.force.dr_gain * depth

    def observe(self) -> Observation:
        """One tracking sample at the current tip without moving."""
        obs = Observation(self._measure(self.pose.xy), self.force_at(self.pose.xy), self.n_samples)
        self._log(obs, "observe")
        return obs

    def _log(self, obs: Observation, action: str) -> None:
        self.log.append(StepLog(obs.sample_index, self.pose.xy, obs.measured_pos, obs.force, action))
        self.n_samples += 1

    def in_target(self) -> bool:
        tr = self.true_map.tr
        return tr is not None and tr.distance(self.pose.xy) <= 0.0


class StepRejected(Exception):
    """The action would move the tip out of the workspace."""


def plant_step(w: GroundTruth, a: Action, halt_force: Optional[float] = None) -> list:
    """Execute ``a`` on the true needle and return the tracking samples.

    With ``halt_force`` set, the push stops at the first sample whose force
    exceeds it, so the tip never travels more than one sample spacing past
    the detection point.
    """
    if a is Action.PULL:
        raise UsageError("pulls go through plant_pullback")
    if a is Action.ROTATE:
        w.pose = apply_action(w.pose, a, w.kin)
        w.trace.append(w.pose, a)
        return []
    dev = float(w.rng.uniform(-w.noise.deviation_max, w.noise.deviation_max)) if w.noise.deviation_max > 0 else 0.0
    samples = push_samples(w.pose, w.kin)
    ws = w.true_map.workspace
    if not all(ws.contains(s.xy) for s in samples):
        raise StepRejected(f"push from {w.pose} leaves the workspace")
    start = w.pose
    obs = []
    done = []
    halted = False
    for s in samples:
        w.pose = s
        done.append(s)
        o = Observation(w._measure(s.xy), w.force_at(s.xy), w.n_samples)
        w._log(o, a.value)
        obs.append(o)
        if halt_force is not None and o.force > halt_force:
            halted = True
            break
    if halted:
        w.trace.record_push(done, w.kin.step_len)
        w.pose = done[-1]
    else:
        final = apply_action(start, a, w.kin, deviation=dev)
        w.trace.record_push(done, w.kin.step_len, final=final)
        w.pose = final
    return obs


def detect_dr(obs: list, threshold: float) -> Optional[Detection]:
    for o in obs:
        if o.force > threshold:
            return Detection(o.measured_pos, o.sample_index)
    return None


def plant_pullback(w: GroundTruth, length: float) -> tuple:
    """Retract the true needle along its trace.

    Returns whether the insertion point was re-reached, and the tracking
    sample taken at the new tip.
    """
    pb = invert_path(w.trace, length)
    w.pose = pb.pose
    w.trace = pb.trace
    obs = Observation(w._measure(w.pose.xy), w.force_at(w.pose.xy), w.n_samples)
    w._log(obs, Action.PULL.value)
    return pb.start_reached, obs


def export_trace_csv(w: GroundTruth, path) -> None:
    write_log_csv(w.log, path)


def write_log_csv(log: list, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t_index", "true_x", "true_y", "meas_x", "meas_y", "force", "action"])
        for r in log:
            wr.writerow([r.t_index, f"{r.true_pos[0]:.4f}", f"{r.true_pos[1]:.4f}",
                         f"{r.meas_pos[0]:.4f}", f"{r.meas_pos[1]:.4f}", f"{r.force:.4f}", r.action])
