"""Planar bevel-tip needle kinematics.

The tip moves on circular arcs of radius ``radius``; the bevel sign selects
the turning direction and a rotation flips it. Pulls are never simulated
forward: they retrace the recorded insertion path (:func:`invert_path`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

from .errors import DomainError, UsageError
from .regions import Workspace

TWO_PI = 2.0 * math.pi

DEFAULT_HEADINGS = 32
DEFAULT_STEP = 2.0
# one nominal push turns the heading by exactly two quanta
DEFAULT_RADIUS = DEFAULT_STEP / (2 * TWO_PI / DEFAULT_HEADINGS)


def normalize_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod of values just below a multiple of 2pi can round up to 2pi
    return 0.0 if t >= TWO_PI else t


class Action(Enum):
    PUSH = "push"
    ROTATE = "rotate"
    PULL = "pull"


@dataclass(frozen=True)
class NeedlePose:
    x: float
    y: float
    theta: float = 0.0
    bevel: int = 1

    def __post_init__(self):
        if self.bevel not in (1, -1):
            raise ValueError(f"bevel must be +1 or -1, got {self.bevel}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class KinParams:
    step_len: float = DEFAULT_STEP
    radius: float = DEFAULT_RADIUS
    max_deviation: float = TWO_PI / DEFAULT_HEADINGS
    sample_spacing: float = 0.5

    def __post_init__(self):
        if not self.step_len > 0 or not self.radius > 0:
            raise ValueError("step_len and radius must be positive")
        if self.sample_spacing <= 0 or self.max_deviation < 0:
            raise ValueError("bad sample spacing or deviation bound")


@dataclass(frozen=True)
class Grid:
    workspace: Workspace = field(default_factory=Workspace)
    cell: float = 1.0
    headings: int = DEFAULT_HEADINGS

    @property
    def quantum(self) -> float:
        return TWO_PI / self.headings

    @property
    def shape(self) -> tuple[int, int]:
        ws = self.workspace
        return (int(math.ceil(ws.width / self.cell - 1e-9)),
                int(math.ceil(ws.height / self.cell - 1e-9)))


class GameState(NamedTuple):
    cell_x: int
    cell_y: int
    heading_index: int
    bevel: int


def arc_end(pose: NeedlePose, length: float, radius: float) -> NeedlePose:
    """Pose after travelling ``length`` along the current bevel arc."""
    th = pose.theta
    if math.isinf(radius):
        return NeedlePose(pose.x + length * math.cos(th), pose.y + length * math.sin(th),
                          th, pose.bevel)
    k = pose.bevel / radius
    th2 = th + k * length
    x = pose.x + (math.sin(th2) - math.sin(th)) / k
    y = pose.y - (math.cos(th2) - math.cos(th)) / k
    return NeedlePose(x, y, th2, pose.bevel)


def apply_action(pose: NeedlePose, action: Action, kin: KinParams,
                 deviation: float = 0.0, step_len: Optional[float] = None) -> NeedlePose:
    """Advance the needle by one action.

    ``deviation`` perturbs the heading after the arc; ``step_len`` overrides
    the push length for partial pushes.
    """
    if action is Action.PULL:
        raise UsageError("pulls retrace the trace; use invert_path")
    if action is Action.ROTATE:
        return NeedlePose(pose.x, pose.y, pose.theta, -pose.bevel)
    if abs(deviation) > kin.max_deviation + 1e-12:
        raise UsageError(f"deviation {deviation} exceeds bound {kin.max_deviation}")
    length = kin.step_len if step_len is None else step_len
    if not length > 0:
        raise UsageError("push length must be positive")
    end = arc_end(pose, length, kin.radius)
    if deviation:
        end = NeedlePose(end.x, end.y, end.theta + deviation, end.bevel)
    return end


def push_samples(pose: NeedlePose, kin: KinParams, length: Optional[float] = None) -> list[NeedlePose]:
    """Poses every ``sample_spacing`` mm along a push, ending at the push end.

    Heading deviation is not applied; it only acts after the arc.
    """
    length = kin.step_len if length is None else length
    n = max(1, int(math.ceil(length / kin.sample_spacing - 1e-9)))
    return [arc_end(pose, min(length, (i + 1) * kin.sample_spacing), kin.radius) for i in range(n)]


def quantize(pose: NeedlePose, grid: Grid) -> GameState:
    ws = grid.workspace
    if not ws.contains(pose.xy):
        raise DomainError(f"pose {pose} outside workspace")
    nx, ny = grid.shape
    cx = min(int(math.floor((pose.x - ws.x0) / grid.cell)), nx - 1)
    cy = min(int(math.floor((pose.y - ws.y0) / grid.cell)), ny - 1)
    h = int(round(pose.theta / grid.quantum)) % grid.headings
    return GameState(cx, cy, h, pose.bevel)


def representative(state: GameState, grid: Grid) -> NeedlePose:
    """Cell-centre pose standing for a quantized state."""
    ws = grid.workspace
    return NeedlePose(ws.x0 + (state.cell_x + 0.5) * grid.cell,
                      ws.y0 + (state.cell_y + 0.5) * grid.cell,
                      state.heading_index * grid.quantum, state.bevel)


class Trace:
    """Executed needle history with cumulative arc length per entry."""

    def __init__(self, start: NeedlePose, spacing: float = 0.5):
        self.poses: list[NeedlePose] = [start]
        self.actions: list[Optional[Action]] = [None]
        self.arcs: list[float] = [0.0]
        self.spacing = spacing

    def __len__(self) -> int:
        return len(self.poses)

    @property
    def tip(self) -> NeedlePose:
        return self.poses[-1]

    @property
    def start(self) -> NeedlePose:
        return self.poses[0]

    @property
    def length(self) -> float:
        return self.arcs[-1]

    def append(self, pose: NeedlePose, action: Action, arc_delta: float = 0.0) -> None:
        self.poses.append(pose)
        self.actions.append(action)
        self.arcs.append(self.arcs[-1] + arc_delta)

    def record_push(self, samples: list[NeedlePose], step: float, final: Optional[NeedlePose] = None) -> None:
        """Append the sampled arc of one push; ``final`` replaces the last sample."""
        prev = self.length
        n = len(samples)
        for i, p in enumerate(samples):
            if i == n - 1 and final is not None:
                p = final
            arc = prev + min(step, (i + 1) * self.spacing)
            self.poses.append(p)
            self.actions.append(Action.PUSH)
            self.arcs.append(arc)

    def replace_tip(self, pose: NeedlePose) -> None:
        self.poses[-1] = pose

    def prefix(self, n: int) -> "Trace":
        t = Trace(self.poses[0], self.spacing)
        t.poses = self.poses[:n]
        t.actions = self.actions[:n]
        t.arcs = self.arcs[:n]
        return t

    def copy(self) -> "Trace":
        return self.prefix(len(self.poses))

    def points(self) -> list[tuple[float, float]]:
        return [p.xy for p in self.poses]


class Pullback(NamedTuple):
    pose: NeedlePose
    trace: Trace
    start_reached: bool


def invert_path(trace: Trace, pullback_len: float) -> Pullback:
    """Retract the tip by ``pullback_len`` of arc along the recorded trace.

    The returned pose is the latest recorded entry at or behind the target
    arc position, so no new geometry is produced. Pulling back past the
    insertion point clamps there and sets ``start_reached``.
    """
    if pullback_len < 0:
        raise UsageError("pullback length must be non-negative")
    if pullback_len == 0:
        return Pullback(trace.tip, trace.copy(), False)
    target = trace.length - pullback_len
    if target <= 1e-9:
        return Pullback(trace.start, trace.prefix(1), True)
    i = len(trace.arcs) - 1
    while trace.arcs[i] > target + 1e-9:
        i -= 1
    return Pullback(trace.poses[i], trace.prefix(i + 1), False)
