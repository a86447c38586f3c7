"""Online strategy synthesis loop for needle steering.

Synthesize on the partial model, pick a plan, execute it action by action,
match the tracking data, and on a detection add the CR to the model, pull
the needle back along its own path and synthesize again.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .errors import ConfigurationError
from .game import Strategy, attractor, build_game, extract_plans
from .kinematics import (Action, Grid, KinParams, NeedlePose, Trace, apply_action, invert_path,
                         quantize)
from .matcher import DetectionEvent, Deviation, match_batch
from .optimizer import CostWeights, Plan, select_plan, with_metrics
from .plant import (ForceModel, GroundTruth, NoiseModel, StepRejected, plant_pullback,
                    plant_step)
from .regions import RegionMap, add_discovered_cr, mark_safe, validate_margins
from .scenario import Scenario

log = logging.getLogger(__name__)

HALF_DIAG = math.sqrt(2.0) / 2.0


class Outcome(Enum):
    SUCCESS = "Success"
    ABORTED = "Aborted"
    TIMEOUT = "Timeout"

    @property
    def exit_code(self) -> int:
        return {"Success": 0, "Aborted": 1, "Timeout": 2}[self.value]


@dataclass(frozen=True)
class EngineConfig:
    grid: Grid = field(default_factory=Grid)
    kin: KinParams = field(default_factory=KinParams)
    eps_match: float = 2.0
    force_threshold: float = 6.0
    pullback_len: float = 6.0
    max_plans: int = 32
    weights: CostWeights = field(default_factory=CostWeights)
    clearance_target: Optional[float] = None
    step_budget: int = 600
    wall_timeout: Optional[float] = 120.0
    max_sensor_error: float = 3.0
    tracking_jitter: float = 0.1
    sweep_margin: float = HALF_DIAG
    halt_on_detection: bool = True

    @property
    def goal_margin(self) -> float:
        # a snapped pose in a goal cell is then inside the true target
        return self.grid.cell * HALF_DIAG + 2 * self.tracking_jitter


@dataclass
class EpisodeResult:
    outcome: Outcome
    readjustments: int
    synthesis_times: list
    overall_time: float
    discovered_crs: int
    final_trace: Trace
    steps: int = 0
    replans: int = 0
    reason: str = ""
    model_map: Optional[RegionMap] = None
    plant_log: list = field(default_factory=list, repr=False)
    trail: list = field(default_factory=list, repr=False)
    initial_plans: list = field(default_factory=list, repr=False)
    pullbacks: int = 0

    def summary(self) -> str:
        st = self.synthesis_times
        return (f"outcome={self.outcome.value} readjustments={self.readjustments} "
                f"syntheses={len(st)} synth_avg={sum(st) / len(st):.3f}s "
                f"overall={self.overall_time:.2f}s discovered={self.discovered_crs} steps={self.steps}")


class _Episode:
    def __init__(self, scenario: Scenario, cfg: EngineConfig, seed: int,
                 noise: Optional[NoiseModel], force: Optional[ForceModel],
                 clock: Callable[[], float]):
        self.sc = scenario
        self.cfg = cfg
        self.clock = clock
        self.t0 = clock()
        self.model = scenario.model_map()
        grid = cfg.grid
        if grid.workspace != self.model.workspace:
            grid = Grid(self.model.workspace, grid.cell, grid.headings)
        self.grid = grid
        self.weights = scenario.weights or cfg.weights
        if noise is None:
            noise = NoiseModel(deviation_max=cfg.kin.max_deviation)
        self.plant = GroundTruth(scenario.true_map, scenario.insertion, cfg.kin, noise,
                                 force or ForceModel(), seed)
        self.pose = scenario.insertion
        self.trace = Trace(self.pose, cfg.kin.sample_spacing)
        calib = self.plant.observe()
        # static tracking offset, measured once at the known insertion point
        self.offset = (calib.measured_pos[0] - self.pose.x, calib.measured_pos[1] - self.pose.y)
        self.last_seen = self.pose.xy
        self.synthesis_times: list = []
        self.replans = 0
        self.readjustments = 0
        self.discovered = 0
        self.steps = 0
        self.trail: list = []
        self.strategy: Optional[Strategy] = None
        self._strategy_key = None
        self.plan: Optional[Plan] = None
        self.plan_idx = 0
        self.progress = 0.0
        self.initial_plans: list = []
        self.visited: set = set()
        self.crs_at_visit: dict = {}
        self.model = mark_safe(self.model, [self.model.cell_of(self.pose.xy)])

    # synthesis

    def synthesize(self) -> Strategy:
        key = self.model.crs
        if self.strategy is not None and key == self._strategy_key:
            return self.strategy
        t = self.clock()
        g = build_game(self.model, self.grid, self.cfg.kin, self.pose,
                       sweep_margin=self.cfg.sweep_margin, goal_margin=self.cfg.goal_margin)
        self.strategy = attractor(g)
        self.synthesis_times.append(self.clock() - t)
        self._strategy_key = key
        return self.strategy

    def locate(self) -> int:
        return self.strategy.graph.locate(self.pose)

    def replan(self, s: int) -> None:
        plans = extract_plans(self.strategy, s, self.cfg.max_plans, start_pose=self.pose)
        plans = [with_metrics(p, self.model) for p in plans]
        if not self.initial_plans:
            self.initial_plans = plans
        self.plan = select_plan(plans, self.weights, self.model, self.cfg.clearance_target)
        self.plan_idx = 0
        self.progress = 0.0
        self.replans += 1

    # execution

    def corrected(self, p) -> tuple:
        return (p[0] - self.offset[0], p[1] - self.offset[1])

    def execute(self, a: Action):
        halt = self.cfg.force_threshold if self.cfg.halt_on_detection else None
        obs = plant_step(self.plant, a, halt_force=halt)
        self.steps += 1
        kin = self.cfg.kin
        if a is Action.ROTATE:
            self.pose = apply_action(self.pose, a, kin)
            self.trace.append(self.pose, a)
            return obs, 0.0
        length = min(kin.step_len, len(obs) * kin.sample_spacing)
        samples = [apply_action(self.pose, a, kin, step_len=min(length, (i + 1) * kin.sample_spacing))
                   for i in range(len(obs))]
        self.trace.record_push(samples, kin.step_len)
        self.pose = samples[-1]
        safe = [self.model.cell_of(self.corrected(o.measured_pos)) for o in obs
                if o.force <= self.cfg.force_threshold
                and self.model.workspace.contains(self.corrected(o.measured_pos))]
        self.model = mark_safe(self.model, safe)
        return obs, length

    def snap(self, seen, obs) -> None:
        """Move the model pose onto the tracked position."""
        kin = self.cfg.kin
        a = self.last_seen
        b = seen
        chord = math.atan2(b[1] - a[1], b[0] - a[0])
        span = math.hypot(b[0] - a[0], b[1] - a[1])
        theta = self.pose.theta
        if span > 0.5 * kin.step_len:
            theta = chord + self.pose.bevel * span / (2 * kin.radius)
        ws = self.model.workspace
        x = min(max(seen[0], ws.x0), ws.x1)
        y = min(max(seen[1], ws.y0), ws.y1)
        self.pose = NeedlePose(x, y, theta, self.pose.bevel)
        self.trace.replace_tip(self.pose)

    def readjust(self) -> bool:
        """Pull plant and model back; True once the insertion point is re-reached."""
        start_plant, obs = plant_pullback(self.plant, self.cfg.pullback_len)
        pb = invert_path(self.trace, self.cfg.pullback_len)
        self.trace = pb.trace
        self.pose = pb.pose
        self.readjustments += 1
        self.last_seen = self.corrected(obs.measured_pos)
        self.plan = None
        return pb.start_reached or start_plant or len(self.trace) == 1

    def at_start(self) -> bool:
        return len(self.trace) == 1 or self.trace.length <= 1e-9

    # main loop

    def run(self) -> EpisodeResult:
        cfg = self.cfg
        self.synthesize()
        s = self.locate()
        g = self.strategy.graph
        if s != g.GOAL and not self.strategy.is_winning(s):
            return self.finish(Outcome.ABORTED, "no initial strategy")
        since_discovery = True
        while True:
            if cfg.wall_timeout is not None and self.clock() - self.t0 > cfg.wall_timeout:
                log.info("episode %s timed out after %.1fs", self.sc.seed, cfg.wall_timeout)
                return self.finish(Outcome.TIMEOUT, "wall timeout")
            if self.steps >= cfg.step_budget:
                return self.finish(Outcome.TIMEOUT, "step budget")
            g = self.strategy.graph
            s = self.locate()
            if s == g.GOAL:
                if self.plant.in_target():
                    return self.finish(Outcome.SUCCESS)
                obs = self.plant.observe()
                self.snap(self.corrected(obs.measured_pos), [obs])
                self.plan = None
                if self.locate() == g.GOAL:
                    # only possible when the tracking bound is violated
                    self.steps += 1
                continue
            if not self.strategy.is_winning(s):
                if self.at_start():
                    return self.finish(Outcome.ABORTED, "start re-reached without strategy")
                self.readjust()
                self.synthesize()
                since_discovery = self._loop_guard(since_discovery)
                continue
            allowed = self.strategy.allowed_actions(s)
            if (self.plan is None or self.plan_idx >= len(self.plan.actions)
                    or self.plan.actions[self.plan_idx] not in allowed):
                self.replan(s)
            a = self.plan.actions[self.plan_idx]
            self.trail.append((g.state(s), a, tuple(allowed)))
            try:
                obs, length = self.execute(a)
            except StepRejected:
                self.plan = None
                if self.at_start():
                    return self.finish(Outcome.ABORTED, "start re-reached without strategy")
                self.readjust()
                since_discovery = self._loop_guard(since_discovery)
                continue
            self.progress += length
            res = match_batch(obs, self.plan, self.progress, cfg.eps_match,
                              cfg.force_threshold, self.offset)
            if isinstance(res, DetectionEvent):
                center = self._estimate_center(res.est_boundary_point)
                self.model = add_discovered_cr(self.model, center, self.sc.assumed_radius)
                self.discovered += 1
                since_discovery = True
                self.visited.clear()
                self.readjust()
                self.synthesize()
                continue
            if obs:
                seen = self.corrected(obs[-1].measured_pos)
            else:
                seen = None
            if isinstance(res, Deviation):
                self.snap(seen, obs)
                self.plan = None
            else:
                self.plan_idx += 1
            if seen is not None:
                self.last_seen = seen

    def _loop_guard(self, since_discovery: bool) -> bool:
        """Pull back further while the (state, knowledge) pair repeats."""
        while True:
            key = (quantize(self.pose, self.grid), len(self.model.crs))
            if key not in self.visited:
                self.visited.add(key)
                return False
            if self.at_start():
                return False
            self.readjust()

    def _estimate_center(self, boundary):
        # the CR lies beyond the DR entry point along the current heading
        d = self.model.dr_width + self.sc.assumed_radius
        th = self.pose.theta
        ws = self.model.workspace
        x = min(max(boundary[0] + d * math.cos(th), ws.x0), ws.x1)
        y = min(max(boundary[1] + d * math.sin(th), ws.y0), ws.y1)
        return (x, y)

    def finish(self, outcome: Outcome, reason: str = "") -> EpisodeResult:
        return EpisodeResult(
            outcome=outcome,
            readjustments=self.readjustments,
            synthesis_times=list(self.synthesis_times),
            overall_time=self.clock() - self.t0,
            discovered_crs=self.discovered,
            final_trace=self.plant.trace,
            steps=self.steps,
            replans=self.replans,
            reason=reason,
            model_map=self.model,
            plant_log=list(self.plant.log),
            trail=self.trail,
            initial_plans=self.initial_plans,
            pullbacks=self.readjustments,
        )


def check_config(scenario: Scenario, cfg: EngineConfig) -> None:
    model = scenario.model_map()
    if not validate_margins(model, cfg.kin.sample_spacing, cfg.max_sensor_error):
        raise ConfigurationError(
            f"dr_width {model.dr_width} must exceed sample step {cfg.kin.sample_spacing}"
            f" + sensor error {cfg.max_sensor_error}")
    if cfg.pullback_len < cfg.kin.step_len:
        raise ConfigurationError("pullback_len must be at least one push step")


def run_episode(scenario: Scenario, cfg: Optional[EngineConfig] = None, seed: int = 0,
                noise: Optional[NoiseModel] = None, force: Optional[ForceModel] = None,
                clock: Callable[[], float] = time.perf_counter) -> EpisodeResult:
    cfg = cfg or EngineConfig()
    check_config(scenario, cfg)
    return _Episode(scenario, cfg, seed, noise, force, clock).run()
