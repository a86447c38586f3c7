"""Experiment harness: random scenarios, the one-at-a-time parameter sweep,
metric aggregation and CSV output."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .engine import EngineConfig, EpisodeResult, Outcome, run_episode
from .errors import GenerationError
from .game import attractor, build_game
from .kinematics import Action, NeedlePose, apply_action, push_samples
from .regions import Region, RegionMap, RegionType
from .scenario import AXES, Scenario, ScenarioParams

DEFAULT_INSERTION = NeedlePose(5.0, 50.0, 0.0, 1)
PLACEMENT_MARGIN = 1.0
PLACEMENT_SPREAD = 6.0
MAX_PLACEMENT_TRIES = 200
MAX_SCENARIO_TRIES = 20

CSV_COLUMNS = ["param_axis", "param_value", "seed", "outcome", "readjustments", "n_synth",
               "synth_min", "synth_avg", "synth_max", "overall_s"]


def output_dir() -> str:
    return os.environ.get("ONSS_OUT_DIR", "out")


def reference_path(rng: np.random.Generator, cfg: EngineConfig, length: float,
                   insertion: NeedlePose = DEFAULT_INSERTION,
                   rotate_prob: float = 0.5, max_turn: float = math.pi / 2) -> list:
    """Random Push/Rotate needle path of at least ``length`` mm.

    Returns the sampled poses; paths that leave the workspace (with a 5 mm
    border) or turn more than ``max_turn`` away from the insertion heading
    are redrawn.
    """
    kin = cfg.kin
    ws = cfg.grid.workspace
    border = 5.0
    for _ in range(1000):
        pose = insertion
        pts = [pose]
        ok = True
        done = 0.0
        while done < length - 1e-9:
            if rng.uniform() < rotate_prob:
                pose = apply_action(pose, Action.ROTATE, kin)
            samples = push_samples(pose, kin)
            pose = samples[-1]
            pts.extend(samples)
            done += kin.step_len
            turn = math.atan2(math.sin(pose.theta - insertion.theta), math.cos(pose.theta - insertion.theta))
            if (abs(turn) > max_turn or not (ws.x0 + border <= pose.x <= ws.x1 - border)
                    or not (ws.y0 + border <= pose.y <= ws.y1 - border)):
                ok = False
                break
        if ok:
            return pts
    raise GenerationError("could not draw a reference path")


def _point_at(path: list, arc: float, spacing: float) -> NeedlePose:
    i = min(len(path) - 1, int(round(arc / spacing)))
    return path[i]


def generate_scenario(p: ScenarioParams, seed: int, cfg: Optional[EngineConfig] = None,
                      insertion: NeedlePose = DEFAULT_INSERTION) -> Scenario:
    """Random scenario around a random reference path, deterministic in ``seed``.

    The target sits on the path at ``tr_dist_mm``; CRs sit beside the path
    with their DR at least ``PLACEMENT_MARGIN`` away from it. The fully known
    map must admit a winning strategy from the insertion pose.
    """
    p.check()
    cfg = cfg or EngineConfig()
    rng = np.random.default_rng(seed)
    ws = cfg.grid.workspace
    spacing = cfg.kin.sample_spacing
    dr = 5.0
    for _ in range(MAX_SCENARIO_TRIES):
        path = reference_path(rng, cfg, p.tr_dist_mm, insertion)
        tr_pose = _point_at(path, p.tr_dist_mm, spacing)
        tr = Region(tr_pose.xy, p.tr_radius_mm, RegionType.TR)
        pts = np.array([q.xy for q in path])
        crs = []
        for _ in range(p.n_crs):
            c = _place_cr(rng, path, pts, tr, p, dr, spacing, ws)
            if c is None:
                break
            crs.append(c)
        if len(crs) < p.n_crs:
            continue
        n_known = int(round(p.known_pct / 100.0 * p.n_crs))
        known = np.zeros(p.n_crs, dtype=bool)
        if n_known:
            known[rng.choice(p.n_crs, size=n_known, replace=False)] = True
        true_map = RegionMap(ws, tuple(crs), tr, frozenset(), dr, 3.5, cfg.grid.cell)
        g = build_game(true_map, cfg.grid, cfg.kin, insertion,
                       sweep_margin=cfg.sweep_margin, goal_margin=cfg.goal_margin)
        if g.start == g.GOAL or not attractor(g).is_winning(g.start):
            continue
        return Scenario(p, seed, insertion, true_map, tuple(bool(k) for k in known), tuple(path))
    raise GenerationError(f"placement failed for {p} seed {seed}")


def _place_cr(rng, path, pts, tr, p, dr, spacing, ws):
    r = p.cr_size_mm
    clear = r + dr + PLACEMENT_MARGIN
    for _ in range(MAX_PLACEMENT_TRIES):
        arc = rng.uniform(0.0, p.tr_dist_mm)
        q = _point_at(path, arc, spacing)
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        off = clear + rng.uniform(0.0, PLACEMENT_SPREAD)
        cx = q.x - side * off * math.sin(q.theta)
        cy = q.y + side * off * math.cos(q.theta)
        if not ws.contains((cx, cy)):
            continue
        if np.min(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)) < clear:
            continue
        if math.hypot(cx - tr.center[0], cy - tr.center[1]) <= r + dr + tr.radius:
            continue
        return Region((cx, cy), r, RegionType.CR)
    return None


def default_sweep(defaults: ScenarioParams = ScenarioParams()) -> list:
    """One-at-a-time sweep: each axis over its value set, defaults elsewhere."""
    out = []
    for axis, values in AXES.items():
        for v in values:
            out.append((axis, v, replace(defaults, **{axis: v})))
    return out


@dataclass
class EpisodeRow:
    param_axis: str
    param_value: object
    seed: int
    outcome: str
    readjustments: int = 0
    synthesis_times: list = field(default_factory=list)
    overall_s: float = 0.0
    steps: int = 0
    discovered: int = 0
    violations: int = 0
    step_budget_exceeded: bool = False

    @property
    def generated(self) -> bool:
        return self.outcome != "GenerationError"

    def csv_row(self) -> list:
        st = self.synthesis_times
        if st:
            smin, savg, smax = min(st), sum(st) / len(st), max(st)
        else:
            smin = savg = smax = 0.0
        return [self.param_axis, _fmt_value(self.param_value), str(self.seed), self.outcome,
                str(self.readjustments), str(len(st)), f"{smin:.6f}", f"{savg:.6f}",
                f"{smax:.6f}", f"{self.overall_s:.6f}"]


def _fmt_value(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _mma(xs) -> tuple:
    xs = list(xs)
    if not xs:
        return (0.0, 0.0, 0.0)
    return (float(min(xs)), float(sum(xs) / len(xs)), float(max(xs)))


@dataclass
class MetricsRow:
    param_axis: str
    param_value: object
    runs: int
    generation_errors: int
    success_rate: float
    readjustments: tuple
    synthesis_time: tuple
    overall_time: tuple

    @classmethod
    def from_rows(cls, axis, value, rows: list) -> "MetricsRow":
        ok = [r for r in rows if r.generated]
        succ = sum(1 for r in ok if r.outcome == Outcome.SUCCESS.value)
        return cls(axis, value, len(ok), len(rows) - len(ok),
                   100.0 * succ / len(ok) if ok else 0.0,
                   _mma(r.readjustments for r in ok),
                   _mma(t for r in ok for t in r.synthesis_times),
                   _mma(r.overall_s for r in ok))

    def cells(self) -> list:
        f = lambda t, u="": "(" + ",".join(f"{x:.2f}{u}" for x in t) + ")"
        return [self.param_axis, _fmt_value(self.param_value), str(self.runs),
                str(self.generation_errors), f"{self.success_rate:.2f}%",
                f(self.readjustments), f(self.synthesis_time, "s"), f(self.overall_time, "s")]


@dataclass
class MetricsTable:
    rows: list
    total: MetricsRow

    HEADER = ["param_axis", "param_value", "runs", "generation_errors", "tr_reach",
              "readjustments", "synthesis_time", "overall_time"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows + [self.total]:
            w.writerow(r.cells())
        return buf.getvalue()


@dataclass
class BatchResult:
    episodes: list
    table: MetricsTable

    @property
    def generation_errors(self) -> int:
        return sum(1 for r in self.episodes if not r.generated)

    def to_csv(self) -> str:
        """Per-episode rows followed by one aggregate row (seed ``agg``) per parametrization."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.episodes:
            w.writerow(r.csv_row())
        for m in self.table.rows:
            w.writerow([m.param_axis, _fmt_value(m.param_value), "agg", f"{m.success_rate:.2f}%",
                        f"{m.readjustments[1]:.4f}", str(m.runs), f"{m.synthesis_time[0]:.6f}",
                        f"{m.synthesis_time[1]:.6f}", f"{m.synthesis_time[2]:.6f}",
                        f"{m.overall_time[1]:.6f}"])
        return buf.getvalue()


def count_violations(result: EpisodeResult, true_map: RegionMap) -> int:
    """True-trace samples lying inside any true CR (closed discs)."""
    pts = [rec.true_pos for rec in result.plant_log] + result.final_trace.points()
    bad = 0
    for p in pts:
        if any(c.distance(p) <= 0.0 for c in true_map.crs):
            bad += 1
    return bad


def run_point(axis: str, value, params: ScenarioParams, seed: int,
              cfg: Optional[EngineConfig] = None,
              clock: Callable[[], float] = time.perf_counter) -> EpisodeRow:
    cfg = cfg or EngineConfig()
    try:
        sc = generate_scenario(params, seed, cfg)
    except GenerationError:
        return EpisodeRow(axis, value, seed, "GenerationError")
    res = run_episode(sc, cfg, seed, clock=clock)
    return EpisodeRow(axis, value, seed, res.outcome.value, res.readjustments,
                      list(res.synthesis_times), res.overall_time, res.steps,
                      res.discovered_crs, count_violations(res, sc.true_map),
                      res.steps > cfg.step_budget)


def _run_point_args(args):
    return run_point(*args)


def run_batch(sweep: list, runs_per_point: int, base_seed: int = 0,
              cfg: Optional[EngineConfig] = None, jobs: int = 1,
              clock: Callable[[], float] = time.perf_counter,
              progress: Optional[Callable[[EpisodeRow], None]] = None) -> BatchResult:
    """Run ``runs_per_point`` seeded episodes per parametrization.

    ``sweep`` holds ``(axis, value, ScenarioParams)`` triples; run ``i`` of
    every point uses seed ``base_seed + i``. Rows come back ordered by
    (parametrization, seed) whatever ``jobs`` is.
    """
    if runs_per_point < 1:
        raise ValueError("runs_per_point must be at least 1")
    cfg = cfg or EngineConfig()
    tasks = [(axis, value, params, base_seed + i, cfg, clock)
             for axis, value, params in sweep for i in range(runs_per_point)]
    rows: list = []
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for row in ex.map(_run_point_args, tasks, chunksize=1):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for t in tasks:
            row = run_point(*t)
            rows.append(row)
            if progress:
                progress(row)
    metric_rows = []
    for k, (axis, value, _) in enumerate(sweep):
        chunk = rows[k * runs_per_point:(k + 1) * runs_per_point]
        metric_rows.append(MetricsRow.from_rows(axis, value, chunk))
    table = MetricsTable(metric_rows, MetricsRow.from_rows("all", "all", rows))
    return BatchResult(rows, table)
