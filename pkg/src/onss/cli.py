"""Command line entry point: ``onss gen|synth|run|batch|render``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace

from .engine import EngineConfig, run_episode
from .errors import GenerationError, OnssError
from .game import attractor, build_game, dump_game, extract_plans
from .harness import generate_scenario, output_dir, default_sweep, run_batch
from .optimizer import CostWeights, select_plan, with_metrics
from .plant import write_log_csv
from .render import render_trace
from .scenario import AXES, Scenario, ScenarioParams


def _scenario_args(p: argparse.ArgumentParser) -> None:
    d = ScenarioParams()
    p.add_argument("--n-crs", type=int, default=d.n_crs, choices=AXES["n_crs"])
    p.add_argument("--cr-size", type=float, default=d.cr_size_mm)
    p.add_argument("--assumed-size", type=float, default=d.assumed_cr_size_mm)
    p.add_argument("--tr-dist", type=float, default=d.tr_dist_mm)
    p.add_argument("--known-pct", type=int, default=d.known_pct, choices=AXES["known_pct"])
    p.add_argument("--tr-radius", type=float, default=d.tr_radius_mm)


def _engine_args(p: argparse.ArgumentParser) -> None:
    d = EngineConfig()
    w = d.weights
    p.add_argument("--eps-match", type=float, default=d.eps_match)
    p.add_argument("--force-threshold", type=float, default=d.force_threshold)
    p.add_argument("--pullback", type=float, default=d.pullback_len)
    p.add_argument("--max-plans", type=int, default=d.max_plans)
    p.add_argument("--step-budget", type=int, default=d.step_budget)
    p.add_argument("--wall-timeout", type=float, default=d.wall_timeout,
                   help="seconds; 0 disables")
    p.add_argument("--w-rot", type=float, default=w.w_rot)
    p.add_argument("--w-len", type=float, default=w.w_len)
    p.add_argument("--w-clear", type=float, default=w.w_clear)
    p.add_argument("--w-ur", type=float, default=w.w_ur)
    p.add_argument("--w-center", type=float, default=w.w_center)


def _params(a) -> ScenarioParams:
    return ScenarioParams(a.n_crs, a.cr_size, a.assumed_size, a.tr_dist, a.known_pct, a.tr_radius)


def _config(a) -> EngineConfig:
    return replace(
        EngineConfig(),
        eps_match=a.eps_match, force_threshold=a.force_threshold, pullback_len=a.pullback,
        max_plans=a.max_plans, step_budget=a.step_budget,
        wall_timeout=a.wall_timeout if a.wall_timeout and a.wall_timeout > 0 else None,
        weights=CostWeights(a.w_rot, a.w_len, a.w_clear, a.w_ur, a.w_center),
    )


def _weights_given(a) -> bool:
    d = EngineConfig().weights
    return (a.w_rot, a.w_len, a.w_clear, a.w_ur, a.w_center) != (
        d.w_rot, d.w_len, d.w_clear, d.w_ur, d.w_center)


def _load(a) -> Scenario:
    sc = Scenario.load(a.scenario)
    if _weights_given(a):
        # flags override the weights stored in the file
        sc = replace(sc, weights=_config(a).weights)
    return sc


def cmd_gen(a) -> int:
    try:
        sc = generate_scenario(_params(a), a.seed)
    except GenerationError as e:
        print(f"generation failed: {e}", file=sys.stderr)
        return 3
    out = a.out or os.path.join(output_dir(), f"scenario_{a.seed}.json")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    sc.save(out)
    print(out)
    return 0


def cmd_synth(a) -> int:
    sc = _load(a)
    cfg = _config(a)
    model = sc.model_map()
    t = time.perf_counter()
    g = build_game(model, cfg.grid, cfg.kin, sc.insertion,
                   sweep_margin=cfg.sweep_margin, goal_margin=cfg.goal_margin)
    st = attractor(g)
    dt = time.perf_counter() - t
    win = g.start == g.GOAL or st.is_winning(g.start)
    line = f"states={g.n_states} winning={int(st.winning[:g.n_states].sum())} start_winning={win} synth={dt:.3f}s"
    if win and g.start != g.GOAL:
        plans = [with_metrics(p, model) for p in extract_plans(st, g.start, cfg.max_plans, sc.insertion)]
        best = select_plan(plans, sc.weights or cfg.weights, model, cfg.clearance_target)
        line += f" plans={len(plans)} best_actions={len(best.actions)} best_rotations={best.metrics.rotations}"
    print(line)
    if a.dump:
        with open(a.dump, "w") as fh:
            json.dump(dump_game(g, st), fh)
    return 0 if win else 1


def cmd_run(a) -> int:
    sc = _load(a)
    cfg = _config(a)
    res = run_episode(sc, cfg, a.seed)
    print(res.summary() + (f" reason={res.reason}" if res.reason else ""))
    if a.trace:
        write_log_csv(res.plant_log, a.trace)
    if a.svg:
        with open(a.svg, "w") as fh:
            fh.write(render_trace(res, sc, res.initial_plans))
    return res.outcome.exit_code


def cmd_batch(a) -> int:
    sweep = default_sweep()
    if a.axis:
        sweep = [s for s in sweep if s[0] in a.axis]
    cfg = _config(a)
    out = a.out or output_dir()
    os.makedirs(out, exist_ok=True)

    def progress(row):
        if a.verbose:
            print(f"{row.param_axis}={row.param_value} seed={row.seed} {row.outcome}", file=sys.stderr)

    res = run_batch(sweep, a.runs, a.base_seed, cfg, jobs=a.jobs, progress=progress)
    with open(os.path.join(out, "episodes.csv"), "w") as fh:
        fh.write(res.to_csv())
    with open(os.path.join(out, "table.csv"), "w") as fh:
        fh.write(res.table.to_csv())
    print(res.table.to_csv(), end="")
    if res.generation_errors:
        print(f"generation errors: {res.generation_errors}", file=sys.stderr)
    return 0


def cmd_render(a) -> int:
    sc = _load(a)
    res = None if a.no_run else run_episode(sc, _config(a), a.seed)
    svg = render_trace(res, sc, res.initial_plans if res else None)
    out = a.out or os.path.join(output_dir(), f"episode_{sc.seed}_{a.seed}.svg")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    with open(out, "w") as fh:
        fh.write(svg)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onss", description="online strategy synthesis for needle steering")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate a random scenario file")
    _scenario_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("synth", help="synthesize on the scenario's initial knowledge")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dump", help="write the game and winning region as JSON")
    _engine_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run one episode")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="CSV of plant samples")
    p.add_argument("--svg", help="SVG rendering of the episode")
    _engine_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run the parameter sweep")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--axis", action="append", choices=list(AXES))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    _engine_args(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("render", help="run an episode and write its SVG")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-run", action="store_true", help="draw the scenario only")
    p.add_argument("--out")
    _engine_args(p)
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except OnssError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
