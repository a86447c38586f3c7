"""Time game construction and solving on the default grid.

    python3 scripts/bench_synthesis.py --crs 0 5 20 --repeat 5
"""

import argparse
import statistics
import time

from onss.engine import EngineConfig
from onss.game import attractor, build_game
from onss.harness import generate_scenario
from onss.scenario import ScenarioParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--crs", type=int, nargs="+", default=[0, 5, 20])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cfg = EngineConfig()
    nx, ny = cfg.grid.shape
    print(f"grid {nx}x{ny} cells, {cfg.grid.headings} headings, "
          f"{nx * ny * cfg.grid.headings * 2} states")
    print("n_crs  build_s  solve_s  total_s  winning")
    for n in args.crs:
        # all CRs known so the game carries every obstacle
        sc = generate_scenario(ScenarioParams(n_crs=n, known_pct=100), 0)
        rows = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            g = build_game(sc.model_map(), cfg.grid, cfg.kin, sc.insertion,
                           sweep_margin=cfg.sweep_margin, goal_margin=cfg.goal_margin)
            t1 = time.perf_counter()
            st = attractor(g)
            t2 = time.perf_counter()
            rows.append((t1 - t0, t2 - t1, int(st.winning[:g.n_states].sum())))
        b = statistics.median(r[0] for r in rows)
        s = statistics.median(r[1] for r in rows)
        print(f"{n:5d}  {b:7.3f}  {s:7.3f}  {b + s:7.3f}  {rows[0][2]}")


if __name__ == "__main__":
    main()
