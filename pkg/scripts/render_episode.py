"""Generate one scenario, run it and write the SVG next to the scenario file.

    python3 scripts/render_episode.py --seed 7 --n-crs 10 --known-pct 40
"""

import argparse
import os

from onss.engine import EngineConfig, run_episode
from onss.harness import generate_scenario, output_dir
from onss.render import render_trace
from onss.scenario import ScenarioParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-crs", type=int, default=5)
    ap.add_argument("--known-pct", type=int, default=0)
    ap.add_argument("--out", default=output_dir())
    args = ap.parse_args()
    sc = generate_scenario(ScenarioParams(n_crs=args.n_crs, known_pct=args.known_pct), args.seed)
    res = run_episode(sc, EngineConfig(), args.seed)
    os.makedirs(args.out, exist_ok=True)
    base = os.path.join(args.out, f"episode_{args.seed}")
    sc.save(base + ".json")
    with open(base + ".svg", "w") as fh:
        fh.write(render_trace(res, sc, res.initial_plans, title=res.summary()))
    print(res.summary())
    print(base + ".svg")


if __name__ == "__main__":
    main()
