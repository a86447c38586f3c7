"""Acceptance criteria. Each test prints one PASS/FAIL line.

The sweep batch (580 episodes) and the 100-run default batch take several
minutes on one core.
"""

import itertools
import logging
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from onss.engine import EngineConfig, Outcome, run_episode
from onss.game import attractor, check_winning
from onss.harness import generate_scenario, output_dir, default_sweep, run_batch
from onss.scenario import ScenarioParams

from test_game import minimax_oracle, random_game

HERE = Path(__file__).resolve().parent
VALID = {o.value for o in Outcome}


def report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def sweep_batch():
    res = run_batch(default_sweep(), 20, base_seed=0)
    out = Path(output_dir()) / "acceptance"
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_episodes.csv").write_text(res.to_csv())
    (out / "sweep_table.csv").write_text(res.table.to_csv())
    return res


@pytest.fixture(scope="session")
def default_batch():
    return run_batch([("defaults", "defaults", ScenarioParams())], 100, base_seed=1000)


def test_global_safety(sweep_batch, capsys):
    eps = [r for r in sweep_batch.episodes if r.generated]
    bad = sum(r.violations for r in eps)
    report(capsys, "global safety", len(eps) >= 500 and bad == 0,
           f"{len(eps)} episodes, {bad} true-trace samples inside true CRs")


def test_solver_oracle_equivalence(capsys):
    mismatches = failed_checks = 0
    n_games = 100
    for seed in range(n_games):
        rng = np.random.default_rng(10_000 + seed)
        g = random_game(rng, int(rng.integers(10, 2001)))
        st = attractor(g)
        val = minimax_oracle(g)
        if st.winning_states() != {i for i in range(g.n_states) if val[i] < float("inf")}:
            mismatches += 1
        for s in sorted(st.winning_states())[:100]:
            if not check_winning(st, g, s):
                failed_checks += 1
                break
    report(capsys, "solver oracle equivalence", mismatches == 0 and failed_checks == 0,
           f"{n_games} games, {mismatches} winning-region mismatches, {failed_checks} failed verifications")


def test_zero_cr_baseline(capsys):
    cfg = EngineConfig()
    succ = readj = 0
    runs = 50
    for seed in range(runs):
        sc = generate_scenario(ScenarioParams(n_crs=0), seed)
        res = run_episode(sc, cfg, seed)
        succ += res.outcome is Outcome.SUCCESS
        readj += res.readjustments
    report(capsys, "zero-CR baseline", succ == runs and readj == 0,
           f"success {succ}/{runs}, readjustments {readj}")


def test_default_calibration(default_batch, capsys):
    m = default_batch.table.rows[0]
    ok = 70.0 <= m.success_rate <= 95.0 and m.readjustments[1] <= 3.0
    report(capsys, "default calibration", ok,
           f"success {m.success_rate:.1f}% over {m.runs} runs, readjustments (min,avg,max) "
           f"({m.readjustments[0]:.0f},{m.readjustments[1]:.2f},{m.readjustments[2]:.0f})")


def test_synthesis_latency(sweep_batch, default_batch, capsys):
    times = [t for b in (sweep_batch, default_batch) for r in b.episodes for t in r.synthesis_times]
    mx, avg = max(times), sum(times) / len(times)
    report(capsys, "synthesis latency", mx <= 7.0 and avg <= 3.0,
           f"{len(times)} syntheses, max {mx:.3f}s, avg {avg:.3f}s")


def test_termination(sweep_batch, capsys, caplog):
    eps = [r for r in sweep_batch.episodes if r.generated]
    classified = all(r.outcome in VALID for r in eps)
    over = sum(r.step_budget_exceeded for r in eps)
    # the two-minute rule, driven by a fake clock that advances 50s per reading
    ticks = itertools.count(0.0, 50.0)
    sc = generate_scenario(ScenarioParams(), 0)
    with caplog.at_level(logging.INFO, logger="onss.engine"):
        res = run_episode(sc, EngineConfig(), 0, clock=lambda: next(ticks))
    timed = (EngineConfig().wall_timeout == 120.0 and res.outcome is Outcome.TIMEOUT
             and "timed out" in caplog.text)
    counts = {o: sum(r.outcome == o for r in eps) for o in sorted(VALID)}
    report(capsys, "termination", classified and over == 0 and timed,
           f"{len(eps)} episodes classified {counts}, {over} over step budget, "
           f"120s timeout enforced and logged: {timed}")


def test_sweep_shape(sweep_batch, capsys):
    n_points = len(sweep_batch.table.rows)
    n_rows = len(sweep_batch.episodes)
    report(capsys, "sweep shape", n_points == 29 and n_rows == 580,
           f"{n_points} parametrizations, {n_rows} episode rows "
           f"({sweep_batch.generation_errors} generation errors)")


def test_property_suites_standalone(capsys):
    files = sorted(str(p) for p in HERE.glob("test_*.py") if p.name != "test_acceptance.py")
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
                          cwd=HERE.parent, capture_output=True, text=True, env=env)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(capsys, "property suites", proc.returncode == 0, f"{len(files)} modules: {tail}")
