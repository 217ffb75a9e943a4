"""Acceptance criteria, one test each, at the stated scale and tolerance.

Each test prints a single ``[ACCEPT n] PASS|FAIL`` line with the measured
values before asserting.  Heavy simulations are cached per module so the
speed and monotonicity criteria share the 0.25 voter cell.
"""

import filecmp
import shutil
import subprocess
import sys
import time
import warnings
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from evoperc import seeding
from evoperc.arena import Color, TileGrid, problem_difficulty
from evoperc.cli import main
from evoperc.evolution import EvoConfig, fitness_hb, fitness_ms, fitness_ts, run_evolution
from evoperc.mechanisms import EvolvedANN, MajorityRule, PredictionLog, VoterModel
from evoperc.metrics import (
    BENCHMARK_DIFFICULTIES,
    aggregate,
    bootstrap_order_confidence,
    records_from_result,
    run_benchmark,
)
from evoperc.simulation import Scenario, simulate_many

pytestmark = pytest.mark.slow

RUNS = 200
LENGTH = 400.0
EVO_SEEDS = (1, 2, 3)
TESTS = Path(__file__).parent


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[ACCEPT {number}] {'PASS' if ok else 'FAIL'}  {detail}")


def grid_with_black(count):
    cells = np.array([0] * count + [1] * (400 - count), dtype=np.uint8).reshape(20, 20)
    return TileGrid(cells)


# -- 1 ---------------------------------------------------------------------


def test_criterion_1_exact_math(capsys):
    start = time.perf_counter()
    checks = {}
    for black, ratio in ((80, 80 / 320), (136, 136 / 264), (160, 160 / 240), (180, 180 / 220)):
        got = problem_difficulty(grid_with_black(black))
        checks[f"rho*({black}/400)"] = abs(got - ratio) <= 1e-12
    labels = [round(problem_difficulty(grid_with_black(b)), 2) for b in (80, 136, 160, 180)]
    checks["labels"] = labels == list(BENCHMARK_DIFFICULTIES)
    checks["F_TS 13/20"] = abs(fitness_ts([0] * 13 + [1] * 7, Color.BLACK) - 0.65) <= 1e-12
    log = PredictionLog()
    log.record([0, 0, 0], [1.0, 0.0, 0.5])
    log.record([1.0, 0.0, 0.0], [0, 0, 0])
    checks["F_MS hand"] = abs(fitness_ms([log]) - 2.5 / 3) <= 1e-12
    checks["F_HB(0.2, 1)"] = abs(fitness_hb(0.2, 1.0, 2.0) - 0.6) <= 1e-12
    for f_ms in np.linspace(0, 1, 11):
        checks[f"F_HB TS=1 ms={f_ms:.1f}"] = abs(fitness_hb(1.0, f_ms, 2.0) - f_ms) <= 1e-12
        checks[f"F_HB TS=0 ms={f_ms:.1f}"] = abs(fitness_hb(0.0, f_ms, 2.0) - f_ms / 2) <= 1e-12
    elapsed = time.perf_counter() - start
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and elapsed < 1.0
    report(capsys, 1, ok, f"{len(checks)} exact checks, failed={failed}, {elapsed:.3f} s")
    assert not failed
    assert elapsed < 1.0


# -- 2 ---------------------------------------------------------------------


def _invoke_all(out: Path, genome: Path | None = None):
    cfg = out.parent / "short-config.txt"
    cfg.write_text("# evoperc-config v1\nevaluation_length = 20.0\nevaluations_per_genome = 2\n")
    assert main(["evolve", "--config", str(cfg), "--population", "3", "--generations", "2", "--seed", "21",
                 "--out-dir", str(out / "evolve")]) == 0
    assert main(["benchmark", "--mechanisms", f"voter,majority,ann:{out / 'evolve' / 'best.genome'}",
                 "--difficulty", "0.25,0.82", "--runs", "4", "--length", "60", "--seed", "21",
                 "--out-dir", str(out / "bench")]) == 0
    assert main(["replay", "--mechanism", "voter", "--difficulty", "0.52", "--run", "2", "--length", "30",
                 "--seed", "21", "--out-dir", str(out / "replay")]) == 0


def test_criterion_2_determinism(tmp_path, capsys):
    start = time.perf_counter()
    # same paths both times: genome paths end up in mechanism labels
    out, a = tmp_path / "out", tmp_path / "first"
    _invoke_all(out)
    shutil.move(out, a)
    _invoke_all(out)
    b = out
    csvs = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    genomes = sorted(p.relative_to(a) for p in a.rglob("*.genome"))
    differing = [str(p) for p in csvs + genomes if not filecmp.cmp(a / p, b / p, shallow=False)]
    ok = len(csvs) >= 6 and not differing
    report(capsys, 2, ok, f"{len(csvs)} CSVs + {len(genomes)} genomes compared, differing={differing}, "
                          f"{time.perf_counter() - start:.1f} s")
    assert len(csvs) >= 6
    assert not differing


# -- 3 and 4 -----------------------------------------------------------------


@pytest.fixture(scope="module")
def voter_cells():
    result = run_benchmark([VoterModel(), MajorityRule()], (0.25,), RUNS, LENGTH)
    rest = run_benchmark([VoterModel()], BENCHMARK_DIFFICULTIES[1:], RUNS, LENGTH)
    cells = {("voter", 0.25): result.cell("voter", 0.25), ("majority", 0.25): result.cell("majority", 0.25)}
    for d in BENCHMARK_DIFFICULTIES[1:]:
        cells[("voter", d)] = rest.cell("voter", d)
    return cells


def test_criterion_3_speed_accuracy(voter_cells, capsys):
    vm, mr = aggregate(voter_cells[("voter", 0.25)]), aggregate(voter_cells[("majority", 0.25)])
    faster = mr.t_bar is not None and vm.t_bar is not None and mr.t_bar < vm.t_bar
    accurate = vm.e_n >= mr.e_n and vm.e_n >= 95.0
    report(capsys, 3, faster and accurate,
           f"rho*=0.25, {RUNS} runs: VM T={vm.t_bar:.1f} s E={vm.e_n:.1f} %; MR T={mr.t_bar:.1f} s E={mr.e_n:.1f} %")
    assert faster, "majority rule should be faster than the voter model"
    assert vm.e_n >= mr.e_n
    assert vm.e_n >= 95.0


def test_criterion_4_difficulty_monotonicity(voter_cells, capsys):
    cells = [voter_cells[("voter", d)] for d in BENCHMARK_DIFFICULTIES]
    rows = [aggregate(c) for c in cells]
    t = [r.t_bar for r in rows]
    e = [r.e_n for r in rows]
    conf_t = bootstrap_order_confidence(cells, "t_bar", increasing=True)
    conf_e = bootstrap_order_confidence(cells, "e_n", increasing=False)
    point_t = all(b > a for a, b in zip(t, t[1:]))
    point_e = all(b < a for a, b in zip(e, e[1:]))
    ok = conf_t >= 0.95 and conf_e >= 0.95
    report(capsys, 4, ok,
           f"T={['%.1f' % v for v in t]} (ordered {point_t}, bootstrap {conf_t:.3f}); "
           f"E={['%.1f' % v for v in e]} (ordered {point_e}, bootstrap {conf_e:.3f}); need >= 0.95")
    assert conf_t >= 0.95, f"T_bar ordering bootstrap confidence {conf_t:.3f}"
    assert conf_e >= 0.95, f"E_N ordering bootstrap confidence {conf_e:.3f}"


# -- 5 and 6 -----------------------------------------------------------------


def desk_config(kind, difficulty):
    return EvoConfig(population_size=20, max_generations=80, evaluations_per_genome=6,
                     evaluation_length=200.0, fitness_kind=kind, difficulty=difficulty)


def fresh_scenarios(master, difficulty, per_color):
    out = []
    for k in range(per_color):
        for color in (Color.BLACK, Color.WHITE):
            seed = seeding.derive_seed(master, seeding.VALIDATION, int(color), k)
            out.append(Scenario.from_seed(difficulty, color, seed))
    return out


def validate(genome, scenarios, difficulty, length=LENGTH):
    result = simulate_many(scenarios, EvolvedANN(genome), length)
    return records_from_result(result, scenarios, "evolved", difficulty)


def test_criterion_5_evolution_ts(capsys):
    runs = [run_evolution(desk_config("TS", 0.25), s) for s in EVO_SEEDS]
    finals = [r.best_fitness for r in runs]
    reached = sum(f >= 1.0 for f in finals)
    best = max(range(len(runs)), key=lambda k: finals[k])
    records = validate(runs[best].best_genome, fresh_scenarios(EVO_SEEDS[best], 0.25, 25), 0.25)
    e_n = 100.0 * sum(r.correct for r in records) / len(records)
    ok = reached >= 2 and e_n >= 80.0
    report(capsys, 5, ok, f"best fitness per seed {finals}, {reached}/3 reached 1.0; best genome "
                          f"(seed {EVO_SEEDS[best]}) E_N={e_n:.1f} % over {len(records)} fresh 400 s runs")
    assert reached >= 2
    assert e_n >= 80.0


def test_criterion_6_ms_degeneracy(capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        run = run_evolution(desk_config("MS", 0.52), EVO_SEEDS[0])
    records = validate(run.best_genome, fresh_scenarios(EVO_SEEDS[0], 0.52, 10), 0.52)
    reached = [r for r in records if r.consensus_color is not None]
    consensus = 100.0 * len(reached) / len(records)
    e_n = 100.0 * sum(r.correct for r in records) / len(records)
    colors = Counter(r.consensus_color for r in reached)
    fixed = 100.0 * colors.most_common(1)[0][1] / len(reached) if reached else 0.0
    ok = consensus >= 70 and 30 <= e_n <= 70 and fixed >= 80
    report(capsys, 6, ok, f"F_MS best {run.best_fitness:.4f}; consensus {consensus:.0f} %, E_N {e_n:.0f} %, "
                          f"same color in {fixed:.0f} % of consensus runs ({dict((c.name, n) for c, n in colors.items())})")
    assert consensus >= 70
    assert 30 <= e_n <= 70
    assert fixed >= 80


# -- 7 -----------------------------------------------------------------------

PROPERTY_SUITES = [
    "test_comms.py::test_queue_invariants",
    "test_motion.py::test_transitions_are_legal",
    "test_neural.py::test_decision_finite_differences",
    "test_evolution.py::test_streaming_prediction_score_matches_logs",
    "test_evolution.py::test_next_generation_elitism_and_size",
    "test_world.py::test_collision_non_penetration_hundred_thousand_steps",
]


def test_criterion_7_property_suites_standalone(capsys):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / s) for s in PROPERTY_SUITES]],
                          capture_output=True, text=True, cwd=TESTS.parent)
    elapsed = time.perf_counter() - start
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 60
    report(capsys, 7, ok, f"{len(PROPERTY_SUITES)} suites: {tail} ({elapsed:.1f} s)")
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert elapsed < 60
