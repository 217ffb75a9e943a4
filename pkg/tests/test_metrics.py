import numpy as np
import pytest
from hypothesis import given, strategies as st

from evoperc.arena import Color
from evoperc.mechanisms import MajorityRule, VoterModel
from evoperc.metrics import (
    RunRecord,
    aggregate,
    benchmark_scenarios,
    bootstrap_order_confidence,
    consensus_time,
    run_benchmark,
    write_results,
    write_summary,
)

B, W = Color.BLACK, Color.WHITE


def trace_with_consensus_at(t, color=B, samples=60, n=20):
    trace = np.tile(np.array([0, 1] * (n // 2), dtype=np.uint8), (samples, 1))
    trace[t:] = int(color)
    return trace


def test_consensus_time_first_unanimous_sample():
    assert consensus_time(trace_with_consensus_at(37)) == (37.0, B)
    assert consensus_time(trace_with_consensus_at(5, W), times=np.arange(60) * 2.0) == (10.0, W)


def test_consensus_time_transient_still_counts():
    trace = trace_with_consensus_at(10)
    trace[12:, 0] = 1
    assert consensus_time(trace) == (10.0, B)


def test_consensus_time_none():
    trace = np.tile(np.array([0, 1] * 10, dtype=np.uint8), (30, 1))
    assert consensus_time(trace) is None


def rec(t, color, mech="voter", d=0.25):
    return RunRecord(mech, d, 0, t, color)


def test_aggregate_examples():
    rows = aggregate([rec(10.0, B), rec(20.0, W), rec(None, None)])
    assert rows.t_bar == pytest.approx(15.0)
    assert rows.e_n == pytest.approx(100 / 3)
    assert rows.runs == 3
    empty = aggregate([rec(None, None)])
    assert empty.t_bar is None and empty.e_n == 0.0


def test_aggregate_rejects_mixed_cells():
    with pytest.raises(ValueError):
        aggregate([rec(1.0, B), rec(1.0, B, mech="majority")])
    with pytest.raises(ValueError):
        RunRecord("voter", 0.25, 0, 3.0, None)


outcomes = st.lists(st.tuples(st.one_of(st.none(), st.floats(0, 400)), st.sampled_from([B, W])),
                    min_size=1, max_size=30)


def to_records(items):
    return [rec(t, None if t is None else c) for t, c in items]


@given(outcomes, st.randoms())
def test_aggregate_permutation_invariant(items, random):
    records = to_records(items)
    shuffled = records[:]
    random.shuffle(shuffled)
    a, b = aggregate(records), aggregate(shuffled)
    assert a.t_bar == b.t_bar and a.e_n == b.e_n


@given(outcomes)
def test_more_correct_runs_never_lower_exit_probability(items):
    records = to_records(items)
    better = [rec(r.consensus_time if r.consensus_time is not None else 1.0, B) for r in records]
    assert aggregate(better).e_n >= aggregate(records).e_n
    assert 0 <= aggregate(records).e_n <= 100


def test_benchmark_shares_scenarios_across_mechanisms():
    result = run_benchmark([VoterModel(), MajorityRule()], (0.52,), runs_per_cell=3, run_length=20.0)
    a, b = result.cell("voter", 0.52), result.cell("majority", 0.52)
    assert [r.seed for r in a] == [r.seed for r in b]
    assert [s.seed for s in benchmark_scenarios(0, 0.52, 3)] == [r.seed for r in a]
    assert all(s.majority == B for s in benchmark_scenarios(0, 0.82, 4))
    assert len(result.summary) == 2
    assert result.row("majority", 0.52).runs == 3


def test_bootstrap_order_confidence():
    fast = [rec(10.0 + k % 3, B) for k in range(50)]
    slow = [rec(100.0 + k % 3, B) for k in range(50)]
    assert bootstrap_order_confidence([fast, slow], "t_bar", increasing=True) == 1.0
    assert bootstrap_order_confidence([fast, slow], "t_bar", increasing=False) == 0.0
    same = [rec(10.0, B)] * 20
    assert bootstrap_order_confidence([same, same], "e_n", increasing=False) == 0.0
    with pytest.raises(ValueError):
        bootstrap_order_confidence([same], "median", increasing=True)


def test_csv_formats(tmp_path):
    records = [RunRecord("voter", 0.25, 17, 37.0, B), RunRecord("voter", 0.25, 18, None, None)]
    write_results(records, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines == [
        "mechanism,difficulty,seed,consensus_time_s,consensus_color,correct",
        "voter,0.25,17,37,BLACK,true",
        "voter,0.25,18,NA,NA,false",
    ]
    write_summary([aggregate(records)], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[1] == "voter,0.25,2,37,50"
    write_summary([aggregate(records[1:])], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[1] == "voter,0.25,1,NA,0"
