from dataclasses import replace

import pytest

from lbo.evaluation import EvalConfig, Phase
from lbo.harness import (
    HAND_COLUMNS,
    ConfigError,
    HandConfig,
    MountainConfig,
    SimConfig,
    simulate_hand,
    simulate_mountain,
    sweep_pairs,
    sweep_thresholds,
    write_metrics,
)
from lbo.learners import recall_propose
from lbo.memory import discover_reference_experience
from lbo.metrics import bucket_rows
from lbo.scenarios.hand import expert_policy

SHORT = SimConfig(hand=HandConfig(steps=400))


@pytest.fixture(scope="module")
def exp1_run():
    return simulate_hand(SHORT)


@pytest.fixture(scope="module")
def exp2_run():
    return simulate_hand(replace(SHORT, hand=HandConfig("exp2", 600)))


class TestEventLog:
    @pytest.mark.parametrize("run", ["exp1_run", "exp2_run"])
    def test_no_execution_while_learning_no_storing_while_executing(self, run, request):
        res = request.getfixturevalue(run)
        for ev in res.events:
            if ev.kind == "execute":
                assert ev.phase is Phase.EXECUTION
            if ev.kind == "store":
                assert ev.phase is Phase.LEARNING

    @pytest.mark.parametrize("run", ["exp1_run", "exp2_run"])
    def test_phase_changes_have_a_cause(self, run, request):
        res = request.getfixturevalue(run)
        changes = [r for r in zip(res.rows, res.rows[1:]) if r[0]["phase"] != r[1]["phase"]]
        causes = [ev for ev in res.events if ev.kind == "phase"]
        assert len(changes) == len(causes)
        assert {ev.detail for ev in causes} <= {"upper", "lower", "unfamiliar"}

    def test_one_row_per_step(self, exp1_run):
        assert [r["step"] for r in exp1_run.rows] == list(range(400))


class TestHandRuns:
    def test_exp1_learns_then_executes_correctly(self, exp1_run):
        assert exp1_run.rows[0]["phase"] == "Learning"
        assert 0 < exp1_run.initial_learning_steps < 400
        assert exp1_run.correct_rate == 1.0

    def test_exp1_sequence_fidelity(self, exp1_run):
        # the observed expert sequence, replayed through recall, predicts each next action
        app = exp1_run.apprentice
        observed = [ev for ev in app.events if ev.kind == "store"]
        assert observed
        _, dyn = app.index.lookup(app.previous_expert)
        snaps = [s for s in dyn.history()][: len(observed)]
        mem = app.memory
        for prev, nxt in zip(snaps, snaps[1:]):
            ref = discover_reference_experience(mem, prev.conditions, prev.action)
            assert recall_propose(mem, ref, nxt.conditions)[0].action == nxt.action

    def test_correct_flag_uses_expert_oracle(self, exp2_run):
        # recompute the flag from the apprentice's own published snapshots
        _, dyn = exp2_run.apprentice.index.lookup("apprentice")
        executed = exp2_run.executed_rows()
        for row, snap in zip(executed[-len(dyn.history()):], dyn.history()):
            assert row["correct"] == (snap.action == expert_policy(snap.conditions))

    def test_same_seed_same_rows(self):
        a = simulate_hand(replace(SHORT, hand=HandConfig("exp2", 300), seed=3))
        b = simulate_hand(replace(SHORT, hand=HandConfig("exp2", 300), seed=3))
        assert a.rows == b.rows

    def test_zero_steps_rejected(self):
        with pytest.raises(ConfigError):
            simulate_hand(replace(SHORT, hand=HandConfig(steps=0)))

    def test_apprentice_switches_expert(self):
        res = simulate_hand(replace(SHORT, hand=HandConfig("exp2", 1500), seed=1))
        observed = [ev.detail for ev in res.events if ev.kind == "observe"]
        assert len(observed) > 1
        assert all(a != b for a, b in zip(observed, observed[1:]))


class TestMountainRuns:
    def test_expert_constant(self):
        res = simulate_mountain(SimConfig("mountain", mountain=MountainConfig("expert", 3)))
        assert {(r["steps_in_attempt"], r["reached_goal"]) for r in res.rows} == {(167, True)}

    def test_lbo_first_execution_succeeds(self):
        res = simulate_mountain(SimConfig("mountain", mountain=MountainConfig("lbo", 3)))
        execs = res.attempts_of("Execution")
        assert execs and execs[0]["reached_goal"]

    def test_rl_needs_several_attempts(self):
        res = simulate_mountain(SimConfig("mountain", mountain=MountainConfig("rl", 50)))
        assert not res.rows[0]["reached_goal"]

    @pytest.mark.parametrize("field,value", [("attempts", 0), ("max_steps", 0), ("agent", "robot")])
    def test_validation(self, field, value):
        with pytest.raises(ConfigError):
            simulate_mountain(SimConfig("mountain", mountain=replace(MountainConfig(), **{field: value})))


class TestSweep:
    def test_pairs_from_gaps(self):
        assert sweep_pairs([0, 10], gaps=[1, 5]) == [(0, 1), (0, 5), (10, 11), (10, 15)]

    def test_pairs_cross(self):
        assert sweep_pairs([0], uppers=[5, 6]) == [(0, 5), (0, 6)]

    def test_need_exactly_one(self):
        with pytest.raises(ConfigError):
            sweep_pairs([0], uppers=[1], gaps=[1])
        with pytest.raises(ConfigError):
            sweep_pairs([])

    def test_single_cell_and_invalid_cell(self, tmp_path):
        base = replace(SHORT, hand=HandConfig(steps=150), out=str(tmp_path / "s.csv"))
        rows = sweep_thresholds(base, [(10, 15), (10, 10)])
        assert len(rows) == 2
        assert rows[0]["status"] == "ok" and rows[0]["total_executed"] > 0
        assert rows[1]["status"].startswith("skipped")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "lower,upper,total_correct_actions,initial_learning_steps,total_executed,status"
        assert len(lines) == 3


class TestWriteMetrics:
    def test_header_only(self, tmp_path):
        p = tmp_path / "m.csv"
        write_metrics([], p, HAND_COLUMNS)
        assert p.read_bytes() == (",".join(HAND_COLUMNS) + "\n").encode()

    def test_one_row_and_overwrite(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("junk\njunk\njunk\n")
        write_metrics([{"a": 1, "b": 0.5, "c": True}], p, ["a", "b", "c"])
        assert p.read_bytes() == b"a,b,c\n1,0.5,1\n"

    def test_rewrite_identical(self, tmp_path):
        rows = [{"a": 0.1 + 0.2, "b": None}]
        write_metrics(rows, tmp_path / "1.csv", ["a", "b"])
        write_metrics(rows, tmp_path / "2.csv", ["a", "b"])
        assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "2.csv").read_bytes()
        assert float((tmp_path / "1.csv").read_text().splitlines()[1].split(",")[0]) == 0.1 + 0.2

    def test_error_names_path(self, tmp_path):
        with pytest.raises(OSError, match="nowhere"):
            write_metrics([], tmp_path / "nowhere" / "m.csv", ["a"])


def test_buckets():
    rows = [{"step": i, "phase": "Learning" if i < 3 else "Execution", "correct": i % 2 == 0, "confidence": float(i)}
            for i in range(5)]
    b = bucket_rows(rows, 2, "step", ["step", "phase", "correct", "confidence"])
    assert [(x["first"], x["last"], x["rows"]) for x in b] == [(0, 1, 2), (2, 3, 2), (4, 4, 1)]
    assert b[1]["phases"] == "Execution=1;Learning=1"
    assert b[0]["correct"] == 0.5 and b[2]["confidence"] == 4.0


def test_eval_config_passed_through():
    cfg = replace(SHORT, eval=EvalConfig(5, 2, 0, 5), hand=HandConfig(steps=100))
    res = simulate_hand(cfg)
    assert res.initial_learning_steps < simulate_hand(replace(cfg, eval=EvalConfig())).initial_learning_steps
