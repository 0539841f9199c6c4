import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from lbo.scenarios.hand import (
    DOWN,
    FINGERS,
    INACTIVE,
    RESET,
    UP,
    HandEnv,
    HandState,
    NumberSource,
    OutOfRange,
    apply_finger_actions,
    expert_policy,
    finger_action,
    hand_expert_actions,
    hand_target,
    make_sequences,
    source_reset,
    source_step,
)
from lbo.scenarios.mountain import (
    MountainState,
    PhysicsParams,
    at_goal,
    mountain_expert_action,
    mountain_step,
    run_attempt,
)
from lbo.scenarios.qlearning import QLearner, QParams, QTable, q_select, q_update

ALL_HANDS = [HandState(*vals) for vals in itertools.product((UP, DOWN), repeat=5)]

# frozen from an independent re-implementation of the standard dynamics
EXPERT_STEPS = 167
EXPERT_DISTANCE = 4.626460791576853


def up(*names):
    return HandState(**{f: (UP if f in names else DOWN) for f in FINGERS})


class TestHandTarget:
    def test_two(self):
        assert hand_target(2) == up("index", "middle")

    def test_five(self):
        assert hand_target(5) == up(*FINGERS)

    def test_one(self):
        assert hand_target(1) == up("index")

    @pytest.mark.parametrize("n", [0, 6, -1, 2.0])
    def test_out_of_range(self, n):
        with pytest.raises(OutOfRange):
            hand_target(n)


class TestExpertActions:
    def test_two_to_one(self):
        assert hand_expert_actions(hand_target(2), 1) == [finger_action("middle", False)]

    def test_four_to_one(self):
        assert hand_expert_actions(hand_target(4), 1) == [
            finger_action("middle", False),
            finger_action("ring", False),
            finger_action("pinky", False),
        ]

    def test_already_shown(self):
        assert hand_expert_actions(hand_target(3), 3) == []

    @pytest.mark.parametrize("hand", ALL_HANDS, ids=str)
    @pytest.mark.parametrize("n", range(1, 6))
    def test_minimal_and_correct(self, hand, n):
        moves = hand_expert_actions(hand, n)
        assert apply_finger_actions(hand, moves) == hand_target(n)
        # brute force: no shorter set of single-finger moves reaches the target
        every_move = [finger_action(f, u) for f in FINGERS for u in (True, False)]
        shortest = next(
            k
            for k in range(6)
            if any(apply_finger_actions(hand, combo) == hand_target(n) for combo in itertools.combinations(every_move, k))
        )
        assert len(moves) == shortest
        hamming = sum(getattr(hand, f) != getattr(hand_target(n), f) for f in FINGERS)
        assert len(moves) == hamming
        order = [FINGERS.index(m.designation.split("-")[1]) for m in moves]
        assert order == sorted(order)


class TestNumberSource:
    def test_runs_out(self):
        s = NumberSource([3, 1])
        assert source_step(s) == 3
        assert source_step(s) == 1
        assert s.status == INACTIVE
        assert source_step(s) is None

    def test_reset_restarts(self):
        s = NumberSource([3, 1])
        source_step(s)
        source_reset(s)
        assert s.cursor == 0 and source_step(s) == 3

    def test_reset_idempotent(self):
        a, b = NumberSource([3, 1, 2]), NumberSource([3, 1, 2])
        source_step(a), source_step(b)
        source_reset(a)
        source_reset(b), source_reset(b)
        assert (a.cursor, a.status) == (b.cursor, b.status)

    def test_rejects_bad_numbers(self):
        with pytest.raises(OutOfRange):
            NumberSource([1, 7])


class TestHandEnv:
    def test_expert_cycle(self):
        env = HandEnv(NumberSource([2, 1]))
        shown = []
        for _ in range(6):
            a = env.expert_action()
            assert env.execute(a)
            shown.append(env.hand.shown_number())
        # 2, 1, reset (hand keeps 1), 2, 1, reset
        assert shown == [2, 1, 1, 2, 1, 1]

    def test_composite_for_several_fingers(self):
        env = HandEnv(NumberSource([3]))
        a = env.expert_action()
        assert a.designation == "raise-index+raise-middle+raise-ring"
        assert not a.is_simple

    def test_failed_move_rolls_back_and_skips_number(self):
        env = HandEnv(NumberSource([2, 4, 1]))
        before = env.hand
        assert not env.execute(finger_action("thumb", True))
        assert env.hand == before
        assert env.pending == 4

    def test_reset_while_active_fails(self):
        env = HandEnv(NumberSource([2, 4, 1]))
        assert not env.execute(RESET)
        assert env.pending == 4

    def test_move_without_number_fails(self):
        env = HandEnv(NumberSource([2]))
        assert env.execute(env.expert_action())
        assert env.pending is None
        assert not env.execute(finger_action("thumb", True))
        assert env.expert_action() == RESET

    def test_policy_matches_env(self):
        env = HandEnv(NumberSource([5, 2, 3]))
        for _ in range(10):
            assert expert_policy(env.conditions()) == env.expert_action()
            env.execute(env.expert_action())

    def test_already_shown_number_is_skipped(self):
        env = HandEnv(NumberSource([1, 2]))
        env.execute(env.expert_action())
        env.execute(env.expert_action())
        env.execute(RESET)
        # after the reset the source restarts at 1, which is not on the hand (2 is)
        assert env.pending == 1
        env2 = HandEnv(NumberSource([2, 1]))
        env2.execute(env2.expert_action())
        env2.execute(env2.expert_action())
        env2.execute(RESET)
        assert env2.pending == 2


class TestSequences:
    def test_exp1_identical(self):
        seqs = make_sequences("exp1", 6, random.Random(1))
        assert all(s == seqs[0] for s in seqs)
        assert 8 <= len(seqs[0]) <= 16

    def test_exp2_distinct_lengths(self):
        seqs = make_sequences("exp2", 6, random.Random(1))
        assert len({len(s) for s in seqs}) == 6
        assert all(8 <= len(s) <= 16 for s in seqs)

    def test_exp2_too_many(self):
        with pytest.raises(ValueError):
            make_sequences("exp2", 10, random.Random(1))

    @given(st.integers(0, 2**32), st.integers(1, 40))
    def test_no_back_to_back_repeats(self, seed, n):
        from lbo.scenarios.hand import random_sequence

        seq = random_sequence(random.Random(seed), n)
        assert all(a != b for a, b in zip(seq, seq[1:]))
        assert all(1 <= x <= 5 for x in seq)


class TestMountain:
    def test_valley_rest(self):
        x = -math.pi / 6
        st_ = mountain_step(MountainState(x, 0.0), 0)
        assert st_.velocity == pytest.approx(0.0, abs=1e-18)
        assert st_.position == pytest.approx(x)

    def test_push_at_origin(self):
        assert mountain_step(MountainState(0.0, 0.0), 1).velocity == pytest.approx(-0.0015)

    def test_goal(self):
        assert at_goal(MountainState(0.5, 0.0)) and not at_goal(MountainState(0.49, 0.07))

    def test_left_wall_stops(self):
        st_ = mountain_step(MountainState(-1.19, -0.07), -1)
        assert st_.position == -1.2 and st_.velocity == 0.0

    def test_bad_thrust(self):
        with pytest.raises(ValueError):
            mountain_step(MountainState(0, 0), 2)

    @given(st.floats(-1.2, 0.6), st.floats(-0.07, 0.07), st.sampled_from([-1, 0, 1]))
    def test_bounds(self, x, v, a):
        p = PhysicsParams()
        st_ = mountain_step(MountainState(x, v), a, p)
        assert p.x_min <= st_.position <= p.x_max
        assert -p.v_max <= st_.velocity <= p.v_max

    def test_expert_policy(self):
        assert mountain_expert_action(MountainState(0, 0.01)) == 1
        assert mountain_expert_action(MountainState(0, -0.01)) == -1
        assert mountain_expert_action(MountainState(-0.5, 0.0)) == -1

    def test_expert_fixture(self):
        res = run_attempt(mountain_expert_action)
        assert res.reached_goal
        assert res.steps == EXPERT_STEPS
        assert res.distance == pytest.approx(EXPERT_DISTANCE, rel=1e-12)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            PhysicsParams(goal_position=0.7)


class TestQLearning:
    p = QParams(alpha=0.2, gamma=0.9, decay=1.0)

    def test_zero_target(self):
        Q = QTable(4)
        q_update(Q, 0, 1, 0.0, 2, self.p, 0)
        assert Q[0] == [0.0, 0.0, 0.0]

    def test_goal_reward(self):
        Q = QTable(4)
        q_update(Q, 0, 1, 1.0, 2, self.p, 0, terminal=True)
        assert Q[0][1] == pytest.approx(0.2)

    def test_bootstrap(self):
        Q = QTable(4)
        Q[0][0] = 0.1
        Q[1][2] = 0.5
        q_update(Q, 0, 0, 0.0, 1, self.p, 0)
        assert Q[0][0] == pytest.approx(0.17)

    def test_alpha_decays(self):
        Q = QTable(2)
        q_update(Q, 0, 0, 1.0, 1, QParams(decay=0.5), 2, terminal=True)
        assert Q[0][0] == pytest.approx(0.05)

    def test_greedy(self):
        Q = QTable(1)
        Q[0][:] = [0.1, 0.5, 0.2]
        assert q_select(Q, 0, random.Random(0), 0.0) == 1

    def test_tie_lowest_index(self):
        assert q_select(QTable(1, 0.3), 0, random.Random(0), 0.0) == 0

    def test_uniform_when_exploring(self):
        rng = random.Random(5)
        draws = [q_select(QTable(1), 0, rng, 1.0) for _ in range(3000)]
        counts = [draws.count(i) for i in range(3)]
        assert all(900 < c < 1100 for c in counts)

    def test_eventual_success(self):
        learner = QLearner(QParams(), PhysicsParams(), seed=0)
        assert any(learner.run_attempt().reached_goal for _ in range(1000))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            QParams(gamma=1.0)
