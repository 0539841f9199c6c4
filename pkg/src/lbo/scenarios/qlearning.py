"""Tabular Q-learning baseline for the mountain car, rewarded only at the goal."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .mountain import MountainState, PhysicsParams, at_goal, mountain_step, start_state

ACTION_ORDER = (-1, 0, 1)


@dataclass(frozen=True)
class QParams:
    alpha: float = 0.2
    gamma: float = 0.9
    decay: float = 0.999
    bins: tuple[int, int] = (40, 40)
    epsilon: float = 0.3
    initial_q: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if len(self.bins) != 2 or min(self.bins) < 1:
            raise ValueError("bins must be two positive counts")


class QTable:
    def __init__(self, n_states: int, initial: float = 0.0):
        self.values = [[initial] * len(ACTION_ORDER) for _ in range(n_states)]

    def __getitem__(self, s: int) -> list[float]:
        return self.values[s]


def discretize(st: MountainState, q: QParams, p: PhysicsParams) -> int:
    nx, nv = q.bins
    i = int((st.position - p.x_min) / (p.x_max - p.x_min) * nx)
    j = int((st.velocity + p.v_max) / (2 * p.v_max) * nv)
    i = min(nx - 1, max(0, i))
    j = min(nv - 1, max(0, j))
    return i * nv + j


def schedule(base: float, decay: float, step: int) -> float:
    return base * decay**step


def q_update(Q: QTable, s: int, a: int, r: float, s2: int, p: QParams, step: int, terminal: bool = False) -> QTable:
    """One temporal-difference update; a is the index into ACTION_ORDER.

    Terminal transitions do not bootstrap from the next state.
    """
    alpha = schedule(p.alpha, p.decay, step)
    target = r if terminal else r + p.gamma * max(Q[s2])
    row = Q[s]
    row[a] += alpha * (target - row[a])
    return Q


def q_select(Q: QTable, s: int, rng: random.Random, eps_step: float) -> int:
    """Epsilon-greedy index; greedy ties go to the lowest index."""
    if rng.random() < eps_step:
        return rng.randrange(len(ACTION_ORDER))
    row = Q[s]
    return row.index(max(row))


@dataclass(frozen=True)
class RLAttempt:
    steps: int
    distance: float
    reached_goal: bool
    greedy_fraction: float


class QLearner:
    def __init__(self, params: QParams = QParams(), physics: PhysicsParams = PhysicsParams(), seed: int = 0):
        self.params = params
        self.physics = physics
        self.rng = random.Random(seed)
        nx, nv = params.bins
        self.Q = QTable(nx * nv, params.initial_q)
        self.attempts = 0

    def run_attempt(self, max_steps: int = 500) -> RLAttempt:
        p, phys = self.params, self.physics
        k = self.attempts
        eps = schedule(p.epsilon, p.decay, k)
        st = start_state(phys)
        s = discretize(st, p, phys)
        distance = 0.0
        greedy = 0
        reached = False
        steps = max_steps
        for t in range(1, max_steps + 1):
            a = q_select(self.Q, s, self.rng, eps)
            row = self.Q[s]
            if row[a] == max(row):
                greedy += 1
            nxt = mountain_step(st, ACTION_ORDER[a], phys)
            distance += abs(nxt.position - st.position)
            s2 = discretize(nxt, p, phys)
            if at_goal(nxt, phys):
                q_update(self.Q, s, a, 1.0, s2, p, k, terminal=True)
                reached, steps = True, t
                break
            q_update(self.Q, s, a, 0.0, s2, p, k)
            st, s = nxt, s2
        self.attempts += 1
        return RLAttempt(steps, distance, reached, greedy / steps)
