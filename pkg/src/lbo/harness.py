"""Deterministic drivers for the hand and mountain-car experiments."""
from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .agent import Apprentice, Event
from .evaluation import EvalConfig, Phase
from .learners import KStarParams
from .software_image import DynamicImage, ImageIndex
from .scenarios.hand import (
    HandEnv,
    NumberSource,
    expert_policy,
    hand_ontology,
    hand_static_image,
    make_sequences,
)
from .scenarios.mountain import (
    BY_THRUST,
    THRUST,
    PhysicsParams,
    at_goal,
    car_static_image,
    mountain_expert_action,
    mountain_step,
    run_attempt,
    start_state,
)
from .scenarios.qlearning import QLearner, QParams

log = logging.getLogger(__name__)

HAND_COLUMNS = (
    "step",
    "phase",
    "source",
    "action",
    "proposed",
    "correct",
    "execution_ok",
    "familiar",
    "confidence",
    "recall_weight",
    "classification_weight",
)

MOUNTAIN_COLUMNS = (
    "attempt",
    "phase",
    "action",
    "correct",
    "confidence",
    "recall_weight",
    "classification_weight",
    "steps_in_attempt",
    "distance",
    "reached_goal",
)

SWEEP_COLUMNS = (
    "lower",
    "upper",
    "total_correct_actions",
    "initial_learning_steps",
    "total_executed",
    "status",
)

AGENT_KINDS = ("lbo", "rl", "expert")
SETTINGS = ("exp1", "exp2")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HandConfig:
    setting: str = "exp1"
    steps: int = 4000
    experts: int = 5


@dataclass(frozen=True)
class MountainConfig:
    agent: str = "lbo"
    attempts: int = 100
    max_steps: int = 500
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    q: QParams = field(default_factory=QParams)


@dataclass(frozen=True)
class SimConfig:
    scenario: str = "hand"
    hand: HandConfig = field(default_factory=HandConfig)
    mountain: MountainConfig = field(default_factory=MountainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    kstar: KStarParams = field(default_factory=KStarParams)
    seed: int = 0
    out: Optional[str] = None

    def validate(self) -> "SimConfig":
        if self.scenario not in ("hand", "mountain"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        h, m = self.hand, self.mountain
        if h.setting not in SETTINGS:
            raise ConfigError(f"setting must be one of {SETTINGS}, got {h.setting!r}")
        if h.steps <= 0:
            raise ConfigError("steps must be positive")
        if h.experts <= 0:
            raise ConfigError("expert count must be positive")
        if m.agent not in AGENT_KINDS:
            raise ConfigError(f"agent must be one of {AGENT_KINDS}, got {m.agent!r}")
        if m.attempts <= 0:
            raise ConfigError("attempts must be positive")
        if m.max_steps <= 0:
            raise ConfigError("max steps per attempt must be positive")
        return self


def fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def write_metrics(rows: Iterable[dict], path, columns: Sequence[str]) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([fmt(row.get(c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc.strerror or exc}") from exc


def _derived_rngs(seed: int, n: int) -> list[random.Random]:
    master = random.Random(seed)
    return [random.Random(master.getrandbits(64)) for _ in range(n)]


# -- hand ----------------------------------------------------------------------


@dataclass
class HandResult:
    rows: list[dict]
    apprentice: Apprentice
    sequences: list[list[int]]
    expert_ids: list[str]

    @property
    def events(self) -> list[Event]:
        return self.apprentice.events

    def executed_rows(self) -> list[dict]:
        return [r for r in self.rows if r["phase"] == Phase.EXECUTION.value]

    @property
    def total_executed(self) -> int:
        return len(self.executed_rows())

    @property
    def total_correct(self) -> int:
        return sum(1 for r in self.executed_rows() if r["correct"])

    @property
    def correct_rate(self) -> float:
        n = self.total_executed
        return self.total_correct / n if n else 0.0

    @property
    def initial_learning_steps(self) -> int:
        for r in self.rows:
            if r["phase"] == Phase.EXECUTION.value:
                return r["step"]
        return len(self.rows)

    @property
    def final_weights(self):
        return self.apprentice.state.weights


def simulate_hand(cfg: SimConfig) -> HandResult:
    cfg.validate()
    hc = cfg.hand
    seq_rng, choice_rng = _derived_rngs(cfg.seed, 2)
    sequences = make_sequences(hc.setting, hc.experts + 1, seq_rng)
    image = hand_static_image()
    index = ImageIndex()

    experts = []
    for i in range(hc.experts):
        agent_id = f"expert-{i + 1}"
        env = HandEnv(NumberSource(list(sequences[i + 1])))
        dyn = DynamicImage(image=image)
        index.register(agent_id, image, dyn)
        experts.append((agent_id, env, dyn))

    apprentice = Apprentice(
        "apprentice", image, index, cfg.eval, cfg.kstar, rng=choice_rng, ontology=hand_ontology()
    )
    own_env = HandEnv(NumberSource(list(sequences[0])))

    rows = []
    for step in range(hc.steps):
        for _, env, dyn in experts:
            cond = env.conditions()
            action = env.expert_action()
            if not env.execute(action):
                raise RuntimeError("expert action failed; the hand environment is inconsistent")
            dyn.record(action, cond)

        phase = apprentice.phase
        if phase is Phase.LEARNING:
            rec = apprentice.learn_step(step)
            best = rec.proposals.best if rec else None
            row = {
                "source": rec.expert if rec else apprentice.expert,
                "action": rec.snapshot.action.designation if rec else None,
                "proposed": best.action.designation if best else None,
                "correct": rec.correct if rec else False,
                "execution_ok": None,
                "familiar": None,
            }
        else:
            cond = own_env.conditions()
            oracle = expert_policy(cond)
            rec = apprentice.execute_step(step, cond, own_env.execute)
            name = rec.action.designation if rec.action else None
            row = {
                "source": "self",
                "action": name,
                "proposed": name,
                "correct": rec.action == oracle,
                "execution_ok": rec.ok,
                "familiar": rec.familiar,
            }
        st = apprentice.state
        row.update(
            step=step,
            phase=phase.value,
            confidence=st.confidence,
            recall_weight=st.weights.recall_weight,
            classification_weight=st.weights.classification_weight,
        )
        rows.append(row)
    return HandResult(rows, apprentice, sequences, [e[0] for e in experts])


def run_hand(cfg: SimConfig) -> HandResult:
    result = simulate_hand(cfg)
    if cfg.out:
        write_metrics(result.rows, cfg.out, HAND_COLUMNS)
    return result


# -- mountain car ----------------------------------------------------------------


@dataclass
class MountainResult:
    rows: list[dict]
    apprentice: Optional[Apprentice] = None

    def attempts_of(self, phase: str) -> list[dict]:
        return [r for r in self.rows if r["phase"] == phase]

    def first_success(self, phase: Optional[str] = None) -> Optional[int]:
        """1-based position of the first successful attempt (within phase if given)."""
        rows = self.rows if phase is None else self.attempts_of(phase)
        for i, r in enumerate(rows, start=1):
            if r["reached_goal"]:
                return i
        return None


def _expert_policy(physics: PhysicsParams):
    return lambda st: mountain_expert_action(st, physics)


def _mountain_expert(cfg: SimConfig) -> MountainResult:
    mc = cfg.mountain
    rows = []
    for k in range(mc.attempts):
        res = run_attempt(_expert_policy(mc.physics), mc.physics, mc.max_steps)
        rows.append(
            {
                "attempt": k + 1,
                "phase": "Expert",
                "action": BY_THRUST[res.actions[-1]].designation,
                "correct": 1.0,
                "steps_in_attempt": res.steps,
                "distance": res.distance,
                "reached_goal": res.reached_goal,
            }
        )
    return MountainResult(rows)


def _mountain_rl(cfg: SimConfig) -> MountainResult:
    mc = cfg.mountain
    learner = QLearner(mc.q, mc.physics, seed=cfg.seed)
    rows = []
    for k in range(mc.attempts):
        res = learner.run_attempt(mc.max_steps)
        rows.append(
            {
                "attempt": k + 1,
                "phase": "Online",
                "action": None,
                "correct": res.greedy_fraction,
                "steps_in_attempt": res.steps,
                "distance": res.distance,
                "reached_goal": res.reached_goal,
            }
        )
    return MountainResult(rows)


def _mountain_lbo(cfg: SimConfig) -> MountainResult:
    mc = cfg.mountain
    phys = mc.physics
    image = car_static_image()
    index = ImageIndex()
    expert_dyn = DynamicImage(image=image)
    index.register("expert-1", image, expert_dyn)
    (choice_rng,) = _derived_rngs(cfg.seed, 1)
    apprentice = Apprentice("apprentice", image, index, cfg.eval, cfg.kstar, rng=choice_rng)
    policy = _expert_policy(phys)

    rows = []
    step = 0
    for k in range(mc.attempts):
        phase = apprentice.phase
        if phase is Phase.LEARNING:
            # one learning round: watch a full expert attempt, judge at its end
            if apprentice.observing:
                apprentice.break_sequence()
            else:
                apprentice.start_observation(step)

            def acting(st, _policy=policy):
                a = _policy(st)
                expert_dyn.record(BY_THRUST[a], st.conditions())
                return a

            res = run_attempt(acting, phys, mc.max_steps)
            hits = total = 0
            while apprentice.pending():
                rec = apprentice.learn_step(step, check_transition=False)
                hits += rec.correct
                total += 1
                step += 1
            apprentice.check_transition(step)
            row = {
                "action": BY_THRUST[res.actions[-1]].designation,
                "correct": hits / total if total else 0.0,
                "steps_in_attempt": res.steps,
                "distance": res.distance,
                "reached_goal": res.reached_goal,
            }
        else:
            st = start_state(phys)
            distance = 0.0
            hits = 0
            n = 0
            last = None
            reached = False
            box = {}

            def actuate(action):
                box["next"] = mountain_step(box["state"], THRUST[action], phys)
                return True

            while n < mc.max_steps:
                box["state"] = st
                rec = apprentice.execute_step(step, st.conditions(), actuate, check_transition=False)
                step += 1
                n += 1
                if rec.action is None:
                    break
                last = rec.action
                hits += THRUST[rec.action] == mountain_expert_action(st, phys)
                nxt = box["next"]
                distance += abs(nxt.position - st.position)
                st = nxt
                if at_goal(st, phys):
                    reached = True
                    break
                if apprentice.phase is not Phase.EXECUTION:
                    break
            apprentice.check_transition(step)
            row = {
                "action": last.designation if last else None,
                "correct": hits / n if n else 0.0,
                "steps_in_attempt": n,
                "distance": distance,
                "reached_goal": reached,
            }
        s = apprentice.state
        row.update(
            attempt=k + 1,
            phase=phase.value,
            confidence=s.confidence,
            recall_weight=s.weights.recall_weight,
            classification_weight=s.weights.classification_weight,
        )
        rows.append(row)
    return MountainResult(rows, apprentice)


def simulate_mountain(cfg: SimConfig) -> MountainResult:
    cfg.validate()
    kind = cfg.mountain.agent
    if kind == "expert":
        return _mountain_expert(cfg)
    if kind == "rl":
        return _mountain_rl(cfg)
    return _mountain_lbo(cfg)


def run_mountain(cfg: SimConfig) -> MountainResult:
    result = simulate_mountain(cfg)
    if cfg.out:
        write_metrics(result.rows, cfg.out, MOUNTAIN_COLUMNS)
    return result


# -- threshold sweep ---------------------------------------------------------------


def sweep_pairs(lowers: Sequence[float], uppers: Optional[Sequence[float]] = None, gaps: Optional[Sequence[float]] = None):
    """(lower, upper) cells: either the cross product with uppers, or lower+gap."""
    if not lowers:
        raise ConfigError("lower range is empty")
    if (uppers is None) == (gaps is None):
        raise ConfigError("give exactly one of an upper range or a gap list")
    pairs = []
    for lo in lowers:
        for x in (uppers if uppers is not None else gaps):
            pairs.append((lo, x if uppers is not None else lo + x))
    if not pairs:
        raise ConfigError("upper range is empty")
    return pairs


def sweep_thresholds(base: SimConfig, pairs: Sequence[tuple[float, float]], reference_offset: float = 10.0) -> list[dict]:
    """One hand run per cell, all under base.seed.

    Each cell sets the unfamiliar reference reference_offset below its own
    lower threshold.  Cells with lower >= upper are reported as skipped.
    """
    rows = []
    for lo, up in pairs:
        row = {"lower": lo, "upper": up}
        if not lo < up:
            log.warning("skipping invalid threshold pair lower=%s upper=%s", lo, up)
            row["status"] = "skipped: lower must be below upper"
            rows.append(row)
            continue
        ev = replace(base.eval, lower_threshold=lo, upper_threshold=up, unfamiliar_reference=lo - reference_offset)
        res = simulate_hand(replace(base, eval=ev, out=None))
        row.update(
            total_correct_actions=res.total_correct,
            initial_learning_steps=res.initial_learning_steps,
            total_executed=res.total_executed,
            status="ok",
        )
        rows.append(row)
    if base.out:
        write_metrics(rows, base.out, SWEEP_COLUMNS)
    return rows
