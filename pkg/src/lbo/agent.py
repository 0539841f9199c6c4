"""The apprentice: observes experts through the image index, learns, then acts."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .evaluation import (
    EvalConfig,
    EvalState,
    Phase,
    assess_execution,
    assess_learning,
    transition,
    update_execution_weights,
)
from .learners import KStarParams, ProposalSet, propose
from .memory import EPS_MATCH, ExperienceTree, is_familiar
from .software_image import (
    ActionSpec,
    ConditionSet,
    DynamicImage,
    ImageIndex,
    Snapshot,
    StaticImage,
    Subscription,
    TaskOntology,
)


@dataclass(frozen=True)
class Event:
    step: int
    kind: str  # "store", "execute", "phase", "observe"
    phase: Phase
    detail: str = ""


@dataclass(frozen=True)
class LearnRecord:
    snapshot: Snapshot
    proposals: ProposalSet
    expert: str

    @property
    def correct(self) -> bool:
        best = self.proposals.best
        return best is not None and best.action == self.snapshot.action


@dataclass(frozen=True)
class ExecRecord:
    conditions: ConditionSet
    proposals: ProposalSet
    action: Optional[ActionSpec]
    ok: bool
    familiar: bool


class Apprentice:
    def __init__(
        self,
        agent_id: str,
        image: StaticImage,
        index: ImageIndex,
        eval_cfg: EvalConfig = EvalConfig(),
        kstar: KStarParams = KStarParams(),
        rng: Optional[random.Random] = None,
        task: Optional[str] = None,
        ontology: Optional[TaskOntology] = None,
        eps_match: float = EPS_MATCH,
    ):
        self.agent_id = agent_id
        self.image = image
        self.index = index
        self.eval_cfg = eval_cfg
        self.kstar = kstar
        self.rng = rng or random.Random(0)
        self.task = task
        self.ontology = ontology
        self.memory = ExperienceTree(eps_match)
        self.state = EvalState()
        self.events: list[Event] = []
        self.dynamic = DynamicImage(image=image)
        index.register(agent_id, image, self.dynamic)

        self.expert: Optional[str] = None
        self.previous_expert: Optional[str] = None
        self._sub: Optional[Subscription] = None
        self._buffer: deque[Snapshot] = deque()
        self._live: list[Snapshot] = []
        self._live_after = -1
        self._obs_anchor: Optional[tuple[ConditionSet, ActionSpec]] = None
        self.exec_anchor: Optional[tuple[ConditionSet, ActionSpec]] = None

    @property
    def phase(self) -> Phase:
        return self.state.phase

    @property
    def observing(self) -> bool:
        return self._sub is not None

    def _log(self, step: int, kind: str, detail: str = "") -> None:
        self.events.append(Event(step, kind, self.state.phase, detail))

    # -- observation ---------------------------------------------------------

    def choose_expert(self) -> str:
        found = self.index.find_candidates(self.image, self.task, self.ontology, exclude=self.agent_id)
        if not found:
            raise RuntimeError(f"{self.agent_id}: no expert with a compatible image")
        fresh = [a for a in found if a != self.previous_expert]
        return self.rng.choice(fresh or found)

    def start_observation(self, step: int, expert: Optional[str] = None) -> str:
        if self.observing:
            self.stop_observation()
        expert = expert or self.choose_expert()
        live: list[Snapshot] = []
        self._sub = self.index.subscribe(expert, live.append)
        _, dyn = self.index.lookup(expert)
        history = dyn.history()
        last = history[-1].seq if history else -1
        self._buffer = deque(history)
        # the callback keeps appending to live; hand later snapshots to the buffer
        self._live = live
        self._live_after = last
        self.expert = expert
        self.memory.reset_anchor()
        self._obs_anchor = None
        self._log(step, "observe", expert)
        return expert

    def break_sequence(self) -> None:
        """Keep watching the same expert but start a new observed sequence."""
        self.memory.reset_anchor()
        self._obs_anchor = None

    def _pull_live(self) -> None:
        if self._live:
            for snap in self._live:
                if snap.seq > self._live_after:
                    self._buffer.append(snap)
                    self._live_after = snap.seq
            self._live.clear()

    def stop_observation(self) -> None:
        if self._sub is not None:
            self.index.unsubscribe(self._sub)
        self._sub = None
        self._buffer.clear()
        self._live = []
        self.previous_expert = self.expert
        self.expert = None

    def pending(self) -> int:
        self._pull_live()
        return len(self._buffer)

    def learn_step(self, step: int, check_transition: bool = True) -> Optional[LearnRecord]:
        """Consume one observed snapshot: propose, self-assess, store."""
        if self.state.phase is not Phase.LEARNING:
            raise RuntimeError("learn_step outside the learning phase")
        if not self.observing:
            self.start_observation(step)
        self._pull_live()
        if not self._buffer:
            return None
        snap = self._buffer.popleft()
        ps = propose(self.memory, self._obs_anchor, snap.conditions, self.state.weights, self.kstar)
        self.state = assess_learning(self.state, ps.best, snap.action, ps.tops())
        self.memory.store(snap.conditions, snap.action)
        self._log(step, "store", snap.action.designation)
        self._obs_anchor = (snap.conditions, snap.action)
        record = LearnRecord(snap, ps, self.expert)
        if check_transition:
            self.check_transition(step)
        return record

    # -- execution -----------------------------------------------------------

    def propose_for(self, conditions: ConditionSet) -> ProposalSet:
        return propose(self.memory, self.exec_anchor, conditions, self.state.weights, self.kstar)

    def execute_step(self, step: int, conditions: ConditionSet, actuator, check_transition: bool = True) -> ExecRecord:
        """Sense, propose, act through actuator(action) -> ok, then assess."""
        if self.state.phase is not Phase.EXECUTION:
            raise RuntimeError("execute_step outside the execution phase")
        familiar = is_familiar(self.memory, conditions)
        ps = self.propose_for(conditions)
        best = ps.best
        if best is None:
            return ExecRecord(conditions, ps, None, False, familiar)
        action = best.action
        ok = bool(actuator(action))
        self._log(step, "execute", action.designation)
        self.dynamic.record(action, conditions)
        self.state = update_execution_weights(self.state, action, ok, ps.tops())
        before = self.state.phase
        self.state = assess_execution(self.state, best, ok, familiar, self.eval_cfg)
        if self.state.phase is not before:
            self._log(step, "phase", "unfamiliar")
        # a failed action was still executed, so it anchors the next recall
        self.exec_anchor = (conditions, action)
        if check_transition:
            self.check_transition(step)
        return ExecRecord(conditions, ps, action, ok, familiar)

    # -- phase switching -------------------------------------------------------

    def check_transition(self, step: int) -> None:
        before = self.state.phase
        self.state = transition(self.state, self.eval_cfg)
        after = self.state.phase
        if after is before:
            return
        self._log(step, "phase", "upper" if after is Phase.EXECUTION else "lower")
        if after is Phase.EXECUTION:
            self.stop_observation()

