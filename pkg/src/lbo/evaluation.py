"""Confidence accounting and the learning/execution phase switch."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .learners import Method, MethodWeights, Outcome, Proposal, RankedProposal, update_weight
from .memory import is_familiar  # re-exported; familiarity is judged against memory
from .software_image import ActionSpec

__all__ = [
    "Phase",
    "PhaseViolation",
    "EvalConfig",
    "EvalState",
    "assess_learning",
    "assess_execution",
    "update_execution_weights",
    "transition",
    "is_familiar",
]


class Phase(enum.Enum):
    LEARNING = "Learning"
    EXECUTION = "Execution"


class PhaseViolation(Exception):
    pass


@dataclass(frozen=True)
class EvalConfig:
    upper_threshold: float = 15.0
    lower_threshold: float = 10.0
    unfamiliar_reference: float = 0.0
    unfamiliar_limit: int = 5

    def __post_init__(self):
        if not self.lower_threshold < self.upper_threshold:
            raise ValueError(
                f"lower threshold {self.lower_threshold} must be below upper {self.upper_threshold}"
            )
        if not self.unfamiliar_reference < self.lower_threshold:
            raise ValueError(
                f"unfamiliar reference {self.unfamiliar_reference} must be below lower threshold {self.lower_threshold}"
            )
        if int(self.unfamiliar_limit) != self.unfamiliar_limit or self.unfamiliar_limit < 1:
            raise ValueError("unfamiliar limit must be a positive integer")


@dataclass(frozen=True)
class EvalState:
    confidence: float = 0.0
    phase: Phase = Phase.LEARNING
    unfamiliar_streak: int = 0
    weights: MethodWeights = field(default_factory=MethodWeights)


def _judge(weights: MethodWeights, tops: Mapping[Method, Proposal], reference: ActionSpec):
    for method in (Method.RECALL, Method.CLASSIFICATION):
        prop = tops.get(method)
        if prop is None:
            continue
        outcome = Outcome.APPROPRIATE if prop.action == reference else Outcome.INAPPROPRIATE
        weights = update_weight(weights, method, outcome, prop.reliability)
    return weights


def assess_learning(
    s: EvalState,
    best: Optional[RankedProposal],
    observed: ActionSpec,
    tops: Optional[Mapping[Method, Proposal]] = None,
) -> EvalState:
    """Score the combined proposal against what the expert actually did.

    Confidence moves by the best proposal's reliability.  Each method is
    credited or debited through its own top proposal (tops); without tops
    only the method behind best is judged.
    """
    if s.phase is not Phase.LEARNING:
        raise PhaseViolation("assess_learning called outside the learning phase")
    if best is None:
        return s
    if tops is None:
        tops = {best.method: best.proposal}
    hit = best.action == observed
    conf = s.confidence + (best.reliability if hit else -best.reliability)
    return replace(s, confidence=conf, weights=_judge(s.weights, tops, observed))


def assess_execution(
    s: EvalState,
    executed: RankedProposal,
    execution_ok: bool,
    familiar: bool,
    c: EvalConfig = EvalConfig(),
) -> EvalState:
    if s.phase is not Phase.EXECUTION:
        raise PhaseViolation("assess_execution called outside the execution phase")
    conf = s.confidence
    if not execution_ok:
        conf -= executed.reliability
    streak = s.unfamiliar_streak
    if familiar:
        streak = 0
    elif not execution_ok:
        streak += 1
    if streak >= c.unfamiliar_limit:
        return replace(s, confidence=c.unfamiliar_reference, phase=Phase.LEARNING, unfamiliar_streak=0)
    return replace(s, confidence=conf, unfamiliar_streak=streak)


def update_execution_weights(
    s: EvalState,
    executed: ActionSpec,
    execution_ok: bool,
    tops: Mapping[Method, Proposal],
) -> EvalState:
    """Methods that proposed the executed action share its outcome; methods
    that proposed something else are left alone since nothing was learned
    about their choice."""
    w = s.weights
    outcome = Outcome.APPROPRIATE if execution_ok else Outcome.INAPPROPRIATE
    for method in (Method.RECALL, Method.CLASSIFICATION):
        prop = tops.get(method)
        if prop is not None and prop.action == executed:
            w = update_weight(w, method, outcome, prop.reliability)
    return replace(s, weights=w)


def transition(s: EvalState, c: EvalConfig) -> EvalState:
    if s.confidence > c.upper_threshold:
        return replace(s, phase=Phase.EXECUTION)
    if s.confidence < c.lower_threshold:
        return replace(s, phase=Phase.LEARNING)
    return s
