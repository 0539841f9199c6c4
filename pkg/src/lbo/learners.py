"""Action proposal methods (recall over experience links, K*-style classification)
and their weighted combination.

Everything here is a pure function of its inputs, so the same call made while
observing an expert and while preparing to act gives the same answer.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .memory import (
    ExperienceTree,
    KeyMismatch,
    children_of,
    discover_reference_experience,
    similarity_between,
    values_match,
)
from .software_image import ActionSpec, ConditionSet

LN2 = math.log(2.0)


class Method(enum.Enum):
    RECALL = "Recall"
    CLASSIFICATION = "Classification"

    @property
    def rank(self) -> int:
        return 0 if self is Method.RECALL else 1


class Outcome(enum.Enum):
    APPROPRIATE = "Appropriate"
    INAPPROPRIATE = "Inappropriate"


@dataclass(frozen=True)
class Proposal:
    action: ActionSpec
    reliability: float
    method: Method
    source_experience: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.reliability <= 1.0:
            raise ValueError(f"reliability {self.reliability} outside [0, 1]")


@dataclass(frozen=True)
class MethodWeights:
    recall_weight: float = 0.0
    classification_weight: float = 0.0

    def __post_init__(self):
        if self.recall_weight < 0 or self.classification_weight < 0:
            raise ValueError("method weights must be non-negative")

    def of(self, method: Method) -> float:
        return self.recall_weight if method is Method.RECALL else self.classification_weight


@dataclass(frozen=True)
class RankedProposal:
    proposal: Proposal
    final_reliability: float

    @property
    def action(self) -> ActionSpec:
        return self.proposal.action

    @property
    def reliability(self) -> float:
        return self.proposal.reliability

    @property
    def method(self) -> Method:
        return self.proposal.method


@dataclass(frozen=True)
class KStarParams:
    """blend: probability mass that a symbolic value stays itself.

    numeric_scale maps attribute -> scale; attributes missing from it (or all
    of them when it is None) get the mean absolute deviation of the stored
    values, or 1.0 when that deviation is zero.
    """

    blend: float = 0.2
    numeric_scale: Optional[Mapping[str, float]] = None

    def __post_init__(self):
        if not 0.0 < self.blend <= 1.0:
            raise ValueError(f"blend must lie in (0, 1], got {self.blend}")
        if self.numeric_scale is not None:
            for k, v in self.numeric_scale.items():
                if not v > 0:
                    raise ValueError(f"numeric scale for {k!r} must be positive")


# -- recall ---------------------------------------------------------------


def recall_propose(t: ExperienceTree, ref: Optional[int], current: ConditionSet) -> list[Proposal]:
    if ref is None:
        return []
    props = [
        Proposal(child.action, similarity_between(child.conditions, current, t.eps_match), Method.RECALL, child.id)
        for child in children_of(t, ref)
    ]
    props.sort(key=lambda p: (-p.reliability, p.source_experience))
    return props


# -- classification ---------------------------------------------------------


def _attr_distance(key: str, x, y, blend: float, scale: float, eps: float) -> float:
    if isinstance(x, str) != isinstance(y, str):
        raise KeyMismatch(f"attribute {key!r} mixes symbolic and numeric values")
    if isinstance(x, str):
        return 0.0 if x == y else -math.log2(blend)
    if values_match(x, y, eps):
        return 0.0
    return abs(x - y) / (scale * LN2)


def kstar_distance(
    a: ConditionSet,
    b: ConditionSet,
    p: KStarParams = KStarParams(),
    scales: Optional[Mapping[str, float]] = None,
    eps: float = 0.0,
) -> float:
    """Sum of per-attribute transformation complexities in bits.

    A symbolic value turns into a different one with probability blend;
    a number x turns into y with probability exp(-|x-y|/scale).
    """
    if a.keys() != b.keys():
        raise KeyMismatch(f"{sorted(a)} vs {sorted(b)}")
    if scales is None:
        scales = p.numeric_scale or {}
    total = 0.0
    for k in a:
        total += _attr_distance(k, a[k], b[k], p.blend, scales.get(k, 1.0), eps)
    return total


def fit_numeric_scales(t: ExperienceTree, p: KStarParams) -> dict[str, float]:
    fixed = dict(p.numeric_scale or {})
    columns: dict[str, list[float]] = {}
    for exp in t:
        for k, v in exp.conditions.items_tuple():
            if not isinstance(v, str) and k not in fixed:
                columns.setdefault(k, []).append(v)
    for k, vals in columns.items():
        mean = sum(vals) / len(vals)
        mad = sum(abs(v - mean) for v in vals) / len(vals)
        fixed[k] = mad if mad > 0 else 1.0
    return fixed


def classify_propose(
    t: ExperienceTree, current: ConditionSet, p: KStarParams = KStarParams()
) -> list[Proposal]:
    """Every stored experience is a labelled instance; each action gets the
    summed transformation probability of its instances, capped at 1.

    A single identical instance contributes exactly 1, so an exact match
    always yields reliability 1.
    """
    if len(t) == 0:
        return []
    scales = fit_numeric_scales(t, p)
    mass: dict[str, float] = {}
    nearest: dict[str, tuple[float, int]] = {}
    actions: dict[str, ActionSpec] = {}
    for exp in t:
        d = kstar_distance(exp.conditions, current, p, scales, t.eps_match)
        prob = 2.0 ** (-d)
        name = exp.action.designation
        actions[name] = exp.action
        mass[name] = mass.get(name, 0.0) + prob
        best = nearest.get(name)
        if best is None or prob > best[0]:
            nearest[name] = (prob, exp.id)
    ranked = sorted(
        actions,
        key=lambda n: (-min(1.0, mass[n]), -nearest[n][0], -mass[n], n),
    )
    return [
        Proposal(actions[n], min(1.0, mass[n]), Method.CLASSIFICATION, nearest[n][1])
        for n in ranked
    ]


# -- combination and weights -------------------------------------------------


def combine(
    recall: list[Proposal], classification: list[Proposal], w: MethodWeights
) -> Optional[RankedProposal]:
    """Highest reliability x weight wins.

    Ties, including the cold start where both weights are 0, fall to raw
    reliability, then Recall before Classification, then list position
    (which already encodes experience id or action name order).
    """
    best_key = None
    best = None
    for props in (recall, classification):
        for pos, prop in enumerate(props):
            final = prop.reliability * w.of(prop.method)
            key = (-final, -prop.reliability, prop.method.rank, pos)
            if best_key is None or key < best_key:
                best_key = key
                best = RankedProposal(prop, final)
    return best


def update_weight(w: MethodWeights, method: Method, outcome: Outcome, reliability: float) -> MethodWeights:
    if not 0.0 <= reliability <= 1.0:
        raise ValueError(f"reliability {reliability} outside [0, 1]")
    current = w.of(method)
    if outcome is Outcome.APPROPRIATE:
        new = current + reliability
    else:
        new = max(0.0, current - reliability)
    if method is Method.RECALL:
        return replace(w, recall_weight=new)
    return replace(w, classification_weight=new)


# -- full pipeline -------------------------------------------------------------


@dataclass(frozen=True)
class ProposalSet:
    recall: list[Proposal] = field(default_factory=list)
    classification: list[Proposal] = field(default_factory=list)
    best: Optional[RankedProposal] = None
    reference: Optional[int] = None

    def tops(self) -> dict[Method, Proposal]:
        out = {}
        if self.recall:
            out[Method.RECALL] = self.recall[0]
        if self.classification:
            out[Method.CLASSIFICATION] = self.classification[0]
        return out


def propose(
    t: ExperienceTree,
    anchor: Optional[tuple[ConditionSet, ActionSpec]],
    current: ConditionSet,
    weights: MethodWeights,
    params: KStarParams = KStarParams(),
) -> ProposalSet:
    """The shared pipeline: locate the reference experience from the last
    (conditions, action) pair, ask both methods, combine."""
    ref = None
    if anchor is not None:
        ref = discover_reference_experience(t, anchor[0], anchor[1])
    rec = recall_propose(t, ref, current)
    cls = classify_propose(t, current, params)
    return ProposalSet(rec, cls, combine(rec, cls, weights), ref)
