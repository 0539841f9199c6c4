"""Experience memory: a deduplicating tree of (conditions, action) pairs.

Children lists keep the order in which observations followed each other, so
walking child links replays what the apprentice saw.  A node may be re-linked
under several parents, which makes the structure a DAG in general.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .software_image import ActionSpec, ConditionSet

EPS_MATCH = 1e-9


class MemoryError_(Exception):
    pass


class KeyMismatch(MemoryError_):
    pass


class UnknownId(MemoryError_):
    pass


def values_match(x, y, eps: float = EPS_MATCH) -> bool:
    if isinstance(x, str) or isinstance(y, str):
        return x == y
    return abs(x - y) <= eps


def conditions_match(a: ConditionSet, b: ConditionSet, eps: float = EPS_MATCH) -> bool:
    if a.keys() != b.keys():
        return False
    return all(values_match(a[k], b[k], eps) for k in a)


def similarity_between(a: ConditionSet, b: ConditionSet, eps: float = EPS_MATCH) -> float:
    if a.keys() != b.keys():
        raise KeyMismatch(f"{sorted(a)} vs {sorted(b)}")
    if not a:
        return 1.0
    hits = sum(1 for k in a if values_match(a[k], b[k], eps))
    return hits / len(a)


@dataclass
class Experience:
    id: int
    conditions: ConditionSet
    action: ActionSpec
    children: list[int] = field(default_factory=list)


class ExperienceTree:
    def __init__(self, eps_match: float = EPS_MATCH):
        self.eps_match = eps_match
        self.experiences: dict[int, Experience] = {}
        self.roots: list[int] = []
        self.last_stored: Optional[int] = None
        # exact-key index; numeric near-matches fall back to a scan per action
        self._exact: dict[tuple, int] = {}
        self._by_action: dict[str, list[int]] = {}
        self._seen_conditions: set[ConditionSet] = set()

    def __len__(self):
        return len(self.experiences)

    def __iter__(self):
        return iter(self.experiences.values())

    def get(self, exp_id: int) -> Experience:
        try:
            return self.experiences[exp_id]
        except KeyError:
            raise UnknownId(exp_id) from None

    def find(self, conditions: ConditionSet, action: ActionSpec) -> Optional[int]:
        key = (conditions, action)
        hit = self._exact.get(key)
        if hit is not None:
            return hit
        if self.eps_match <= 0:
            return None
        for exp_id in self._by_action.get(action.designation, ()):
            exp = self.experiences[exp_id]
            if exp.action == action and conditions_match(exp.conditions, conditions, self.eps_match):
                return exp_id
        return None

    def store(self, conditions: ConditionSet, action: ActionSpec) -> int:
        existing = self.find(conditions, action)
        prev = self.last_stored
        if existing is not None:
            exp_id = existing
            if prev is not None:
                siblings = self.experiences[prev].children
                if exp_id not in siblings:
                    siblings.append(exp_id)
        else:
            exp_id = len(self.experiences)
            self.experiences[exp_id] = Experience(exp_id, conditions, action)
            self._exact[(conditions, action)] = exp_id
            self._by_action.setdefault(action.designation, []).append(exp_id)
            self._seen_conditions.add(conditions)
            if prev is None:
                self.roots.append(exp_id)
            else:
                self.experiences[prev].children.append(exp_id)
        self.last_stored = exp_id
        return exp_id

    def reset_anchor(self) -> None:
        self.last_stored = None

    def with_action(self, action: ActionSpec) -> list[int]:
        return [i for i in self._by_action.get(action.designation, ()) if self.experiences[i].action == action]

    def snapshot(self) -> "ExperienceTree":
        """Deep value copy for inspection from other threads."""
        return copy.deepcopy(self)

    def dump_records(self) -> list[dict]:
        records = []
        for exp in self.experiences.values():
            records.append(
                {
                    "id": exp.id,
                    "conditions": [[k, v] for k, v in exp.conditions.items_tuple()],
                    "action": exp.action.designation,
                    "children": list(exp.children),
                }
            )
        return records

    def dump(self, path) -> None:
        """One JSON object per line, fields in order: id, conditions, action, children."""
        path = Path(path)
        try:
            with path.open("w", encoding="utf-8", newline="\n") as fh:
                for rec in self.dump_records():
                    fh.write(json.dumps(rec) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write memory dump to {path}: {exc}") from exc


def store_experience(t: ExperienceTree, new: tuple[ConditionSet, ActionSpec]) -> int:
    conditions, action = new
    return t.store(conditions, action)


def reset_sequence_anchor(t: ExperienceTree) -> None:
    t.reset_anchor()


def discover_reference_experience(
    t: ExperienceTree, cond: ConditionSet, act: ActionSpec
) -> Optional[int]:
    """Exact (cond, act) if stored, otherwise the most similar experience with act.

    The running best starts at similarity zero and only a strictly greater
    value replaces it, so candidates sharing nothing with cond are never
    chosen and ties keep the earliest stored.
    """
    best_id = None
    best_sim = 0.0
    for exp_id in t.with_action(act):
        exp = t.experiences[exp_id]
        sim = similarity_between(exp.conditions, cond, t.eps_match)
        if sim == 1.0:
            return exp_id
        if sim > best_sim:
            best_sim = sim
            best_id = exp_id
    return best_id


def children_of(t: ExperienceTree, ref: int) -> list[Experience]:
    exp = t.get(ref)
    return [t.experiences[c] for c in exp.children]


def is_familiar(t: ExperienceTree, current: ConditionSet) -> bool:
    if current in t._seen_conditions:
        return True
    if t.eps_match <= 0:
        return False
    for exp in t.experiences.values():
        if conditions_match(exp.conditions, current, t.eps_match):
            return True
    return False


def replay_from_root(t: ExperienceTree, root: int, length: int) -> list[ActionSpec]:
    """Walk child links from root, taking each node's children in link order.

    Reproduces an observed sequence as long as no parent->child edge had to
    be reused, which is the case for a single pass over distinct pairs.
    """
    out = []
    used: dict[int, int] = {}
    node = t.get(root)
    while True:
        out.append(node.action)
        if len(out) >= length or not node.children:
            return out
        k = used.get(node.id, 0)
        used[node.id] = k + 1
        node = t.experiences[node.children[k % len(node.children)]]


def build_tree(pairs: Iterable[tuple[ConditionSet, ActionSpec]], eps_match: float = EPS_MATCH) -> ExperienceTree:
    t = ExperienceTree(eps_match)
    for cond, act in pairs:
        t.store(cond, act)
    return t
