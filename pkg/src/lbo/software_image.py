"""Software images: the observable self-description of an agent.

A static image lists an agent's parts, sensors, visible attributes and
actuators.  A dynamic image is the bounded history of snapshots the agent
produces while acting; observers subscribe to it through an ImageIndex.
"""
from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

ConditionValue = Union[str, float]

DEFAULT_HISTORY = 500


class ImageError(Exception):
    pass


class UnknownTask(ImageError):
    pass


class UnknownAgent(ImageError):
    pass


class DuplicateRegistration(ImageError):
    pass


class InvalidConditions(ImageError):
    pass


def _check_designation(name: str) -> str:
    if not isinstance(name, str) or not name:
        raise ValueError(f"designation must be a non-empty string, got {name!r}")
    return name


def _check_unique(names: Iterable[str], what: str) -> None:
    seen = set()
    for n in names:
        if n in seen:
            raise ValueError(f"duplicate {what} designation {n!r}")
        seen.add(n)


@dataclass(frozen=True)
class ActionSpec:
    """A simple action (no parts) or a composite of an ordered action list."""

    designation: str
    parts: tuple["ActionSpec", ...] = ()

    def __post_init__(self):
        _check_designation(self.designation)
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def is_simple(self) -> bool:
        return not self.parts

    @classmethod
    def composite(cls, parts: Iterable["ActionSpec"], designation: Optional[str] = None):
        parts = tuple(parts)
        if not parts:
            raise ValueError("composite action needs at least one part")
        if designation is None:
            designation = "+".join(p.designation for p in parts)
        return cls(designation, parts)

    def __str__(self):
        return self.designation


def flatten(action: ActionSpec) -> list[ActionSpec]:
    """Depth-first, left-to-right expansion into simple actions."""
    if action.is_simple:
        return [action]
    out: list[ActionSpec] = []
    for part in action.parts:
        out.extend(flatten(part))
    return out


@dataclass(frozen=True)
class ActuatorSpec:
    designation: str
    actions: tuple[ActionSpec, ...] = ()

    def __post_init__(self):
        _check_designation(self.designation)
        object.__setattr__(self, "actions", tuple(self.actions))
        _check_unique((a.designation for a in self.actions), "action")


@dataclass(frozen=True)
class PartSpec:
    designation: str
    sensors: tuple[str, ...] = ()
    visible_attributes: tuple[str, ...] = ()
    actuators: tuple[ActuatorSpec, ...] = ()

    def __post_init__(self):
        _check_designation(self.designation)
        for name in ("sensors", "visible_attributes", "actuators"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for s in self.sensors + self.visible_attributes:
            _check_designation(s)
        _check_unique(self.sensors, "sensor")
        _check_unique(self.visible_attributes, "visible attribute")
        _check_unique((a.designation for a in self.actuators), "actuator")

    def _canonical(self):
        return (
            self.designation,
            frozenset(self.sensors),
            frozenset(self.visible_attributes),
            frozenset(
                (act.designation, frozenset(_action_canonical(a) for a in act.actions))
                for act in self.actuators
            ),
        )


def _action_canonical(action: ActionSpec):
    return (action.designation, tuple(_action_canonical(p) for p in action.parts))


@dataclass(frozen=True)
class StaticImage:
    parts: tuple[PartSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("a static image needs at least one part")
        _check_unique((p.designation for p in self.parts), "part")

    def condition_keys(self) -> frozenset[str]:
        """Sensor and visible-attribute designations, i.e. the keys of a ConditionSet."""
        keys = set()
        for p in self.parts:
            keys.update(p.sensors)
            keys.update(p.visible_attributes)
        return frozenset(keys)

    def simple_actions(self) -> dict[str, ActionSpec]:
        out = {}
        for p in self.parts:
            for act in p.actuators:
                for a in act.actions:
                    for leaf in flatten(a):
                        out[leaf.designation] = leaf
        return out

    def elements(self) -> frozenset[str]:
        """Every designation an observer can recognise in this image."""
        names = set()
        for p in self.parts:
            names.add(p.designation)
            names.update(p.sensors)
            names.update(p.visible_attributes)
            for act in p.actuators:
                names.add(act.designation)
                for a in act.actions:
                    names.add(a.designation)
                    names.update(leaf.designation for leaf in flatten(a))
        return frozenset(names)

    def _canonical(self):
        return frozenset(p._canonical() for p in self.parts)


def compare_static(a: StaticImage, b: StaticImage) -> bool:
    """Structural equality of two static images, order-insensitive per collection."""
    return a._canonical() == b._canonical()


@dataclass(frozen=True)
class TaskOntology:
    task_requirements: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        reqs = {}
        for task, elems in dict(self.task_requirements).items():
            _check_designation(task)
            reqs[task] = frozenset(_check_designation(e) for e in elems)
        object.__setattr__(self, "task_requirements", reqs)

    def requirements(self, task: str) -> frozenset[str]:
        try:
            return self.task_requirements[task]
        except KeyError:
            raise UnknownTask(task) from None


def supports_task(a: StaticImage, b: StaticImage, task: str, ont: TaskOntology) -> bool:
    required = ont.requirements(task)
    return required <= (a.elements() & b.elements())


class ConditionSet(Mapping[str, ConditionValue]):
    """Immutable designation -> value map; values are str (symbolic) or float."""

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, entries: Mapping[str, ConditionValue] | Iterable = ()):
        if isinstance(entries, Mapping):
            entries = entries.items()
        items = []
        for k, v in entries:
            _check_designation(k)
            if isinstance(v, bool) or not isinstance(v, (str, int, float)):
                raise InvalidConditions(f"condition {k!r} has unsupported value {v!r}")
            if not isinstance(v, str):
                v = float(v)
                if not math.isfinite(v):
                    raise InvalidConditions(f"condition {k!r} is not finite")
            items.append((k, v))
        items.sort(key=lambda kv: kv[0])
        self._items = tuple(items)
        self._map = dict(items)
        if len(self._map) != len(items):
            raise InvalidConditions("duplicate condition key")
        self._hash = hash(self._items)

    def __getitem__(self, key):
        return self._map[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._map)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, ConditionSet):
            return self._items == other._items
        return NotImplemented

    def items_tuple(self) -> tuple:
        return self._items

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"ConditionSet({inner})"


def validate_conditions(image: StaticImage, conditions: ConditionSet) -> None:
    expected = image.condition_keys()
    got = frozenset(conditions)
    if got != expected:
        raise InvalidConditions(
            f"condition keys {sorted(got)} do not match image keys {sorted(expected)}"
        )


@dataclass(frozen=True)
class Snapshot:
    seq: int
    action: ActionSpec
    conditions: ConditionSet


Subscriber = Callable[[Snapshot], None]


class DynamicImage:
    """Bounded FIFO history of snapshots with synchronous notification."""

    def __init__(self, capacity: int = DEFAULT_HISTORY, image: Optional[StaticImage] = None):
        if capacity < 1:
            raise ValueError("history capacity must be positive")
        self.capacity = capacity
        self.image = image
        self.next_seq = 0
        self._history: deque[Snapshot] = deque(maxlen=capacity)
        self._subscribers: dict[int, Subscriber] = {}
        self._next_handle = 0
        self._lock = threading.RLock()

    def record(self, action: ActionSpec, conditions: ConditionSet) -> int:
        if self.image is not None:
            validate_conditions(self.image, conditions)
        with self._lock:
            snap = Snapshot(self.next_seq, action, conditions)
            self.next_seq += 1
            self._history.append(snap)
            subscribers = list(self._subscribers.values())
        for callback in subscribers:
            callback(snap)
        return snap.seq

    def history(self) -> list[Snapshot]:
        with self._lock:
            return list(self._history)

    def add_subscriber(self, callback: Subscriber) -> int:
        with self._lock:
            handle = self._next_handle
            self._next_handle += 1
            self._subscribers[handle] = callback
            return handle

    def remove_subscriber(self, handle: int) -> None:
        with self._lock:
            self._subscribers.pop(handle, None)

    def __len__(self):
        return len(self._history)


def record_snapshot(d: DynamicImage, action: ActionSpec, conditions: ConditionSet) -> int:
    return d.record(action, conditions)


def read_history(d: DynamicImage) -> list[Snapshot]:
    return d.history()


@dataclass(frozen=True)
class Subscription:
    agent_id: str
    handle: int


class ImageIndex:
    """Shared in-process repository where agents publish their software images."""

    def __init__(self):
        self._registry: dict[str, tuple[StaticImage, DynamicImage]] = {}
        self._subscriptions: dict[str, list[Subscription]] = {}
        self._lock = threading.RLock()

    def register(self, agent_id: str, static: StaticImage, dynamic: DynamicImage) -> None:
        with self._lock:
            if agent_id in self._registry:
                raise DuplicateRegistration(agent_id)
            # dicts keep insertion order, which gives registration-time ordering
            self._registry[agent_id] = (static, dynamic)
            self._subscriptions[agent_id] = []

    def deregister(self, agent_id: str) -> None:
        with self._lock:
            if agent_id not in self._registry:
                raise UnknownAgent(agent_id)
            _, dynamic = self._registry.pop(agent_id)
            for sub in self._subscriptions.pop(agent_id):
                dynamic.remove_subscriber(sub.handle)

    def __contains__(self, agent_id):
        return agent_id in self._registry

    def lookup(self, agent_id: str) -> tuple[StaticImage, DynamicImage]:
        with self._lock:
            try:
                return self._registry[agent_id]
            except KeyError:
                raise UnknownAgent(agent_id) from None

    def find_candidates(
        self,
        observer: StaticImage,
        task: Optional[str] = None,
        ont: Optional[TaskOntology] = None,
        exclude: Optional[str] = None,
    ) -> list[str]:
        if task is not None and ont is None:
            raise UnknownTask(task)
        with self._lock:
            entries = list(self._registry.items())
        found = []
        for agent_id, (static, _) in entries:
            if agent_id == exclude:
                continue
            if task is None:
                ok = compare_static(observer, static)
            else:
                ok = supports_task(observer, static, task, ont)
            if ok:
                found.append(agent_id)
        return found

    def subscribe(self, target_id: str, callback: Subscriber) -> Subscription:
        with self._lock:
            _, dynamic = self.lookup(target_id)
            sub = Subscription(target_id, dynamic.add_subscriber(callback))
            self._subscriptions[target_id].append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            subs = self._subscriptions.get(sub.agent_id)
            if subs is None or sub not in subs:
                return
            subs.remove(sub)
            _, dynamic = self._registry[sub.agent_id]
            dynamic.remove_subscriber(sub.handle)


def register_image(idx: ImageIndex, agent_id: str, static: StaticImage, dynamic: DynamicImage) -> None:
    idx.register(agent_id, static, dynamic)


def find_candidates(idx, observer, task=None, ont=None, exclude=None) -> list[str]:
    return idx.find_candidates(observer, task, ont, exclude)


def subscribe(idx: ImageIndex, target_id: str, callback: Subscriber) -> Subscription:
    return idx.subscribe(target_id, callback)
