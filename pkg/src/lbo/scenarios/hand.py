"""Virtual hand that shows numbers requested by a resettable number source."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ..software_image import (
    ActionSpec,
    ActuatorSpec,
    ConditionSet,
    PartSpec,
    StaticImage,
    TaskOntology,
    flatten,
)

UP = "UP"
DOWN = "DOWN"
ACTIVE = "ACTIVE"
INACTIVE = "INACTIVE"
NO_NUMBER = "none"

FINGERS = ("thumb", "index", "middle", "ring", "pinky")
# order in which fingers go up as the number grows
RAISE_ORDER = ("index", "middle", "ring", "pinky", "thumb")

NUMBER_KEY = "number"
SOURCE_KEY = "source-status"

RESET = ActionSpec("reset-source")


class OutOfRange(ValueError):
    pass


def finger_action(finger: str, up: bool) -> ActionSpec:
    return ActionSpec(f"{'raise' if up else 'lower'}-{finger}")


FINGER_ACTIONS = {(f, up): finger_action(f, up) for f in FINGERS for up in (True, False)}


@dataclass(frozen=True)
class HandState:
    thumb: str = DOWN
    index: str = DOWN
    middle: str = DOWN
    ring: str = DOWN
    pinky: str = DOWN

    def __post_init__(self):
        for f in FINGERS:
            if getattr(self, f) not in (UP, DOWN):
                raise ValueError(f"finger {f} must be UP or DOWN")

    def fingers(self) -> dict[str, str]:
        return {f: getattr(self, f) for f in FINGERS}

    def with_finger(self, finger: str, value: str) -> "HandState":
        vals = self.fingers()
        vals[finger] = value
        return HandState(**vals)

    def shown_number(self) -> Optional[int]:
        for n in range(1, 6):
            if self == hand_target(n):
                return n
        return None


def hand_target(n: int) -> HandState:
    if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= 5:
        raise OutOfRange(f"hand can show 1..5, got {n!r}")
    raised = set(RAISE_ORDER[:n])
    return HandState(**{f: (UP if f in raised else DOWN) for f in FINGERS})


def hand_expert_actions(current: HandState, n: int) -> list[ActionSpec]:
    """Per-finger moves turning current into n, in thumb..pinky order."""
    target = hand_target(n)
    return [
        FINGER_ACTIONS[(f, getattr(target, f) == UP)]
        for f in FINGERS
        if getattr(current, f) != getattr(target, f)
    ]


def apply_finger_actions(hand: HandState, actions) -> HandState:
    for act in actions:
        verb, finger = act.designation.split("-", 1)
        hand = hand.with_finger(finger, UP if verb == "raise" else DOWN)
    return hand


def bundle(actions: list[ActionSpec]) -> ActionSpec:
    """One move stays simple; several are published as a single composite."""
    if len(actions) == 1:
        return actions[0]
    return ActionSpec.composite(actions)


@dataclass
class NumberSource:
    sequence: list[int]
    cursor: int = 0
    status: str = ACTIVE

    def __post_init__(self):
        if not self.sequence:
            raise ValueError("number source needs a non-empty sequence")
        for n in self.sequence:
            hand_target(n)
        if self.cursor >= len(self.sequence):
            self.status = INACTIVE


def source_step(s: NumberSource) -> Optional[int]:
    if s.status == INACTIVE:
        return None
    n = s.sequence[s.cursor]
    s.cursor += 1
    if s.cursor >= len(s.sequence):
        s.status = INACTIVE
    return n


def source_reset(s: NumberSource) -> None:
    s.cursor = 0
    s.status = ACTIVE


# -- images ------------------------------------------------------------------


def hand_static_image() -> StaticImage:
    finger_parts = [
        PartSpec(
            f,
            visible_attributes=(f,),
            actuators=(ActuatorSpec(f"{f}-muscle", (finger_action(f, True), finger_action(f, False))),),
        )
        for f in FINGERS
    ]
    reader = PartSpec(
        "number-reader",
        sensors=(NUMBER_KEY, SOURCE_KEY),
        actuators=(ActuatorSpec("source-switch", (RESET,)),),
    )
    return StaticImage(tuple(finger_parts) + (reader,))


def hand_ontology() -> TaskOntology:
    return TaskOntology(
        {
            "display-number": frozenset(FINGERS + (NUMBER_KEY,)),
            "refresh-source": frozenset({SOURCE_KEY, "source-switch", RESET.designation}),
        }
    )


# -- environment -------------------------------------------------------------


@dataclass
class HandEnv:
    """One agent's hand plus its private number source.

    pending is the number waiting to be shown (None once the source ran dry).
    A failed move leaves the hand as it was and, while a number is pending,
    that number is lost and the next one drawn.
    """

    source: NumberSource
    hand: HandState = field(default_factory=HandState)
    pending: Optional[int] = None

    def __post_init__(self):
        self._draw()

    def _draw(self) -> None:
        self.pending = source_step(self.source)
        while self.pending is not None and self.hand == hand_target(self.pending):
            self.pending = source_step(self.source)

    def conditions(self) -> ConditionSet:
        entries = self.hand.fingers()
        entries[NUMBER_KEY] = str(self.pending) if self.pending is not None else NO_NUMBER
        entries[SOURCE_KEY] = self.source.status
        return ConditionSet(entries)

    def expert_action(self) -> ActionSpec:
        if self.pending is None:
            return RESET
        return bundle(hand_expert_actions(self.hand, self.pending))

    def execute(self, action: ActionSpec) -> bool:
        if action == RESET:
            if self.source.status != INACTIVE:
                self._miss()
                return False
            source_reset(self.source)
            self._draw()
            return True
        moves = flatten(action)
        if self.pending is None or any(m == RESET for m in moves):
            return False
        result = apply_finger_actions(self.hand, moves)
        if result != hand_target(self.pending):
            self._miss()
            return False
        self.hand = result
        self._draw()
        return True

    def _miss(self) -> None:
        if self.pending is not None:
            self._draw()


def expert_policy(conditions: ConditionSet) -> ActionSpec:
    """The oracle: what an expert does when facing these conditions."""
    hand = HandState(**{f: conditions[f] for f in FINGERS})
    number = conditions[NUMBER_KEY]
    if number == NO_NUMBER:
        return RESET
    return bundle(hand_expert_actions(hand, int(number)))


def random_sequence(rng: random.Random, length: int) -> list[int]:
    """Numbers 1..5 with no value repeated back to back."""
    seq: list[int] = []
    for _ in range(length):
        choices = [n for n in range(1, 6) if not seq or n != seq[-1]]
        seq.append(rng.choice(choices))
    return seq


MIN_LEN = 8
MAX_LEN = 16


def make_sequences(setting: str, count: int, rng: random.Random) -> list[list[int]]:
    """count sequences for the given setting; index 0 belongs to the apprentice.

    exp1: everyone gets the same sequence.  exp2: every source has its own
    sequence with its own length, so count can not exceed the number of
    available lengths.
    """
    if setting == "exp1":
        seq = random_sequence(rng, rng.randint(MIN_LEN, MAX_LEN))
        return [list(seq) for _ in range(count)]
    if setting == "exp2":
        lengths = list(range(MIN_LEN, MAX_LEN + 1))
        if count > len(lengths):
            raise ValueError(
                f"exp2 needs distinct sequence lengths in {MIN_LEN}..{MAX_LEN}; "
                f"at most {len(lengths) - 1} experts are possible"
            )
        chosen = rng.sample(lengths, count)
        seqs: list[list[int]] = []
        for n in chosen:
            while True:
                seq = random_sequence(rng, n)
                if seq not in seqs:
                    break
            seqs.append(seq)
        return seqs
    raise ValueError(f"unknown hand setting {setting!r}")
