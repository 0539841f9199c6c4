"""Under-powered car in a sinusoidal valley that must rock itself to the goal."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..software_image import ActionSpec, ActuatorSpec, ConditionSet, PartSpec, StaticImage, TaskOntology

BACKWARD = ActionSpec("accelerate-backward")
COAST = ActionSpec("coast")
FORWARD = ActionSpec("accelerate-forward")

ACTIONS = (BACKWARD, COAST, FORWARD)
THRUST = {BACKWARD: -1, COAST: 0, FORWARD: 1}
BY_THRUST = {v: k for k, v in THRUST.items()}

POSITION_KEY = "position"
VELOCITY_KEY = "velocity"


@dataclass(frozen=True)
class PhysicsParams:
    x_min: float = -1.2
    x_max: float = 0.6
    v_max: float = 0.07
    force: float = 0.001
    gravity_coeff: float = 0.0025
    goal_position: float = 0.5
    start_position: float = -0.5
    start_velocity: float = 0.0

    def __post_init__(self):
        if not self.x_min < self.goal_position <= self.x_max:
            raise ValueError("goal must lie in (x_min, x_max]")
        if not (self.force > 0 and self.gravity_coeff > 0 and self.v_max > 0):
            raise ValueError("force, gravity_coeff and v_max must be positive")
        if not self.x_min <= self.start_position <= self.x_max:
            raise ValueError("start position outside the track")


@dataclass(frozen=True)
class MountainState:
    position: float
    velocity: float

    def conditions(self) -> ConditionSet:
        return ConditionSet({POSITION_KEY: self.position, VELOCITY_KEY: self.velocity})


def start_state(p: PhysicsParams = PhysicsParams()) -> MountainState:
    return MountainState(p.start_position, p.start_velocity)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def mountain_step(st: MountainState, a: int, p: PhysicsParams = PhysicsParams()) -> MountainState:
    if a not in (-1, 0, 1):
        raise ValueError(f"thrust must be -1, 0 or +1, got {a!r}")
    v = _clamp(st.velocity + p.force * a - p.gravity_coeff * math.cos(3 * st.position), -p.v_max, p.v_max)
    x = _clamp(st.position + v, p.x_min, p.x_max)
    if x <= p.x_min and v < 0:
        v = 0.0
    return MountainState(x, v)


def at_goal(st: MountainState, p: PhysicsParams = PhysicsParams()) -> bool:
    return st.position >= p.goal_position


def mountain_expert_action(st: MountainState, p: PhysicsParams = PhysicsParams()) -> int:
    if st.velocity > 0:
        return 1
    if st.velocity < 0:
        return -1
    return 0 if at_goal(st, p) else -1


@dataclass(frozen=True)
class AttemptResult:
    steps: int
    distance: float
    reached_goal: bool
    actions: tuple[int, ...]


def run_attempt(policy, p: PhysicsParams = PhysicsParams(), max_steps: int = 500) -> AttemptResult:
    """Drive one attempt from the start state with policy(state) -> thrust."""
    st = start_state(p)
    distance = 0.0
    actions = []
    for t in range(1, max_steps + 1):
        a = policy(st)
        actions.append(a)
        nxt = mountain_step(st, a, p)
        distance += abs(nxt.position - st.position)
        st = nxt
        if at_goal(st, p):
            return AttemptResult(t, distance, True, tuple(actions))
    return AttemptResult(max_steps, distance, False, tuple(actions))


def car_static_image() -> StaticImage:
    return StaticImage(
        (
            PartSpec(
                "car",
                sensors=(POSITION_KEY, VELOCITY_KEY),
                actuators=(ActuatorSpec("engine", ACTIONS),),
            ),
        )
    )


def car_ontology() -> TaskOntology:
    return TaskOntology({"reach-goal": frozenset({POSITION_KEY, VELOCITY_KEY, "engine"})})
