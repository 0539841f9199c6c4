from .hand import (
    HandEnv,
    HandState,
    NumberSource,
    OutOfRange,
    expert_policy,
    hand_expert_actions,
    hand_target,
    source_reset,
    source_step,
)
from .mountain import MountainState, PhysicsParams, mountain_expert_action, mountain_step
from .qlearning import QLearner, QParams, q_select, q_update

__all__ = [
    "HandEnv",
    "HandState",
    "NumberSource",
    "OutOfRange",
    "expert_policy",
    "hand_expert_actions",
    "hand_target",
    "source_reset",
    "source_step",
    "MountainState",
    "PhysicsParams",
    "mountain_expert_action",
    "mountain_step",
    "QLearner",
    "QParams",
    "q_select",
    "q_update",
]
