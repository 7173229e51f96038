"""Decentralized collision-aware inverse kinematics with a scenario simulator."""

from .costs import CostWeights, GoalSpec, ResidualBlock, apply_robust_loss
from .kinematics import (
    ArmState,
    Pose,
    WorldSpheres,
    backward_difference_derivatives,
    end_effector_pose,
    filter_derivatives,
    forward_kinematics,
    sphere_world_positions,
)
from .model import (
    AllowedCollisionMatrix,
    DescriptionError,
    RobotModel,
    build_acm,
    decompose_link_spheres,
    load_robot_model,
    parse_robot_description,
)
from .proximity import ActivePair, ProximityConfig, find_active_pairs
from .solver import SolveRequest, SolveResult, SolverConfig, solve

__all__ = [
    "AllowedCollisionMatrix",
    "ActivePair",
    "ArmState",
    "CostWeights",
    "DescriptionError",
    "GoalSpec",
    "Pose",
    "ProximityConfig",
    "ResidualBlock",
    "RobotModel",
    "SolveRequest",
    "SolveResult",
    "SolverConfig",
    "WorldSpheres",
    "apply_robust_loss",
    "backward_difference_derivatives",
    "build_acm",
    "decompose_link_spheres",
    "end_effector_pose",
    "filter_derivatives",
    "find_active_pairs",
    "forward_kinematics",
    "load_robot_model",
    "parse_robot_description",
    "solve",
    "sphere_world_positions",
]

__version__ = "0.1.0"
