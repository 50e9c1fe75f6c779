"""Built-in environments, synthetic policies and the rollout harness."""

from .envs import (
    BanditTurntable,
    DiscreteBandit,
    Environment,
    MountainCar,
    Pendulum,
    make_mountain_car,
    make_pendulum,
    wrap_angle,
)
from .policies import (
    BoltzmannDensity,
    LatticeAgent,
    SyntheticPolicy,
    UniformPolicy,
    act_embedded,
    boltzmann,
    make_mountain_car_policy,
    make_pendulum_policy,
    make_turntable,
    mountain_car_controller,
    pendulum_controller,
    state_bin_index,
    uniform_action_bins,
)
from .rollout import RolloutResult, rollout, trajectory_rngs

ENVIRONMENTS = {"pendulum": make_pendulum, "cmc": make_mountain_car}

__all__ = [
    "Environment",
    "Pendulum",
    "MountainCar",
    "BanditTurntable",
    "DiscreteBandit",
    "SyntheticPolicy",
    "UniformPolicy",
    "BoltzmannDensity",
    "LatticeAgent",
    "RolloutResult",
    "ENVIRONMENTS",
    "act_embedded",
    "boltzmann",
    "make_pendulum",
    "make_mountain_car",
    "make_pendulum_policy",
    "make_mountain_car_policy",
    "make_turntable",
    "mountain_car_controller",
    "pendulum_controller",
    "rollout",
    "state_bin_index",
    "trajectory_rngs",
    "uniform_action_bins",
    "wrap_angle",
]
