"""Single agile satellite observation scheduling with a PPO search."""

from .instance_model import (
    Instance,
    OrbitElements,
    SatelliteConfig,
    Target,
    TaskSpec,
    load_bundled_instance,
    bundled_targets,
    parse_instance,
    serialize_instance,
    total_reward,
)
from .environment import reset, step, screen, conflict, features, validate_schedule
from .baselines import exact, fcfs, greedy_reward, random_policy
from .ppo_engine import TrainConfig, TrainResult, train

__version__ = "0.1.0"
