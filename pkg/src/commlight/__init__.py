"""Two traffic-signal agents learning to communicate.

A self-contained comparison of independent Q-learning (IQL) against
differentiable inter-agent communication (DIAL) on a built-in
two-intersection traffic micro-simulation: numpy-only networks trained
with a small reverse-mode autodiff engine, a deterministic seeded
simulator, and CSV/JSON experiment outputs.
"""

from .autodiff import (AutodiffError, DimensionError, GraphConsumedError, Tensor,
                       add, concat, gather_rows, linear, mean, mul, relu, square,
                       stack, sub, total)
from .agents import (AgentPolicy, EpsilonSchedule, NumericError, PolicyUsageError,
                     greedy_actions, init_policies, load_policies, save_policies,
                     select_action)
from .config import ConfigError, parse_kv_file, parse_kv_text
from .env import EPISODE_LEN, JointStep, TrafficEnv, build_observation, compute_reward
from .evaluation import (DEFAULT_INFLOWS, EvalReport, evaluate,
                         freeze_no_comm_message, read_report_csv,
                         sentinel_observations, write_report_csv, write_report_json)
from .nn import (Mlp, adam_step, load_network, network_from_doc, network_to_doc,
                 save_network, td_loss)
from .sim import (SignalController, SimConfig, StateDumpWriter, SteppingFinishedError,
                  TrafficSim, VehicleView)
from .training import (EpochMetrics, TrainConfig, TrainResult, Trajectory,
                       compute_dial_loss, compute_td_targets, planned_interactions,
                       rollout_episode, rollout_episodes, train, train_epoch)

__version__ = "0.1.0"

__all__ = [
    "AgentPolicy", "AutodiffError", "ConfigError", "DimensionError",
    "DEFAULT_INFLOWS", "EPISODE_LEN", "EpochMetrics", "EpsilonSchedule",
    "EvalReport", "GraphConsumedError", "JointStep", "Mlp", "NumericError",
    "PolicyUsageError", "SignalController", "SimConfig", "StateDumpWriter",
    "SteppingFinishedError", "Tensor", "TrafficEnv", "TrafficSim", "TrainConfig",
    "TrainResult", "Trajectory", "VehicleView", "adam_step", "add",
    "build_observation", "compute_dial_loss", "compute_reward",
    "compute_td_targets", "concat", "evaluate", "freeze_no_comm_message",
    "gather_rows", "greedy_actions", "init_policies", "linear", "load_network",
    "load_policies", "mean", "mul", "network_from_doc", "network_to_doc",
    "planned_interactions", "read_report_csv", "relu", "rollout_episode",
    "rollout_episodes", "save_network", "save_policies", "select_action",
    "sentinel_observations", "square", "stack", "sub", "td_loss", "total",
    "train", "train_epoch", "write_report_csv", "write_report_json",
]
