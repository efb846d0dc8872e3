"""Two-agent Dec-MDP interface over the traffic simulation.

Each intersection is one agent.  An agent observes 26 values describing
its four approach lanes plus its own signal state, both agents act
simultaneously ({0: keep, 1: switch}), and both receive the identical
team reward: the negative mean accumulated waiting time over every
vehicle currently in the network.  Episodes have a fixed length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import SimConfig, SteppingFinishedError, TrafficSim

OBS_SIZE = 26
N_ACTIONS = 2
EPISODE_LEN = 200


@dataclass
class JointStep:
    """Result of one environment step, shared by both agents."""
    observations: np.ndarray  # (2, 26), row a is agent a's view
    actions: tuple[int, int]
    reward: float             # identical for both agents
    done: bool


def build_observation(sim: TrafficSim, agent: int) -> np.ndarray:
    """Agent's 26-value observation of the current simulator state."""
    if agent not in (0, 1):
        raise ValueError(f"agent must be 0 or 1, got {agent!r}")
    return sim.observe()[agent].copy()


def compute_reward(sim: TrafficSim) -> float:
    """Team reward: negative mean accumulated wait over present vehicles."""
    return sim.compute_reward()


class TrafficEnv:
    """Episode wrapper: reset with a seed and a fixed inflow, step jointly.

    The inflow probability is sampled by the caller and stays constant for
    the whole episode.
    """

    def __init__(self, config: SimConfig | None = None, episode_len: int = EPISODE_LEN):
        self.config = config if config is not None else SimConfig()
        self.episode_len = episode_len
        self.sim: TrafficSim | None = None
        self.inflow_p = 0.0
        self.t = 0

    def reset(self, seed, inflow_p: float) -> np.ndarray:
        """Start a fresh empty-network episode; returns both observations (2, 26)."""
        if not 0.0 <= inflow_p <= 1.0:
            raise ValueError(f"inflow probability must be in [0, 1], got {inflow_p!r}")
        self.sim = TrafficSim(self.config, seed=seed)
        self.inflow_p = inflow_p
        self.t = 0
        return self.sim.observe()

    def step(self, actions) -> JointStep:
        if self.sim is None:
            raise SteppingFinishedError("environment not reset")
        if self.t >= self.episode_len:
            raise SteppingFinishedError(
                f"episode already finished after {self.episode_len} steps; reset first")
        a0, a1 = int(actions[0]), int(actions[1])
        reward = self.sim.tick((a0, a1), self.inflow_p)
        self.t += 1
        obs = self.sim.observe()
        return JointStep(observations=obs, actions=(a0, a1), reward=reward,
                         done=self.t >= self.episode_len)

    @property
    def done(self) -> bool:
        return self.sim is not None and self.t >= self.episode_len
