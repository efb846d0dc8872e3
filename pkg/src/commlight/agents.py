"""Per-intersection policies and the exploration schedule.

Each agent owns an action net (a Q-network with two hidden layers of 256
ReLU units, two outputs) and, when communication is enabled, a separate
single-layer linear communication net producing a 5-value message.  The
two nets never share parameters.

Exploration follows epsilon-greedy with a closed-form schedule: after k
environment interactions, epsilon = max(floor, start * decay**k).  The
closed form (rather than repeated multiplication) keeps the value exact
for any k, so runs can be resumed or replayed without drift.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import autodiff
from .autodiff import Tensor
from .env import N_ACTIONS, OBS_SIZE
from .nn import Mlp, load_network, save_network

MESSAGE_SIZE = 5
HIDDEN_SIZE = 256
MANIFEST_VERSION = 1
METHODS = ("iql", "dial")


class PolicyUsageError(RuntimeError):
    """A policy was used in a way its method does not support."""


class NumericError(ArithmeticError):
    """A NaN or infinity surfaced where a finite number was required."""


class EpsilonSchedule:
    """Exploration rate after k interactions: max(floor, start * decay**k)."""

    def __init__(self, start: float = 1.0, decay: float = 0.99995,
                 floor: float = 0.05, interactions: int = 0):
        if not 0.0 <= floor <= start <= 1.0:
            raise ValueError(f"need 0 <= floor <= start <= 1, got {floor}, {start}")
        if not 0.0 < decay <= 1.0:
            raise ValueError(f"decay must be in (0, 1], got {decay}")
        self.start = start
        self.decay = decay
        self.floor = floor
        self.interactions = int(interactions)

    def value_at(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"interaction count must be >= 0, got {k}")
        v = self.start * self.decay ** k
        return v if v > self.floor else self.floor

    @property
    def value(self) -> float:
        return self.value_at(self.interactions)

    def advance(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError(f"cannot advance by {n}")
        self.interactions += n


class AgentPolicy:
    """One agent's networks.

    method "iql": a single action net on the 26-value observation.
    method "dial": the action net additionally receives the other agent's
    5-value message (input width 31), and a linear comm net maps the
    observation to the outgoing message.
    """

    def __init__(self, agent_id: int, method: str = "iql",
                 rng: np.random.Generator | None = None):
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {method!r}")
        self.agent_id = agent_id
        self.method = method
        in_size = OBS_SIZE + (MESSAGE_SIZE if method == "dial" else 0)
        self.action_net = Mlp([in_size, HIDDEN_SIZE, HIDDEN_SIZE, N_ACTIONS], rng)
        self.comm_net = Mlp([OBS_SIZE, MESSAGE_SIZE], rng) if method == "dial" else None
        self.comm_calls = 0

    @property
    def uses_comm(self) -> bool:
        return self.comm_net is not None

    def q_forward(self, obs, message=None, track: bool = False):
        """Q-values for obs (and the incoming message when communicating).

        Accepts single observations (26,) or batches (n, 26); ndarray in,
        ndarray out unless track is set, in which case inputs may be graph
        tensors and the output stays on the graph.
        """
        if self.comm_net is None:
            if message is not None:
                raise PolicyUsageError(
                    f"agent {self.agent_id} does not communicate; no message expected")
            x = obs
        else:
            if message is None:
                raise PolicyUsageError(
                    f"agent {self.agent_id} needs an incoming message")
            if track:
                o = obs if isinstance(obs, Tensor) else Tensor(np.asarray(obs, dtype=np.float64))
                m = message if isinstance(message, Tensor) else Tensor(np.asarray(message, dtype=np.float64))
                x = autodiff.concat([o, m])
            else:
                x = np.concatenate([np.asarray(obs, dtype=np.float64),
                                    np.asarray(message, dtype=np.float64)], axis=-1)
        return self.action_net.forward(x, track=track)

    def compute_message(self, obs, track: bool = False):
        """Outgoing message m = W obs + b; counts invocations so ablated
        rollouts can prove they never consulted the comm policy."""
        if self.comm_net is None:
            raise PolicyUsageError(f"agent {self.agent_id} has no communication policy")
        self.comm_calls += 1
        return self.comm_net.forward(obs, track=track)

    def networks(self) -> list[Mlp]:
        nets = [self.action_net]
        if self.comm_net is not None:
            nets.append(self.comm_net)
        return nets

    def parameters(self):
        return [p for net in self.networks() for p in net.parameters()]


def select_action(qvalues, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice between the two signal actions.

    Greedy ties resolve to action 0, so adding a constant to both Q-values
    never changes the greedy pick.
    """
    q = np.asarray(qvalues, dtype=np.float64).reshape(-1)
    if q.shape[0] != N_ACTIONS:
        raise ValueError(f"expected {N_ACTIONS} Q-values, got shape {q.shape}")
    if np.isnan(q).any():
        raise NumericError(f"NaN Q-value in {q}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, N_ACTIONS))
    return int(np.argmax(q))


def greedy_actions(qvalues: np.ndarray) -> np.ndarray:
    """Row-wise argmax with ties to index 0, for batched greedy rollouts."""
    q = np.asarray(qvalues, dtype=np.float64)
    if np.isnan(q).any():
        raise NumericError("NaN Q-value in greedy action selection")
    return np.argmax(q, axis=-1)


def init_policies(method: str, seed: int) -> list[AgentPolicy]:
    """Both agents' freshly initialized policies, deterministic in seed."""
    return [AgentPolicy(a, method, rng=np.random.default_rng([int(seed), a]))
            for a in range(2)]


def save_policies(policies, directory, extra: dict | None = None) -> str:
    """Write one checkpoint document per network plus a manifest.

    Returns the manifest path.  The manifest records the method, per-agent
    network files and roles, and any extra metadata passed in.
    """
    os.makedirs(directory, exist_ok=True)
    agents = []
    for pol in policies:
        entry = {"id": pol.agent_id, "action_net": f"agent{pol.agent_id}_action.json"}
        save_network(pol.action_net, os.path.join(directory, entry["action_net"]))
        if pol.comm_net is not None:
            entry["comm_net"] = f"agent{pol.agent_id}_comm.json"
            save_network(pol.comm_net, os.path.join(directory, entry["comm_net"]))
        agents.append(entry)
    manifest = {
        "version": MANIFEST_VERSION,
        "method": policies[0].method,
        "agents": agents,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(directory, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path


def load_policies(path) -> tuple[list[AgentPolicy], dict]:
    """Load a checkpoint from its manifest (or containing directory)."""
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    directory = os.path.dirname(path)
    method = manifest["method"]
    policies = []
    for entry in sorted(manifest["agents"], key=lambda e: e["id"]):
        pol = AgentPolicy(entry["id"], method)
        pol.action_net = load_network(os.path.join(directory, entry["action_net"]))
        if method == "dial":
            pol.comm_net = load_network(os.path.join(directory, entry["comm_net"]))
        policies.append(pol)
    return policies, manifest
