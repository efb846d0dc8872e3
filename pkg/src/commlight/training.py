"""Training loop: epochs of parallel episodes, TD loss, one Adam step.

One epoch rolls out a batch of fixed-length episodes (7 by default), each
with its own inflow probability drawn uniformly from the configured range
and its own derived RNG streams.  Episodes advance in lockstep along the
batch axis, which is arithmetically identical to running them one after
another: every episode uses its own spawn/exploration streams, and the
exploration rate at step t of episode b is evaluated in closed form at
interaction index base + b*episode_len + t.

With method "dial" the message sent by an agent at step t is consumed by
the other agent at step t+1 (step 0 consumes a zero message).  During
training messages stay on the autodiff graph, so the backward pass of a
receiver's TD loss deposits gradients in the sender's communication net.
TD targets bootstrap from the next step's own acting Q-values, detached;
the final step of an episode uses the bare reward as target.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, fields

import numpy as np

from . import autodiff
from .agents import (AgentPolicy, EpsilonSchedule, NumericError, PolicyUsageError,
                     greedy_actions, init_policies, save_policies, select_action)
from .config import ConfigError, coerce, parse_kv_file
from .env import EPISODE_LEN, TrafficEnv
from .nn import adam_step, td_loss
from .sim import SimConfig

MESSAGE_SIZE = 5


@dataclass
class TrainConfig:
    method: str = "iql"
    seed: int = 0
    epochs: int = 2000
    gamma: float = 0.99
    lr: float = 0.0005
    eps_start: float = 1.0
    eps_decay: float = 0.99995
    eps_min: float = 0.05
    episodes_per_epoch: int = 7
    episode_len: int = EPISODE_LEN
    inflow_min: float = 0.001
    inflow_max: float = 0.6
    checkpoint_every: int = 500

    def __post_init__(self):
        if self.method not in ("iql", "dial"):
            raise ConfigError(f"invalid value for 'method': {self.method!r} (iql or dial)")
        if self.epochs < 0:
            raise ConfigError("invalid value for 'epochs': must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("invalid value for 'gamma': must be in [0, 1]")
        if self.lr < 0:
            raise ConfigError("invalid value for 'lr': must be >= 0")
        if self.episodes_per_epoch < 1 or self.episode_len < 1:
            raise ConfigError("invalid value for 'episodes_per_epoch'/'episode_len': must be >= 1")
        if not 0.0 <= self.inflow_min <= self.inflow_max <= 1.0:
            raise ConfigError("invalid value for 'inflow_min'/'inflow_max': need 0 <= min <= max <= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("invalid value for 'checkpoint_every': must be >= 1")

    @classmethod
    def from_pairs(cls, pairs: dict[str, str]) -> "TrainConfig":
        kinds = {f.name: type(f.default) for f in fields(cls)}
        kwargs = {}
        for key, raw in pairs.items():
            if key not in kinds:
                raise ConfigError(f"unknown training config key {key!r}")
            kwargs[key] = coerce(key, raw, kinds[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_pairs(parse_kv_file(path))


def planned_interactions(cfg: TrainConfig) -> int:
    """Environment interactions a full run will consume, without running."""
    return cfg.epochs * cfg.episodes_per_epoch * cfg.episode_len


@dataclass
class Trajectory:
    """One epoch's batch of episodes, step-major.

    q_values[a][t] holds agent a's Q outputs at step t for every episode
    (graph tensors in train mode, plain arrays in eval mode); q_taken[a][t]
    the Q-value of the action actually taken.  messages[a][t] is the
    message agent a sent at step t (zeros when not communicating; the
    final step sends none since nothing consumes it).
    """
    mode: str                      # "train" or "eval"
    observations: np.ndarray       # (2, T, B, 26)
    actions: np.ndarray            # (2, T, B) ints
    rewards: np.ndarray            # (T, B), shared by both agents
    messages: np.ndarray           # (2, T, B, 5)
    q_values: list                 # [agent][t] -> (B, 2)
    q_taken: list                  # [agent][t] -> (B,)

    @property
    def episode_returns(self) -> np.ndarray:
        return self.rewards.sum(axis=0)


def _episode_seed(seed: int, epoch: int, episode: int) -> list[int]:
    return [int(seed), int(epoch), int(episode)]


def rollout_episodes(policies: list[AgentPolicy], envs: list[TrafficEnv],
                     mode: str, schedule: EpsilonSchedule | None = None,
                     base_interactions: int = 0, explore_rngs=None,
                     messages_override: np.ndarray | None = None,
                     record_full: bool = True) -> Trajectory:
    """Advance every (already reset) env to episode end in lockstep.

    In train mode Q-values and messages stay graph-tracked and actions are
    epsilon-greedy using explore_rngs[agent][episode] plus the schedule.
    In eval mode everything is plain arrays and actions are greedy.
    messages_override, shape (2, 5), replaces per-step communication with
    fixed vectors (the communication nets are then never invoked).
    record_full=False keeps only actions and rewards, for long greedy
    sweeps where per-step observations would dominate memory.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and not record_full:
        raise ValueError("train mode needs the full record")
    track = mode == "train"
    dial = policies[0].uses_comm
    n_ep = len(envs)
    ep_len = envs[0].episode_len
    obs_size = policies[0].action_net.input_size - (MESSAGE_SIZE if dial else 0)

    observations = np.zeros((2, ep_len if record_full else 1, n_ep, obs_size))
    actions = np.zeros((2, ep_len, n_ep), dtype=np.int64)
    rewards = np.zeros((ep_len, n_ep))
    messages = np.zeros((2, ep_len if record_full else 0, n_ep, MESSAGE_SIZE))
    q_values = [[], []]
    q_taken = [[], []]

    obs_now = np.stack([env.sim.observe() for env in envs], axis=1)  # (2, B, 26)
    incoming = [None, None]
    if dial:
        if messages_override is not None:
            frozen = np.asarray(messages_override, dtype=np.float64)
            incoming = [np.repeat(frozen[a][None, :], n_ep, axis=0) for a in range(2)]
        else:
            incoming = [np.zeros((n_ep, MESSAGE_SIZE)) for _ in range(2)]

    for t in range(ep_len):
        q_step = []
        t_slot = t if record_full else 0
        for a in range(2):
            # write once, then always read from the persistent slice: graph
            # tensors keep a reference to their input data, and obs_now is
            # overwritten every step
            observations[a, t_slot] = obs_now[a]
            obs_in = observations[a, t_slot]
            if dial:
                msg_in = incoming[a]
                if track and not isinstance(msg_in, autodiff.Tensor):
                    msg_in = autodiff.Tensor(msg_in)
                q = policies[a].q_forward(obs_in, msg_in, track=track)
            else:
                q = policies[a].q_forward(obs_in, track=track)
            q_step.append(q)
            if record_full:
                q_values[a].append(q)

        step_actions = np.zeros((2, n_ep), dtype=np.int64)
        for a in range(2):
            q_data = q_step[a].data if track else q_step[a]
            if mode == "eval":
                step_actions[a] = greedy_actions(q_data)
            else:
                for b in range(n_ep):
                    eps = schedule.value_at(base_interactions + b * ep_len + t)
                    step_actions[a, b] = select_action(q_data[b], eps, explore_rngs[a][b])
        actions[:, t] = step_actions

        for a in range(2):
            if track:
                q_taken[a].append(autodiff.gather_rows(q_step[a], step_actions[a]))
            elif record_full:
                q_taken[a].append(q_step[a][np.arange(n_ep), step_actions[a]])

        # messages for the next step (none sent on the final step)
        if dial and messages_override is None and t < ep_len - 1:
            nxt = []
            for a in range(2):
                m = policies[a].compute_message(observations[a, t_slot], track=track)
                if record_full:
                    messages[a, t] = m.data if track else m
                nxt.append(m)
            incoming = [nxt[1], nxt[0]]

        for b, env in enumerate(envs):
            step = env.step((step_actions[0, b], step_actions[1, b]))
            rewards[t, b] = step.reward
            obs_now[:, b, :] = step.observations

    return Trajectory(mode=mode, observations=observations, actions=actions,
                      rewards=rewards, messages=messages,
                      q_values=q_values, q_taken=q_taken)


def rollout_episode(policies, env: TrafficEnv, mode: str = "eval",
                    schedule: EpsilonSchedule | None = None,
                    base_interactions: int = 0, explore_rngs=None,
                    messages_override=None) -> Trajectory:
    """Single-episode convenience wrapper (batch of one)."""
    rngs = None
    if explore_rngs is not None:
        rngs = [[explore_rngs[0]], [explore_rngs[1]]]
    return rollout_episodes(policies, [env], mode, schedule, base_interactions,
                            rngs, messages_override)


def compute_td_targets(traj: Trajectory, gamma: float) -> list[np.ndarray]:
    """Per-agent detached targets, shape (T, B).

    target_t = r_t + gamma * max_u Q_{t+1}(u); the final step has no
    successor and targets the bare reward.  The bootstrap reuses the next
    step's own acting Q-values, so it sees exactly the message that step
    consumed.
    """
    ep_len, n_ep = traj.rewards.shape
    out = []
    for a in range(2):
        targets = traj.rewards.copy()
        for t in range(ep_len - 1):
            q_next = traj.q_values[a][t + 1]
            q_data = q_next.data if isinstance(q_next, autodiff.Tensor) else q_next
            targets[t] += gamma * q_data.max(axis=1)
        out.append(targets)
    return out


def compute_dial_loss(traj: Trajectory, gamma: float,
                      targets: list[np.ndarray] | None = None) -> autodiff.Tensor:
    """Scalar loss: sum over agents of the mean squared TD error.

    With communication the backward pass reaches the sending agent's comm
    parameters through the received messages; without it the two terms are
    fully independent.
    """
    if traj.mode != "train":
        raise PolicyUsageError("loss needs a train-mode trajectory with a live graph")
    if targets is None:
        targets = compute_td_targets(traj, gamma)
    loss = None
    for a in range(2):
        term = td_loss(traj.q_taken[a], targets[a])
        loss = term if loss is None else autodiff.add(loss, term)
    return loss


@dataclass
class EpochMetrics:
    epoch: int
    mean_return: float
    epsilon: float
    loss: float
    seconds: float


def train_epoch(policies: list[AgentPolicy], cfg: TrainConfig, epoch: int,
                schedule: EpsilonSchedule, sim_config: SimConfig | None = None,
                clock=time.perf_counter) -> EpochMetrics:
    """One training iteration: rollout batch, loss, one Adam step per net."""
    t0 = clock()
    n_ep = cfg.episodes_per_epoch
    inflow_rng = np.random.default_rng([cfg.seed, 0xC0FFEE, epoch])
    inflows = inflow_rng.uniform(cfg.inflow_min, cfg.inflow_max, size=n_ep)

    envs = []
    for b in range(n_ep):
        env = TrafficEnv(sim_config, episode_len=cfg.episode_len)
        env.reset(seed=_episode_seed(cfg.seed, epoch, b), inflow_p=inflows[b])
        envs.append(env)
    explore_rngs = [[np.random.default_rng([cfg.seed, epoch, b, a]) for b in range(n_ep)]
                    for a in range(2)]

    base = schedule.interactions
    traj = rollout_episodes(policies, envs, "train", schedule, base, explore_rngs)
    loss = compute_dial_loss(traj, cfg.gamma)
    loss_val = float(loss.data)
    if not np.isfinite(loss_val):
        raise NumericError(f"non-finite loss {loss_val} at epoch {epoch}; training halted")
    loss.backward()
    for pol in policies:
        for net in pol.networks():
            adam_step(net, cfg.lr)
    schedule.advance(n_ep * cfg.episode_len)

    mean_return = float(traj.episode_returns.mean())
    return EpochMetrics(epoch=epoch, mean_return=mean_return,
                        epsilon=schedule.value, loss=loss_val,
                        seconds=clock() - t0)


METRICS_HEADER = "epoch,mean_return,epsilon,loss,seconds"


@dataclass
class TrainResult:
    out_dir: str
    metrics: list[EpochMetrics]
    interactions: int
    best_epoch: int | None
    checkpoint_dirs: dict[str, str]


def train(cfg: TrainConfig, out_dir, sim_config: SimConfig | None = None,
          clock=time.perf_counter, log=None) -> TrainResult:
    """Full run: init nets, epochs of train_epoch, metrics CSV, checkpoints.

    Checkpoints land in <out_dir>/checkpoints/: the initial parameters
    (init), every checkpoint_every epochs (epoch_NNNNN), the best
    mean-return epoch so far (best, overwritten on improvement), and the
    end of the run (final).  Metrics append one row per epoch.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    metrics_fh = open(metrics_path, "w", encoding="utf-8")

    try:
        metrics_fh.write(METRICS_HEADER + "\n")
        metrics_fh.flush()
        policies = init_policies(cfg.method, cfg.seed)
        schedule = EpsilonSchedule(cfg.eps_start, cfg.eps_decay, cfg.eps_min)
        ckpt_root = os.path.join(out_dir, "checkpoints")
        dirs = {"init": os.path.join(ckpt_root, "init")}
        save_policies(policies, dirs["init"], extra={"epoch": 0, "interactions": 0})

        metrics = []
        best = -np.inf
        best_epoch = None
        for epoch in range(cfg.epochs):
            m = train_epoch(policies, cfg, epoch, schedule, sim_config, clock)
            metrics.append(m)
            metrics_fh.write(f"{m.epoch},{m.mean_return!r},{m.epsilon!r},"
                             f"{m.loss!r},{m.seconds!r}\n")
            metrics_fh.flush()
            if log is not None:
                log(m)
            extra = {"epoch": epoch + 1, "interactions": schedule.interactions,
                     "mean_return": m.mean_return}
            if (epoch + 1) % cfg.checkpoint_every == 0:
                name = f"epoch_{epoch + 1:05d}"
                dirs[name] = os.path.join(ckpt_root, name)
                save_policies(policies, dirs[name], extra=extra)
            if m.mean_return > best:
                best = m.mean_return
                best_epoch = epoch
                dirs["best"] = os.path.join(ckpt_root, "best")
                save_policies(policies, dirs["best"], extra=extra)
        if cfg.epochs > 0:
            dirs["final"] = os.path.join(ckpt_root, "final")
            save_policies(policies, dirs["final"],
                          extra={"epoch": cfg.epochs, "interactions": schedule.interactions})
        return TrainResult(out_dir=out_dir, metrics=metrics,
                           interactions=schedule.interactions,
                           best_epoch=best_epoch, checkpoint_dirs=dirs)
    finally:
        metrics_fh.close()
