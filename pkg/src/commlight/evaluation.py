"""Greedy evaluation sweeps and the frozen-message ablation.

A sweep runs a fixed grid of inflow probabilities, a fixed number of
episodes per inflow, all actions greedy (no exploration), and reports the
per-episode return plus mean and standard deviation per inflow.

The ablation measures how much the learned messages matter: each agent's
communication net is evaluated once on the empty-network observation, and
those two constant vectors replace every message during the sweep.  The
communication nets are never consulted again, which the per-policy call
counters make checkable.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .agents import AgentPolicy, PolicyUsageError
from .env import EPISODE_LEN, TrafficEnv
from .sim import SimConfig, TrafficSim
from .training import rollout_episodes

DEFAULT_INFLOWS = tuple(round(0.1 * k, 1) for k in range(1, 11))
DEFAULT_EPISODES = 200


@dataclass
class EvalReport:
    """Sweep results: one row per (inflow, episode) and one summary row per
    inflow.  std is the population standard deviation over episodes."""
    method: str
    episodes: list[tuple[float, int, float]]   # (inflow, episode, return)
    summary: list[tuple[float, float, float]]  # (inflow, mean_return, std_return)


def sentinel_observations(sim_config: SimConfig | None = None) -> np.ndarray:
    """Both agents' observations of an empty network (2, 26)."""
    sim = TrafficSim(sim_config, seed=0)
    return sim.observe()


def freeze_no_comm_message(policies: list[AgentPolicy],
                           sim_config: SimConfig | None = None) -> np.ndarray:
    """Each agent's message for the empty-network observation, shape (2, 5).

    These constants stand in for live communication during the ablated
    sweep.  Raises for policies without communication nets.
    """
    if not all(p.uses_comm for p in policies):
        raise PolicyUsageError("ablation requires a DIAL checkpoint")
    obs = sentinel_observations(sim_config)
    return np.stack([policies[a].compute_message(obs[a]) for a in range(2)])


def evaluate(policies: list[AgentPolicy], inflows=None,
             episodes_per_inflow: int = DEFAULT_EPISODES, seed: int = 0,
             sim_config: SimConfig | None = None, episode_len: int = EPISODE_LEN,
             method_label: str | None = None,
             messages_override: np.ndarray | None = None) -> EvalReport:
    """Greedy sweep over the inflow grid; deterministic in (policies, seed)."""
    if inflows is None:
        inflows = DEFAULT_INFLOWS
    inflows = [float(p) for p in inflows]
    for p in inflows:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"inflow probability must be in [0, 1], got {p!r}")
    if episodes_per_inflow < 1:
        raise ValueError(f"need at least one episode per inflow, got {episodes_per_inflow}")
    if method_label is None:
        method_label = policies[0].method
        if messages_override is not None:
            method_label += "_no_comm"

    episodes = []
    summary = []
    for i, inflow in enumerate(inflows):
        envs = []
        for e in range(episodes_per_inflow):
            env = TrafficEnv(sim_config, episode_len=episode_len)
            env.reset(seed=[int(seed), i, e], inflow_p=inflow)
            envs.append(env)
        traj = rollout_episodes(policies, envs, "eval",
                                messages_override=messages_override,
                                record_full=False)
        returns = traj.episode_returns
        for e in range(episodes_per_inflow):
            episodes.append((inflow, e, float(returns[e])))
        summary.append((inflow, float(returns.mean()), float(returns.std())))
    return EvalReport(method=method_label, episodes=episodes, summary=summary)


EPISODE_COLUMNS = ("method", "inflow", "episode", "return")
SUMMARY_COLUMNS = ("method", "inflow", "mean_return", "std_return")


def write_report_csv(report: EvalReport, path) -> None:
    """One file, two column sections: per-episode rows under the first
    header, per-inflow summary rows under the second."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_COLUMNS)
        for inflow, episode, ret in report.episodes:
            writer.writerow([report.method, repr(inflow), episode, repr(ret)])
        writer.writerow(SUMMARY_COLUMNS)
        for inflow, mean, std in report.summary:
            writer.writerow([report.method, repr(inflow), repr(mean), repr(std)])


def write_report_json(report: EvalReport, path) -> None:
    doc = {
        "method": report.method,
        "episodes": [
            {"inflow": inflow, "episode": episode, "return": ret}
            for inflow, episode, ret in report.episodes
        ],
        "summary": [
            {"inflow": inflow, "mean_return": mean, "std_return": std}
            for inflow, mean, std in report.summary
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_report_csv(path) -> EvalReport:
    """Inverse of write_report_csv (floats round-trip exactly via repr)."""
    episodes = []
    summary = []
    method = ""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        section = None
        for row in csv.reader(fh):
            if row == list(EPISODE_COLUMNS):
                section = "episodes"
                continue
            if row == list(SUMMARY_COLUMNS):
                section = "summary"
                continue
            if section == "episodes":
                method = row[0]
                episodes.append((float(row[1]), int(row[2]), float(row[3])))
            elif section == "summary":
                method = row[0]
                summary.append((float(row[1]), float(row[2]), float(row[3])))
            else:
                raise ValueError(f"{os.fspath(path)}: unrecognized row {row!r}")
    return EvalReport(method=method, episodes=episodes, summary=summary)
