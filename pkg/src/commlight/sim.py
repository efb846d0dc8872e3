"""Two-intersection traffic micro-simulation.

A fixed 14-lane road network: two four-way intersections joined by a
shared east-west road, each with exactly four approach lanes (north,
south, one external east-west entry, and the shared internal lane).
Every route runs straight through.  Vehicle state lives in struct-of-array
buffers advanced by the kernels in :mod:`commlight.engine`; this module
adds the signal controllers, spawning RNG, and introspection views on top.

Tick order is fixed: signal actions, vehicle motion (including transfers
and despawns), spawning, waiting-time update, reward.  Observations are
built from the post-tick state.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, fields

import numpy as np

from . import engine
from .config import ConfigError, coerce, parse_kv_file

MPH2_MPS = 0.894  # 2 mph, the "not waiting anymore" speed threshold


@dataclass
class SimConfig:
    lane_length_m: float = 100.0
    speed_limit_mps: float = 13.9
    yellow_ticks: int = 3
    a_max: float = 2.0
    b_max: float = 4.5
    min_gap_m: float = 2.0
    vehicle_length_m: float = 5.0
    wait_speed_threshold_mps: float = MPH2_MPS
    dt_s: float = 1.0

    def __post_init__(self):
        for name in ("lane_length_m", "speed_limit_mps", "a_max", "b_max",
                     "min_gap_m", "vehicle_length_m", "wait_speed_threshold_mps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"invalid value for {name!r}: must be positive")
        if self.yellow_ticks < 0:
            raise ConfigError("invalid value for 'yellow_ticks': must be >= 0")
        if self.dt_s != 1.0:
            # the follower model and waiting rule assume unit ticks
            raise ConfigError("invalid value for 'dt_s': only 1.0 is supported")
        if self.lane_length_m <= self.vehicle_length_m + self.min_gap_m:
            raise ConfigError("invalid value for 'lane_length_m': lane shorter than one vehicle slot")

    @classmethod
    def from_pairs(cls, pairs: dict[str, str]) -> "SimConfig":
        kinds = {f.name: type(f.default) for f in fields(cls)}
        kwargs = {}
        for key, raw in pairs.items():
            if key not in kinds:
                raise ConfigError(f"unknown scenario config key {key!r}")
            kwargs[key] = coerce(key, raw, kinds[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "SimConfig":
        return cls.from_pairs(parse_kv_file(path))


@dataclass
class VehicleView:
    """Read-only snapshot of one vehicle."""
    vid: int
    lane: int
    position: float
    speed: float
    wait: float


class SignalController:
    """One intersection's light: phase 0 = NS green, 1 = EW green.

    A switch action starts a yellow interval; the pending phase becomes
    active when the countdown reaches zero.  During yellow both directions
    are treated as not-green and further switch actions are ignored.
    """

    def __init__(self, yellow_ticks: int):
        self.yellow_ticks = yellow_ticks
        self.phase = 0
        self.pending_phase = 0
        self.yellow_remaining = 0

    @property
    def is_yellow(self) -> bool:
        return self.yellow_remaining > 0

    def apply(self, action: int) -> None:
        if action not in (0, 1):
            raise ValueError(f"signal action must be 0 (keep) or 1 (switch), got {action!r}")
        if self.yellow_remaining > 0:
            self.yellow_remaining -= 1
            if self.yellow_remaining == 0:
                self.phase = self.pending_phase
        elif action == 1:
            if self.yellow_ticks == 0:
                self.phase = 1 - self.phase
                self.pending_phase = self.phase
            else:
                self.pending_phase = 1 - self.phase
                self.yellow_remaining = self.yellow_ticks

    def state(self) -> tuple[int, int, int]:
        return (self.phase, self.pending_phase, self.yellow_remaining)


class SteppingFinishedError(RuntimeError):
    """Raised when an episode is stepped past its end."""


class TrafficSim:
    """The micro-simulation: vehicle buffers + two signal controllers."""

    N_LANES = engine.N_LANES
    LANE_CAP = engine.LANE_CAP

    def __init__(self, config: SimConfig | None = None, seed=0):
        self.config = config if config is not None else SimConfig()
        self.rng = np.random.default_rng(seed)
        n, cap = self.N_LANES, self.LANE_CAP
        self.pos = np.zeros((n, cap))
        self.speed = np.zeros((n, cap))
        self.wait = np.zeros((n, cap))
        self.vid = np.zeros((n, cap), dtype=np.int64)
        self.count = np.zeros(n, dtype=np.int64)
        self.lane_len = np.full(n, self.config.lane_length_m)
        self.signals = [SignalController(self.config.yellow_ticks) for _ in range(2)]
        self.tick_count = 0
        self.spawned_total = 0
        self.exited_total = 0
        self.next_vid = 0
        # divisor turning a raw vehicle count into a fraction of lane capacity
        self.capacity_norm = self.config.lane_length_m / (
            self.config.vehicle_length_m + self.config.min_gap_m)
        self.wait_norm = 200.0

    # -- signal plumbing -------------------------------------------------

    def apply_actions(self, actions) -> None:
        a0, a1 = actions
        self.signals[0].apply(int(a0))
        self.signals[1].apply(int(a1))

    def green_mask(self) -> np.ndarray:
        mask = np.ones(self.N_LANES, dtype=np.int64)
        for lane in range(8):
            ctl = self.signals[engine.LANE_INTERSECTION[lane]]
            ok = (not ctl.is_yellow) and ctl.phase == engine.LANE_DIR[lane]
            mask[lane] = 1 if ok else 0
        return mask

    # -- tick phases ------------------------------------------------------

    def step_vehicles(self) -> None:
        cfg = self.config
        green = self.green_mask()
        engine.kernel_move(self.pos, self.speed, self.count, self.lane_len,
                           engine.NEXT_LANE, green, cfg.speed_limit_mps,
                           cfg.a_max, cfg.b_max, cfg.min_gap_m, cfg.vehicle_length_m)
        self.exited_total += engine.kernel_transfers(
            self.pos, self.speed, self.wait, self.vid, self.count,
            self.lane_len, engine.NEXT_LANE)

    def spawn_vehicles(self, inflow_p: float) -> int:
        if not 0.0 <= inflow_p <= 1.0:
            raise ValueError(f"inflow probability must be in [0, 1], got {inflow_p!r}")
        cfg = self.config
        draws = self.rng.random(engine.ENTRY_LANES.shape[0])
        self.next_vid, spawned = engine.kernel_spawn(
            self.pos, self.speed, self.wait, self.vid, self.count,
            engine.ENTRY_LANES, draws, inflow_p, cfg.speed_limit_mps,
            cfg.min_gap_m, cfg.vehicle_length_m, self.next_vid, self.LANE_CAP)
        self.spawned_total += spawned
        return spawned

    def update_waiting(self) -> None:
        engine.kernel_waiting(self.speed, self.wait, self.count,
                              self.config.wait_speed_threshold_mps)

    def compute_reward(self) -> float:
        return float(engine.kernel_reward(self.wait, self.count))

    def tick(self, actions, inflow_p: float) -> float:
        """One full simulation tick; returns the reward."""
        self.apply_actions(actions)
        self.step_vehicles()
        self.spawn_vehicles(inflow_p)
        self.update_waiting()
        self.tick_count += 1
        return self.compute_reward()

    def observe(self, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.zeros((2, 26))
        phase = np.array([s.phase for s in self.signals], dtype=np.int64)
        yellow = np.array([s.yellow_remaining for s in self.signals], dtype=np.int64)
        engine.kernel_observe(self.pos, self.speed, self.wait, self.count,
                              self.lane_len, engine.AGENT_LANES, phase, yellow,
                              self.config.speed_limit_mps,
                              self.config.wait_speed_threshold_mps,
                              float(self.N_LANES), self.capacity_norm,
                              self.wait_norm, out)
        return out

    # -- introspection ----------------------------------------------------

    @property
    def vehicle_count(self) -> int:
        return int(self.count.sum())

    def vehicles(self) -> list[VehicleView]:
        """All vehicles, lane-major, front (closest to lane end) first."""
        out = []
        for lane in range(self.N_LANES):
            for i in range(self.count[lane]):
                out.append(VehicleView(int(self.vid[lane, i]), lane,
                                       float(self.pos[lane, i]),
                                       float(self.speed[lane, i]),
                                       float(self.wait[lane, i])))
        return out

    def add_vehicle(self, lane: int, position: float, speed: float = 0.0,
                    wait: float = 0.0, vid: int | None = None) -> int:
        """Insert a vehicle directly (test/setup helper), keeping lane order."""
        if not 0 <= lane < self.N_LANES:
            raise ValueError(f"lane must be in [0, {self.N_LANES}), got {lane}")
        if not 0.0 <= position <= self.lane_len[lane]:
            raise ValueError(f"position {position} outside lane of length {self.lane_len[lane]}")
        c = int(self.count[lane])
        if c >= self.LANE_CAP:
            raise ValueError(f"lane {lane} is full")
        i = 0
        while i < c and self.pos[lane, i] > position:
            i += 1
        for j in range(c, i, -1):
            self.pos[lane, j] = self.pos[lane, j - 1]
            self.speed[lane, j] = self.speed[lane, j - 1]
            self.wait[lane, j] = self.wait[lane, j - 1]
            self.vid[lane, j] = self.vid[lane, j - 1]
        if vid is None:
            vid = self.next_vid
            self.next_vid += 1
        self.pos[lane, i] = position
        self.speed[lane, i] = speed
        self.wait[lane, i] = wait
        self.vid[lane, i] = vid
        self.count[lane] = c + 1
        return int(vid)

    def state_rows(self) -> list[tuple]:
        """Dump rows (tick, vehicle_id, lane_id, position, speed, wait) in
        the same order the reward kernel sums over."""
        rows = []
        for lane in range(self.N_LANES):
            for i in range(self.count[lane]):
                rows.append((self.tick_count, int(self.vid[lane, i]), lane,
                             float(self.pos[lane, i]), float(self.speed[lane, i]),
                             float(self.wait[lane, i])))
        return rows


class StateDumpWriter:
    """Optional per-tick CSV state dump (tick, vehicle_id, lane_id, position,
    speed, wait).  Floats use repr so a reader round-trips them exactly."""

    HEADER = ("tick", "vehicle_id", "lane_id", "position", "speed", "wait")

    def __init__(self, path: str | os.PathLike):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(self.HEADER)

    def append(self, sim: TrafficSim) -> None:
        for tick, vid, lane, pos, speed, wait in sim.state_rows():
            self._writer.writerow([tick, vid, lane, repr(pos), repr(speed), repr(wait)])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
