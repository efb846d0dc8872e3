"""Numba kernels for the two-intersection micro-simulation.

State is held as struct-of-arrays: per-lane vehicle slots ordered front
(index 0, nearest the lane end) to back.  All kernels are deterministic
(no fastmath) and operate on float64.

The longitudinal model is a bounded-acceleration safe-speed follower with
dt = 1 s: each vehicle picks the largest speed not exceeding

* its current speed + a_max,
* the lane speed limit,
* the anticipatory safe speed toward the leader's previous-tick rear
  bumper (minus the minimum gap), and
* when it heads an approach lane, the safe speed toward the tail of the
  next lane (whose body can overhang the boundary just after crossing),
  and additionally toward the stop line while the light is not green for
  its direction.

"Safe speed" is the largest v from which braking by b_max per tick stops
within the available distance, so stopping is always physically possible;
positions are additionally clamped so the stop line is never crossed on
red/yellow, the minimum gap is never violated, and no vehicle ever moves
backwards.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# Lane layout: two four-way intersections (0 = west, 1 = east) joined by a
# shared road.  Every route is straight-through.
#
#   id  name       kind      direction  feeds
#    0  n0_in      entry     NS         s0_out
#    1  s0_in      entry     NS         n0_out
#    2  w0_in      entry     EW (east)  shared_eb
#    3  shared_wb  internal  EW (west)  w0_out     (approaches intersection 0)
#    4  n1_in      entry     NS         s1_out
#    5  s1_in      entry     NS         n1_out
#    6  e1_in      entry     EW (west)  shared_wb
#    7  shared_eb  internal  EW (east)  e1_out     (approaches intersection 1)
#    8..13  n0_out s0_out w0_out e1_out n1_out s1_out   exits

N_LANES = 14
LANE_CAP = 24

LANE_NAMES = (
    "n0_in", "s0_in", "w0_in", "shared_wb",
    "n1_in", "s1_in", "e1_in", "shared_eb",
    "n0_out", "s0_out", "w0_out", "e1_out", "n1_out", "s1_out",
)
NEXT_LANE = np.array([9, 8, 7, 10, 13, 12, 3, 11, -1, -1, -1, -1, -1, -1], dtype=np.int64)
LANE_DIR = np.array([0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0], dtype=np.int64)  # 0=NS 1=EW
LANE_INTERSECTION = np.array([0, 0, 0, 0, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1], dtype=np.int64)
ENTRY_LANES = np.array([0, 1, 2, 4, 5, 6], dtype=np.int64)
INTERNAL_LANES = (3, 7)
EXIT_LANES = tuple(range(8, 14))
AGENT_LANES = np.array([[0, 1, 2, 3], [4, 5, 6, 7]], dtype=np.int64)


@njit(cache=True)
def safe_speed(d, b):
    """Largest v such that travelling v this tick then braking by b per tick
    stays within distance d (v + sum_k max(0, v - k*b) <= d)."""
    if d <= 0.0:
        return 0.0
    n = int(math.floor((math.sqrt(1.0 + 8.0 * d / b) - 1.0) * 0.5))
    if n < 0:
        n = 0
    while n > 0 and b * n * (n + 1) * 0.5 > d:
        n -= 1
    while b * (n + 1) * (n + 2) * 0.5 <= d:
        n += 1
    return (d + b * n * (n + 1) * 0.5) / (n + 1)


@njit(cache=True)
def kernel_move(pos, speed, count, lane_len, next_lane, green,
                speed_limit, a_max, b_max, min_gap, veh_len):
    """Advance every vehicle one tick; constraints read previous-tick positions."""
    pos_old = pos.copy()
    for lane in range(count.shape[0]):
        c = count[lane]
        length = lane_len[lane]
        nxt = next_lane[lane]
        for i in range(c):
            x = pos_old[lane, i]
            v = speed[lane, i]
            bound = v + a_max
            if bound > speed_limit:
                bound = speed_limit
            cap = 1e18
            if i > 0:
                rear = pos_old[lane, i - 1] - veh_len
                vs = safe_speed(rear - min_gap - x, b_max)
                if vs < bound:
                    bound = vs
                if rear - min_gap < cap:
                    cap = rear - min_gap
            elif nxt >= 0:
                if count[nxt] > 0:
                    # The last vehicle of the next lane is a physical
                    # obstacle regardless of the signal: freshly crossed
                    # vehicles can still overhang the boundary.
                    rear = length + pos_old[nxt, count[nxt] - 1] - veh_len
                    vs = safe_speed(rear - min_gap - x, b_max)
                    if vs < bound:
                        bound = vs
                    if rear - min_gap < cap:
                        cap = rear - min_gap
                if green[lane] == 0:
                    vs = safe_speed(length - x, b_max)
                    if vs < bound:
                        bound = vs
                    if length < cap:
                        cap = length
            if bound < 0.0:
                bound = 0.0
            nx = x + bound
            if nx > cap:
                nx = cap
                bound = nx - x
            if nx < x:
                nx = x
                bound = 0.0
            pos[lane, i] = nx
            speed[lane, i] = bound


@njit(cache=True)
def kernel_transfers(pos, speed, wait, vid, count, lane_len, next_lane):
    """Move vehicles past a green stop line onto their next lane; despawn
    vehicles leaving an exit lane.  Returns the number despawned."""
    exited = 0
    for lane in range(count.shape[0]):
        nxt = next_lane[lane]
        while count[lane] > 0 and pos[lane, 0] > lane_len[lane]:
            if nxt >= 0:
                j = count[nxt]
                pos[nxt, j] = pos[lane, 0] - lane_len[lane]
                speed[nxt, j] = speed[lane, 0]
                wait[nxt, j] = wait[lane, 0]
                vid[nxt, j] = vid[lane, 0]
                count[nxt] = j + 1
            else:
                exited += 1
            for i in range(1, count[lane]):
                pos[lane, i - 1] = pos[lane, i]
                speed[lane, i - 1] = speed[lane, i]
                wait[lane, i - 1] = wait[lane, i]
                vid[lane, i - 1] = vid[lane, i]
            count[lane] -= 1
    return exited


@njit(cache=True)
def kernel_spawn(pos, speed, wait, vid, count, entry_lanes, rand_vals,
                 inflow_p, speed_limit, min_gap, veh_len, next_vid, lane_cap):
    """Bernoulli spawn per entry lane; an entry is free when its first
    min_gap + vehicle_length metres hold no part of any vehicle."""
    spawned = 0
    for k in range(entry_lanes.shape[0]):
        lane = entry_lanes[k]
        if rand_vals[k] < inflow_p:
            c = count[lane]
            if c < lane_cap and (c == 0 or pos[lane, c - 1] - veh_len >= min_gap + veh_len):
                pos[lane, c] = 0.0
                speed[lane, c] = speed_limit
                wait[lane, c] = 0.0
                vid[lane, c] = next_vid
                next_vid += 1
                count[lane] = c + 1
                spawned += 1
    return next_vid, spawned


@njit(cache=True)
def kernel_waiting(speed, wait, count, threshold):
    for lane in range(count.shape[0]):
        for i in range(count[lane]):
            if speed[lane, i] < threshold:
                wait[lane, i] += 1.0
            else:
                w = wait[lane, i] - 0.4
                wait[lane, i] = w if w > 0.0 else 0.0


@njit(cache=True)
def kernel_reward(wait, count):
    """Negative mean accumulated wait over every vehicle present (0 if none).

    Summation runs lane-major, front to back, the same order as the state
    dump rows, so an oracle summing dump rows reproduces it bit-exactly.
    """
    tot = 0.0
    n = 0
    for lane in range(count.shape[0]):
        for i in range(count[lane]):
            tot += wait[lane, i]
            n += 1
    if n == 0:
        return 0.0
    return -tot / n


@njit(cache=True)
def kernel_observe(pos, speed, wait, count, lane_len, agent_lanes, phase, yellow,
                   speed_limit, wait_threshold, lane_total, capacity_norm, wait_norm,
                   out):
    """Fill out[2, 26] with both agents' observations.

    Layout per agent: 0:3 leader speed, 4:7 leader distance to the stop
    line, 8:11 edge number, 12:15 vehicles on lane, 16:19 waiting vehicles,
    20:23 summed accumulated wait, 24 direction, 25 yellow flag.  Entries
    are normalized to [0, 1]; an empty lane reports leader speed 0 and
    distance 1.
    """
    for a in range(2):
        for j in range(4):
            lane = agent_lanes[a, j]
            c = count[lane]
            if c > 0:
                out[a, j] = speed[lane, 0] / speed_limit
                out[a, 4 + j] = (lane_len[lane] - pos[lane, 0]) / lane_len[lane]
            else:
                out[a, j] = 0.0
                out[a, 4 + j] = 1.0
            out[a, 8 + j] = lane / lane_total
            cn = c / capacity_norm
            out[a, 12 + j] = cn if cn < 1.0 else 1.0
            nwait = 0
            wsum = 0.0
            for i in range(c):
                if speed[lane, i] < wait_threshold:
                    nwait += 1
                wsum += wait[lane, i]
            wn = nwait / capacity_norm
            out[a, 16 + j] = wn if wn < 1.0 else 1.0
            ws = wsum / wait_norm
            out[a, 20 + j] = ws if ws < 1.0 else 1.0
        out[a, 24] = float(phase[a])
        out[a, 25] = 1.0 if yellow[a] > 0 else 0.0
