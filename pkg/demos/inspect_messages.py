"""Look at what the two intersections actually say to each other.

Loads a communicating checkpoint, puts the simulator into a few named
traffic situations, and prints each agent's 5-value outgoing message.
The message is a linear readout of the observation, so the table also
shows which observation features each message channel listens to most.
"""

import argparse

import numpy as np

from commlight import TrafficSim, load_policies


def situation_empty(sim):
    """Nothing on the road."""


def situation_ns_queue(sim):
    """Standing queue on the north-south approaches of intersection A."""
    sim.signals[0].phase = 1  # NS held at red
    for k in range(8):
        sim.add_vehicle(lane=0, position=100.0 - 7.0 * k, speed=0.0, wait=10.0 * k)
        sim.add_vehicle(lane=1, position=100.0 - 7.0 * k, speed=0.0, wait=10.0 * k)


def situation_handoff(sim):
    """Platoon crossing A eastbound, about to arrive at B."""
    for k in range(6):
        sim.add_vehicle(lane=3, position=90.0 - 12.0 * k, speed=13.0)


def situation_gridlock(sim):
    """Every approach of both intersections packed solid."""
    for lane in range(8):
        for k in range(12):
            sim.add_vehicle(lane=lane, position=100.0 - 7.5 * k, speed=0.0, wait=50.0)


SITUATIONS = [situation_empty, situation_ns_queue, situation_handoff, situation_gridlock]

FEATURES = (["leader speed"] * 4 + ["leader dist"] * 4 + ["lane id"] * 4 +
            ["count"] * 4 + ["stopped count"] * 4 + ["wait sum"] * 4 +
            ["direction", "yellow"])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("checkpoint", help="dial checkpoint directory")
    args = parser.parse_args()
    policies, _ = load_policies(args.checkpoint)
    if policies[0].method != "dial":
        raise SystemExit("this checkpoint has no communication policy to inspect")

    print(f"{'situation':>12}  agent  message")
    for build in SITUATIONS:
        sim = TrafficSim(seed=0)
        build(sim)
        obs = sim.observe()
        for a in (0, 1):
            msg = policies[a].compute_message(obs[a])
            name = build.__name__.removeprefix("situation_")
            print(f"{name:>12}  {a:5d}  {np.round(msg, 3)}")

    print("\nstrongest observation inputs per message channel (agent 0):")
    w = policies[0].comm_net.weights[0].data  # (5, 26)
    for ch in range(w.shape[0]):
        top = np.argsort(np.abs(w[ch]))[-3:][::-1]
        desc = ", ".join(f"{FEATURES[i]}[{i}] {w[ch, i]:+.3f}" for i in top)
        print(f"  channel {ch}: {desc}")


if __name__ == "__main__":
    main()
