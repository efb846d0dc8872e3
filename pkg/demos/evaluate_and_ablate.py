"""Sweep a trained checkpoint over inflow levels, with and without its messages.

Loads a checkpoint, runs greedy episodes across spawn probabilities, and
prints mean return per inflow.  For a communicating pair it repeats the
sweep with the messages frozen to what the agents say about an empty
network, so the gap between columns is what live communication is worth.
"""

import argparse

from commlight import evaluate, freeze_no_comm_message, load_policies


def summary_table(report):
    return {inflow: (mean, std) for inflow, mean, std in report.summary}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("checkpoint", help="checkpoint directory (e.g. runs/.../checkpoints/best)")
    parser.add_argument("--inflows", default="0.1,0.3,0.5,0.7,0.9")
    parser.add_argument("--episodes", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    policies, _manifest = load_policies(args.checkpoint)
    inflows = [float(s) for s in args.inflows.split(",")]
    print(f"{policies[0].method} checkpoint, {args.episodes} greedy episodes per inflow")

    live = summary_table(evaluate(policies, inflows, args.episodes, seed=args.seed))

    if policies[0].method == "dial":
        frozen = freeze_no_comm_message(policies)
        ablated = summary_table(evaluate(policies, inflows, args.episodes, seed=args.seed,
                                         messages_override=frozen))
        print(f"frozen message vectors:\n  {frozen[0].round(4)}\n  {frozen[1].round(4)}")
        print(f"\n{'inflow':>6} {'live mean':>12} {'frozen mean':>12} {'comm gain':>10}")
        for p in inflows:
            gain = live[p][0] - ablated[p][0]
            print(f"{p:6.2f} {live[p][0]:12.1f} {ablated[p][0]:12.1f} {gain:10.1f}")
    else:
        print(f"\n{'inflow':>6} {'mean':>12} {'std':>10}")
        for p in inflows:
            print(f"{p:6.2f} {live[p][0]:12.1f} {live[p][1]:10.1f}")
        print("\n(no communication to ablate for iql)")


if __name__ == "__main__":
    main()
