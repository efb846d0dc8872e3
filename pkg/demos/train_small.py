"""Train a pair of signal agents at desk scale and watch the learning curve.

A couple hundred epochs is enough to see returns move; the full-scale
configuration in the README is the same call with more epochs.  Writes
metrics.csv and checkpoints under --out and prints a coarse curve.
"""

import argparse
import csv
import os

from commlight import TrainConfig, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--method", choices=("iql", "dial"), default="dial")
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None,
                        help="output directory (default runs/demo_<method>_s<seed>)")
    args = parser.parse_args()

    out = args.out or os.path.join("runs", f"demo_{args.method}_s{args.seed}")
    cfg = TrainConfig(method=args.method, seed=args.seed, epochs=args.epochs,
                      checkpoint_every=max(1, args.epochs // 3))
    print(f"training {cfg.method} for {cfg.epochs} epochs "
          f"({cfg.episodes_per_epoch} episodes x {cfg.episode_len} steps each) -> {out}")

    def progress(m):
        if m.epoch % 25 == 0 or m.epoch == cfg.epochs - 1:
            print(f"  epoch {m.epoch:4d}  return {m.mean_return:9.2f}  "
                  f"loss {m.loss:9.2f}  eps {m.epsilon:.3f}")

    result = train(cfg, out, log=progress)

    with open(os.path.join(out, "metrics.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    print("\nepoch    mean_return      loss   epsilon")
    stride = max(1, len(rows) // 10)
    for row in rows[::stride] + [rows[-1]]:
        print(f"{int(row['epoch']):5d} {float(row['mean_return']):14.2f} "
              f"{float(row['loss']):9.2f} {float(row['epsilon']):9.4f}")

    first = sum(float(r["mean_return"]) for r in rows[:10]) / min(10, len(rows))
    last = sum(float(r["mean_return"]) for r in rows[-10:]) / min(10, len(rows))
    print(f"\nfirst-10-epoch mean return {first:.1f} -> last-10 {last:.1f}")
    print(f"checkpoints: {sorted(os.listdir(os.path.join(out, 'checkpoints')))}")
    print(f"total environment interactions: {result.interactions}")


if __name__ == "__main__":
    main()
