"""Command-line entry point.

Subcommands: ``train`` (run a training config, write metrics and
checkpoints), ``evaluate`` (greedy inflow sweep of a checkpoint),
``ablate`` (the same sweep with communication frozen to the empty-network
message), and ``inspect-message`` (print an agent's message for
observations read from a file).

Every config key can be overridden by an environment variable named
COMMLIGHT_<KEY> (upper-cased), e.g. COMMLIGHT_EPOCHS=50.  Exit codes:
0 success, 1 failure (one-line diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

import numpy as np

from .agents import NumericError, PolicyUsageError, load_policies
from .config import ConfigError, apply_env_overrides, parse_kv_file
from .evaluation import (DEFAULT_EPISODES, evaluate, freeze_no_comm_message,
                         write_report_csv, write_report_json)
from .sim import SimConfig
from .training import TrainConfig, train

ENV_PREFIX = "COMMLIGHT_"


def _load_config(cls, path):
    """Config from an optional file, overlaid with matching env vars."""
    pairs = parse_kv_file(path) if path else {}
    known = {f.name for f in fields(cls)}
    for key, val in apply_env_overrides({}, prefix=ENV_PREFIX).items():
        if key in known:
            pairs[key] = val
    return cls.from_pairs(pairs)


def _parse_inflows(text):
    if text is None:
        return None
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"invalid --inflows value {text!r}: expected comma-separated numbers") from None


def _read_obs_file(path) -> np.ndarray:
    """Observation rows: 26 numbers per line, comma or whitespace separated."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.replace(",", " ").split()
            try:
                vals = [float(t) for t in toks]
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: non-numeric observation entry") from None
            if len(vals) != 26:
                raise ConfigError(f"{path}:{lineno}: expected 26 values, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ConfigError(f"{path}: no observation rows")
    return np.asarray(rows)


def _cmd_train(args) -> int:
    cfg = _load_config(TrainConfig, args.config)
    sim_cfg = _load_config(SimConfig, args.scenario)
    result = train(cfg, args.out, sim_cfg)
    print(f"trained method={cfg.method} seed={cfg.seed} epochs={cfg.epochs} "
          f"interactions={result.interactions}; outputs in {result.out_dir}")
    return 0


def _run_sweep(args, ablate: bool) -> int:
    policies, manifest = load_policies(args.checkpoint)
    sim_cfg = _load_config(SimConfig, args.scenario)
    override = None
    label = manifest["method"]
    if ablate:
        override = freeze_no_comm_message(policies, sim_cfg)
        label = "dial_no_comm"
    report = evaluate(policies, _parse_inflows(args.inflows),
                      episodes_per_inflow=args.episodes, seed=args.seed,
                      sim_config=sim_cfg, method_label=label,
                      messages_override=override)
    write_report_csv(report, args.out)
    json_path = args.out[:-4] + ".json" if args.out.endswith(".csv") else args.out + ".json"
    write_report_json(report, json_path)
    print(f"evaluated {label}: {len(report.summary)} inflows x {args.episodes} episodes; "
          f"wrote {args.out} and {json_path}")
    return 0


def _cmd_evaluate(args) -> int:
    return _run_sweep(args, ablate=False)


def _cmd_ablate(args) -> int:
    return _run_sweep(args, ablate=True)


def _cmd_inspect_message(args) -> int:
    policies, _ = load_policies(args.checkpoint)
    pol = policies[args.agent]
    for obs in _read_obs_file(args.obs_file):
        message = pol.compute_message(obs)
        print(" ".join(repr(float(v)) for v in message))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commlight",
        description="Train and evaluate two traffic-signal agents (IQL or DIAL) "
                    "on the built-in two-intersection simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training config")
    p.add_argument("--config", help="training config file (key = value lines)")
    p.add_argument("--scenario", help="scenario config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_train)

    for name, func, extra_help in (("evaluate", _cmd_evaluate, ""),
                                   ("ablate", _cmd_ablate, " with frozen messages")):
        p = sub.add_parser(name, help=f"greedy inflow sweep{extra_help}")
        p.add_argument("--checkpoint", required=True,
                       help="checkpoint directory or manifest.json")
        p.add_argument("--inflows", help="comma-separated probabilities "
                                         "(default 0.1,0.2,...,1.0)")
        p.add_argument("--episodes", type=int, default=DEFAULT_EPISODES,
                       help="episodes per inflow (default %(default)s)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--scenario", help="scenario config file")
        p.add_argument("--out", required=True, help="output CSV path")
        p.set_defaults(func=func)

    p = sub.add_parser("inspect-message",
                       help="print message vectors for observation rows")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--obs-file", required=True,
                   help="file with 26 numbers per line")
    p.add_argument("--agent", type=int, choices=(0, 1), default=0)
    p.set_defaults(func=_cmd_inspect_message)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except (ConfigError, PolicyUsageError, NumericError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
