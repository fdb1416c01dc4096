"""Command-line front-end: train, sweep, bench, show-config."""

import argparse
import sys

from . import harness


def _load_config(args) -> harness.SimConfig:
    overrides = list(args.set or [])
    if getattr(args, "fast", False):
        overrides.append("blocks=10000")
    if getattr(args, "model", None):
        overrides.append(f"model_path={args.model}")
    if getattr(args, "output", None):
        key = "model_path" if args.command == "train" else "output"
        overrides.append(f"{key}={args.output}")
    if args.config:
        return harness.parse_config(args.config, overrides)
    return harness.apply_overrides(harness.default_config(), overrides)


def _add_common(sub):
    sub.add_argument("-c", "--config", help="flat key=value config file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imnoma",
        description="Two-user index-modulation NOMA link simulator: "
                    "JML / ML-SIC / learned-SIC detectors.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="train the learned detector and write a model bundle")
    _add_common(p)
    p.add_argument("-o", "--output", help="bundle path (overrides model_path)")

    p = subs.add_parser("sweep", help="run a Monte-Carlo BER sweep and write a CSV")
    _add_common(p)
    p.add_argument("-o", "--output", help="CSV path (overrides output)")
    p.add_argument("--model", help="trained model bundle (overrides model_path)")
    p.add_argument("--fast", action="store_true", help="shortcut for blocks=10000")

    p = subs.add_parser("bench", help="time single-sample detection for all detectors")
    _add_common(p)
    p.add_argument("--model", help="trained model bundle (overrides model_path)")
    p.add_argument("-o", "--output", help="write the report here as well as stdout")

    p = subs.add_parser("show-config", help="print the effective configuration")
    _add_common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "show-config":
            sys.stdout.write(harness.config_manifest(cfg))
        elif args.command == "train":
            _, history = harness.cmd_train(cfg)
            print(f"wrote {cfg.model_path}")
            print(f"final epoch joint loss: {history.joint_loss[-1]:.6e}")
        elif args.command == "sweep":
            curve = harness.run_sweep(cfg)
            if cfg.output:
                print(f"wrote {cfg.output}")
            else:
                sys.stdout.write(curve.as_csv())
        elif args.command == "bench":
            report = harness.run_bench(cfg)
            sys.stdout.write(report.as_text())
            if args.output:
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(report.as_text())
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
