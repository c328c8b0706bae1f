"""Command-line entry point: generate / sweep / field-analog / evaluate."""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import ConfigError, ScenarioConfig
from .demos import DemoError
from .records import RecordFormatError
from .runner import SWEEP_AXES, run_evaluate, run_field_analog, run_generate, run_sweep

DEFAULT_AXIS_VALUES = {
    "gamma": "0.5,0.6,0.7,0.8,0.9,0.99",
    "k": "10,20,50,100,200",
    "reward": "rcr,drcr",
}


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg.validate()


def _parse_values(axis: str, raw: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if axis == "gamma":
        return [float(p) for p in parts]
    if axis == "k":
        return [int(p) for p in parts]
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pricelab",
        description="Dynamic-pricing experiments on a seeded synthetic market.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON scenario config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the config output directory")

    p_gen = sub.add_parser("generate", help="log the rule-based behavior policy")
    add_common(p_gen)

    p_sweep = sub.add_parser("sweep", help="pretrain + offline-evaluate across an axis")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p_sweep.add_argument("--values", help="comma-separated axis values")

    p_field = sub.add_parser("field-analog", help="treatment/control index comparison")
    add_common(p_field)

    p_eval = sub.add_parser("evaluate", help="score one policy on the evaluation slice")
    add_common(p_eval)
    p_eval.add_argument("--checkpoint", help="agent checkpoint directory")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "generate":
            result = run_generate(cfg)
            print(f"profiles: {result.profile_path}")
            print(f"demonstrations: {result.demo_path} ({len(result.records)} transitions)")
        elif args.command == "sweep":
            raw = args.values or DEFAULT_AXIS_VALUES[args.axis]
            csv_path, rows = run_sweep(cfg, args.axis, _parse_values(args.axis, raw))
            for row in rows:
                print(f"{args.axis}={row['value']}: R_pi={row['r_pi']:.6g} (n={row['n_matched']})")
            print(f"wrote {csv_path}")
        elif args.command == "field-analog":
            report, daily_path, summary_path = run_field_analog(cfg)
            for gid in report.group_ids:
                tag = " (control)" if gid == report.control_group else ""
                print(f"group {gid}{tag}: mean index={report.means[gid]:.6g} "
                      f"ratio={report.ratios[gid]:.4f}")
            print(f"wrote {daily_path} and {summary_path}")
        elif args.command == "evaluate":
            r_pi, matched, csv_path = run_evaluate(cfg, checkpoint=args.checkpoint)
            print(f"R_pi={r_pi:.6g} over {matched} matched tuples")
            print(f"wrote {csv_path}")
    except (ConfigError, DemoError, RecordFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
