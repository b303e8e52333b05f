"""Command line entry point: ``ibptc ber | latency | validate``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .sim import load_config, run_ber, run_latency, validate_config


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config document")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--out", help="output directory (override run.out)")
    common.add_argument("--threads", type=int, help="worker processes for sweep points")
    common.add_argument("--mode", choices=("ibptc", "ctc"), help="override code.mode")

    p = argparse.ArgumentParser(prog="ibptc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ber", parents=[common], help="BER / average-DR sweep to CSV")
    sub.add_parser("latency", parents=[common], help="schedule latency report")
    sub.add_parser("validate", parents=[common], help="print the normalized config or its errors")
    return p


def _overrides(args) -> dict:
    return {"run.seed": args.seed, "run.out": args.out, "run.threads": args.threads,
            "code.mode": args.mode}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            doc = {}
            if args.config is not None:
                doc = json.loads(args.config.read_text() or "{}")
            if isinstance(doc, dict):
                doc = {**doc, **{k: v for k, v in _overrides(args).items() if v is not None}}
            cfg, errors = validate_config(doc)
            if errors:
                print("\n".join(errors), file=sys.stderr)
                return 2
            print(json.dumps(cfg.document, indent=2))
            return 0

        cfg = load_config(args.config, _overrides(args))
        if args.command == "ber":
            for r in run_ber(cfg):
                lo, hi = r.ber_interval()
                print(f"Eb/N0 {r.ebn0_db:5.2f} dB  BER {r.ber:.3e} [{lo:.2e}, {hi:.2e}]  "
                      f"avg DR {r.avg_dr:5.2f}  forced {r.forced_et_frac:.3f}")
        else:
            for mode, prof in run_latency(cfg).items():
                print(f"{mode:6s} FBDD {prof['fbdd']}  TDD {prof['tdd']}")
        print(f"results written to {cfg.out}")
        return 0
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
