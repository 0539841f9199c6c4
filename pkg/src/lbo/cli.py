"""Command line entry point: hand, mountain and sweep experiments."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import load_file, parse_values, sim_config
from .harness import (
    HAND_COLUMNS,
    MOUNTAIN_COLUMNS,
    ConfigError,
    SETTINGS,
    AGENT_KINDS,
    run_hand,
    run_mountain,
    sweep_pairs,
    sweep_thresholds,
)
from .metrics import bucket_rows, write_buckets

log = logging.getLogger("lbo")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML file with defaults; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV file to write (overwritten)")
    p.add_argument("-v", "--verbose", action="store_true")


def _eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--unfamiliar-limit", type=int, dest="unfamiliar_limit")
    p.add_argument("--unfamiliar-reference", type=float, dest="unfamiliar_reference")
    p.add_argument("--blend", type=float, help="K* symbolic blend in (0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lbo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    hand = sub.add_parser("hand", help="virtual hand showing numbers")
    _common(hand)
    hand.add_argument("--setting", choices=SETTINGS)
    hand.add_argument("--steps", type=int)
    hand.add_argument("--lower", type=float)
    hand.add_argument("--upper", type=float)
    hand.add_argument("--experts", type=int)
    hand.add_argument("--bucket", type=int, help="also write per-N-step means next to --out")
    _eval_flags(hand)

    mountain = sub.add_parser("mountain", help="mountain car")
    _common(mountain)
    mountain.add_argument("--agent", choices=AGENT_KINDS)
    mountain.add_argument("--attempts", type=int)
    mountain.add_argument("--max-steps", type=int, dest="max_steps")
    mountain.add_argument("--lower", type=float)
    mountain.add_argument("--upper", type=float)
    mountain.add_argument("--bucket", type=int, help="also write per-N-attempt means next to --out")
    _eval_flags(mountain)

    sweep = sub.add_parser("sweep", help="confidence threshold sweep over hand runs")
    _common(sweep)
    sweep.add_argument("--lower", required=True, help="e.g. 0..50:10 or 0,10,20")
    group = sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--upper", help="absolute upper thresholds, crossed with --lower")
    group.add_argument("--gap", help="upper = lower + gap, e.g. 1,5,10,15,20")
    sweep.add_argument("--setting", choices=SETTINGS)
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--experts", type=int)
    sweep.add_argument("--reference-offset", type=float, default=10.0, dest="reference_offset",
                       help="unfamiliar reference sits this far below each lower threshold")
    sweep.add_argument("--unfamiliar-limit", type=int, dest="unfamiliar_limit")
    return parser


def _overrides(args: argparse.Namespace, **extra) -> dict:
    keys = ("seed", "out", "setting", "steps", "experts", "lower", "upper", "unfamiliar_limit",
            "unfamiliar_reference", "blend", "agent", "attempts", "max_steps")
    o = {k: getattr(args, k, None) for k in keys}
    o.update(extra)
    return o


def _bucket_path(out: str, n: int) -> Path:
    p = Path(out)
    return p.with_name(f"{p.stem}.bucket{n}{p.suffix or '.csv'}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        data = load_file(args.config) if args.config else {}
        if args.command == "hand":
            cfg = sim_config(data, **_overrides(args, scenario="hand"))
            res = run_hand(cfg)
            print(
                f"steps={len(res.rows)} initial_learning={res.initial_learning_steps} "
                f"executed={res.total_executed} correct={res.total_correct}"
            )
            if args.bucket:
                _write_bucketed(args, cfg.out, res.rows, "step", HAND_COLUMNS)
        elif args.command == "mountain":
            cfg = sim_config(data, **_overrides(args, scenario="mountain"))
            res = run_mountain(cfg)
            print(f"attempts={len(res.rows)} first_success={res.first_success()}")
            if args.bucket:
                _write_bucketed(args, cfg.out, res.rows, "attempt", MOUNTAIN_COLUMNS)
        else:
            over = _overrides(args, scenario="hand")
            over.pop("lower"), over.pop("upper")
            cfg = sim_config(data, **over)
            lowers = parse_values(args.lower)
            if args.upper is not None:
                pairs = sweep_pairs(lowers, uppers=parse_values(args.upper))
            else:
                pairs = sweep_pairs(lowers, gaps=parse_values(args.gap))
            rows = sweep_thresholds(cfg, pairs, args.reference_offset)
            ok = [r for r in rows if r.get("status") == "ok"]
            print(f"cells={len(rows)} ran={len(ok)} skipped={len(rows) - len(ok)}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _write_bucketed(args, out, rows, index_key, columns) -> None:
    if not out:
        raise ConfigError("--bucket needs --out")
    if args.bucket <= 0:
        raise ConfigError("--bucket must be positive")
    write_buckets(bucket_rows(rows, args.bucket, index_key, columns), _bucket_path(out, args.bucket))


if __name__ == "__main__":
    sys.exit(main())
