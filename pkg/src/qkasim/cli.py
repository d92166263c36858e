"""Command line entry point: ``qkasim run | verify-example | selftest``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .adversary import AttackGoal
from .harness import ATTACKS, Campaign, Scenario, run_campaign, selftest, verify_worked_example
from .protocol import DEFAULT_SEED, DEFAULT_THRESHOLD, ConfigError, ProtocolConfig
from .symbolic import DibitString

# flag defaults; None means "not given" so the config file can fill it in
RUN_DEFAULTS = {
    "scenario": Scenario.HONEST.value,
    "n": 16,
    "decoys": None,
    "threshold": DEFAULT_THRESHOLD,
    "trials": 100,
    "seed": DEFAULT_SEED,
    "noise": "dp",
    "backend": "symbolic",
    "target_key": None,
    "ka": None,
    "kb": None,
    "force_m": None,
    "output": None,
    "transcripts": False,
    "workers": 1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkasim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo campaign")
    run.add_argument("--config", help="JSON file with any of the flags below (flags win)")
    run.add_argument("--scenario", choices=[s.value for s in Scenario])
    run.add_argument("--n", type=int, help="number of key dibits")
    run.add_argument("--decoys", type=int, help="decoys per transmission (default max(8, n))")
    run.add_argument("--threshold", type=float, help="decoy error-rate abort threshold")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--noise", choices=["dp", "r"])
    run.add_argument("--backend", choices=["symbolic", "statevector"])
    run.add_argument("--target-key", help="attack target final key as a 0/1 string")
    run.add_argument("--ka", help="fix Alice's key (0/1 string of 2n bits)")
    run.add_argument("--kb", help="fix Bob's key (0/1 string of 2n bits)")
    run.add_argument("--force-m", help="pin the Step 3 results M (symbolic backend)")
    run.add_argument("--output", help="directory for summary.json and transcripts.jsonl")
    run.add_argument("--transcripts", action="store_const", const=True, default=None,
                     help="write per-trial transcripts")
    run.add_argument("--workers", type=int)

    sub.add_parser("verify-example", help="check the two-pair worked attack example")
    st = sub.add_parser("selftest", help="transformation table, swapping law and DFS invariance")
    st.add_argument("--seed", type=int, default=0)
    return parser


def resolve_run_options(args: argparse.Namespace) -> dict:
    options = dict(RUN_DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            from_file = json.load(fh)
        unknown = set(from_file) - set(RUN_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        options.update(from_file)
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    return options


def campaign_from_options(opts: dict) -> Campaign:
    scenario = Scenario(opts["scenario"])
    config = ProtocolConfig(
        n=opts["n"], noise=opts["noise"], decoy_count=opts["decoys"], error_threshold=opts["threshold"],
        backend=opts["backend"], seed=opts["seed"], improved=scenario is Scenario.PERM_ATTACK_IMPROVED,
    )
    goal = AttackGoal(target_final_key=opts["target_key"]) if opts["target_key"] else None
    if goal is not None and scenario not in ATTACKS:
        raise ConfigError("--target-key only applies to attack scenarios")

    def dibits(key):
        return DibitString.parse(opts[key]) if opts[key] else None

    return Campaign(scenario, opts["trials"], config, goal, opts["output"], dibits("ka"), dibits("kb"),
                    dibits("force_m"), write_transcripts=bool(opts["transcripts"]), workers=opts["workers"])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify-example":
        ok = verify_worked_example(verbose=True)
        return 0 if ok else 1
    if args.command == "selftest":
        ok = selftest(args.seed, verbose=True)
        return 0 if ok else 1
    try:
        campaign = campaign_from_options(resolve_run_options(args))
        report = run_campaign(campaign)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 3
    print(report.table())
    return 0


if __name__ == "__main__":
    sys.exit(main())
