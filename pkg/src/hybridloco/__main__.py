#!/usr/bin/env python
# -*- coding: utf-8 -*-
# PYTHON_ARGCOMPLETE_OK

# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import argparse
import logging
import os
import pathlib
import sys
import typing as t

from ._errors import HybridLocoError, InputError
from ._export import format_gait_table, format_summary, write_episode, write_plan
from ._gait import builtin_gaits
from ._logging import LOG_LEVELS, configure_logging, remove_logging
from ._sim import plan_once, run_episode
from .scenario import Scenario, load_scenario

try:
    import argcomplete
except ImportError:
    argcomplete = None

log = logging.getLogger(__name__)


def _path(value: str) -> pathlib.Path:
    return pathlib.Path(os.path.expanduser(os.path.expandvars(value)))


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        action="store",
        type=_path,
        help="Scenario JSON file to run, the other options override its values.",
    )

    parser.add_argument(
        "--gait",
        action="store",
        type=str,
        help="Built-in gait name, required when no --scenario is given.",
    )

    for name, desc in (("vx", "forward velocity"), ("vy", "lateral velocity"), ("wz", "yaw rate")):
        parser.add_argument(
            f"--{name}",
            action="store",
            type=float,
            help=f"Constant commanded {desc} replacing the scenario velocity profile.",
        )

    parser.add_argument(
        "--duration",
        action="store",
        type=float,
        help="Episode duration in seconds.",
    )

    parser.add_argument(
        "--seed",
        action="store",
        type=int,
        help="Seed of the random pushes.",
    )

    parser.add_argument(
        "--sync",
        action="store_const",
        const=True,
        dest="sync",
        help="Step planners and plant in lock step, reproducible results.",
    )

    parser.add_argument(
        "--no-sync",
        action="store_const",
        const=False,
        dest="sync",
        help="Run each planner on its own thread at its wall clock rate.",
    )

    parser.add_argument(
        "--out",
        action="store",
        type=_path,
        default=pathlib.Path("."),
        help="Directory the exports are written to. Defaults to the current directory.",
    )

    parser.add_argument(
        "--log-file",
        action="store",
        type=_path,
        help="Enable file logging to the file at this path for the hybridloco logger.",
    )

    parser.add_argument(
        "--log-level",
        action="store",
        choices=list(LOG_LEVELS),
        default="info",
        type=str,
        help="Set the logging filter level of the hybridloco logger when --log-file is set. Defaults to info",
    )


def parse_args(
    args: t.List[str],
) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="python -m hybridloco",
        description="Motion planner for wheeled-legged quadrupeds.",
    )

    action = parser.add_subparsers(
        dest="action",
        required=True,
        help="The action for hybridloco to perform",
    )

    # Plan

    plan = action.add_parser(
        "plan",
        description="Plans every wheel and the base once from the initial "
        "state of the scenario and writes the sampled horizon to plan.csv.",
        help="Plan one horizon and export it",
    )
    _add_scenario_args(plan)

    # Simulate

    simulate = action.add_parser(
        "simulate",
        description="Runs the receding horizon loop over the scenario "
        "duration and writes ticks.csv, solves.csv and summary.json.",
        help="Simulate an episode and report solve times",
    )
    _add_scenario_args(simulate)

    # Gaits

    action.add_parser(
        "gaits",
        description="Lists the built-in gaits with their horizon and reference solve times.",
        help="List the built-in gaits",
    )

    if argcomplete:
        argcomplete.autocomplete(parser)

    return parser.parse_args(args)


def build_scenario(args: argparse.Namespace) -> Scenario:
    """The scenario of the file, or a default one, with the command line values applied."""
    if args.scenario:
        scenario = load_scenario(args.scenario)
    elif args.gait:
        scenario = Scenario.unpack({"schema": 1, "gait": args.gait})
    else:
        raise InputError("Either --scenario or --gait must be set")

    return scenario.with_overrides(
        gait=args.gait if args.scenario else None,
        vx=args.vx,
        vy=args.vy,
        wz=args.wz,
        duration=args.duration,
        seed=args.seed,
        sync=args.sync,
    )


def cmd_gaits() -> int:
    print(format_gait_table(builtin_gaits()))
    return 0


def cmd_plan(scenario: Scenario, out: pathlib.Path) -> int:
    wheels, base = plan_once(scenario)
    out.mkdir(parents=True, exist_ok=True)
    path = write_plan(out / "plan.csv", wheels, base, scenario.base)
    print(f"Wrote {path}")
    return 0


def cmd_simulate(scenario: Scenario, out: pathlib.Path) -> int:
    episode = run_episode(scenario)
    paths = write_episode(out, episode)
    print(format_summary(episode.summary()))
    print(f"Wrote {', '.join(str(p) for p in paths.values())}")
    return episode.exit_code


def main(argv: t.Optional[t.List[str]] = None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    if args.action == "gaits":
        return cmd_gaits()

    handler = configure_logging(args.log_file, args.log_level) if args.log_file else None
    try:
        scenario = build_scenario(args)
        if args.action == "plan":
            return cmd_plan(scenario, args.out)
        else:
            return cmd_simulate(scenario, args.out)

    except HybridLocoError as e:
        log.error("%s failed: %s", args.action, e)
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code

    finally:
        if handler:
            remove_logging(handler)


if __name__ == "__main__":
    sys.exit(main())
