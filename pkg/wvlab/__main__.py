#!/usr/bin/env python3
"""wvlab cli"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Tuple

from . import config, locc_net, pointer, protocol, reports, scenario_file, verify
from .__version__ import __version__
from .errors import GridError, PhysicsError, ScenarioParseError, SessionAbort
from .pointer import GridSpec, SweepPoint
from .protocol import Scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_PHYSICS_ERROR = 3
EXIT_NETWORK_ERROR = 4
MODES = ("conditional", "sample", "sweep")


def verify_cli_wrapper(args) -> int:
    """Runs the registered identity checks of a suite"""
    registry = config.collect_checks(args.check_registry_packages)
    logger.debug(f"Using {sorted(registry)} checks.")
    results = verify.run_checks(registry, args.suite)
    table = verify.build_check_table(results)
    print(table.to_string(index=False))
    print(verify.collect_failures(results))
    if args.out:
        table.to_csv(args.out, index=False)
    return EXIT_OK if all(result.passed for result in results) else EXIT_VERIFY_FAILED


def run_scenario(
    scenario: Scenario,
    mode: str,
    seed: int,
    shots: int,
    grid: Optional[GridSpec] = None,
    workers: int = None,
) -> Tuple[dict, List[SweepPoint]]:
    """Runs one scenario and builds its report.

    Args:
        scenario: what to run.
        mode: conditional, sample or sweep.
        seed: sampling seed.
        shots: shots for sampled runs.
        grid: optional grid for cross-checking the pointer moments.
        workers: thread pool size for sweeps and sampling.

    Returns:
        the report and the sweep points behind the estimate
    """
    if mode == "sample":
        result = protocol.sample_shots(scenario, shots, seed, workers=workers)
    else:
        result = protocol.run_conditional(scenario, workers=workers)
    grid_moments = None
    if grid is not None:
        model = protocol.ConditionalModel(scenario)
        grid_moments = pointer.combine_moments_grid(
            model.measurement.components(scenario.g), grid
        )
    report = reports.build_report(
        scenario,
        result,
        mode,
        seed=seed if mode == "sample" else None,
        outcome_weak_values=protocol.outcome_weak_values(scenario),
        grid_moments=grid_moments,
    )
    return report, list(result.sweep)


def _table_path(args) -> Optional[str]:
    if args.table:
        return args.table
    if args.out:
        return os.path.splitext(args.out)[0] + ".csv"
    return None


def run_cli_wrapper(args) -> int:
    """Runs every scenario of a scenario file and writes the report"""
    parsed = scenario_file.load_scenario_file(args.scenario)
    seed = parsed.seed if args.seed is None else args.seed
    shots = parsed.shots if args.shots is None else args.shots
    run_reports = []
    points = []
    for scenario in parsed.scenarios():
        report, scenario_points = run_scenario(
            scenario, args.mode, seed, shots, grid=parsed.grid, workers=args.workers
        )
        run_reports.append(report)
        points.extend(scenario_points)
    if args.out:
        reports.write_report(run_reports, args.out)
    else:
        document = {"version": __version__, "runs": run_reports}
        print(json.dumps(document, indent=2, sort_keys=True))
    if args.mode == "sweep":
        table_path = _table_path(args)
        if table_path:
            reports.write_sweep_table(points, table_path)
        else:
            print(reports.sweep_table(points).to_csv(index=False))
    return EXIT_OK


def netdemo_cli_wrapper(args) -> int:
    """Runs one side of the two-process protocol"""
    parsed = scenario_file.load_scenario_file(args.scenario)
    if parsed.p_values is not None:
        raise ScenarioParseError(["p_values: netdemo runs a single scenario"])
    seed = parsed.seed if args.seed is None else args.seed
    shots = parsed.shots if args.shots is None else args.shots
    try:
        result = locc_net.run_session(
            args.role,
            args.endpoint,
            parsed.scenario,
            seed,
            shots=shots,
            transcript_path=args.out,
            timeout=args.timeout,
            log_path=args.log_path,
        )
    except OSError as err:
        raise SessionAbort("connection", str(err))
    report = reports.build_report(
        parsed.scenario,
        result,
        "sample",
        seed=seed,
        outcome_weak_values=protocol.outcome_weak_values(parsed.scenario),
    )
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser():
    """Build CLI parsers"""
    parser = argparse.ArgumentParser(
        description="wvlab computes and simulates weak values measured through "
        "remote pre- and postselection over shared entanglement."
    )
    parser.add_argument(
        "-v", "--version", action="version", version="%(prog)s {}".format(__version__)
    )

    # Scenario arguments shared by run and netdemo
    parent_parser = argparse.ArgumentParser(add_help=False)
    parent_parser.add_argument("scenario", type=str, help="Scenario JSON file.")
    parent_parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Sampling seed, overrides the scenario file's seed.",
    )
    parent_parser.add_argument(
        "--shots",
        type=int,
        default=None,
        help="Number of shots, overrides the scenario file's shots.",
    )

    subparsers = parser.add_subparsers(
        title="commands",
        description="The following commands are available:",
        help='For additional help: "wvlab <COMMAND> -h"',
    )

    parser_verify = subparsers.add_parser(
        "verify", help="Run the identity and property checks"
    )
    parser_verify.add_argument(
        "--suite",
        type=str,
        choices=(verify.ALL_SUITES,) + verify.SUITES,
        default=verify.ALL_SUITES,
        help="Suite of checks to run (default: %(default)s).",
    )
    parser_verify.add_argument(
        "--check_registry_packages",
        type=str,
        nargs="+",
        default=["wvlab.checks"],
        help="Python package name(s) to get checks from (default: %(default)s).",
    )
    parser_verify.add_argument(
        "--out", type=str, default=None, help="Write the status table as CSV."
    )
    parser_verify.set_defaults(func=verify_cli_wrapper)

    parser_run = subparsers.add_parser(
        "run", help="Run a scenario file", parents=[parent_parser]
    )
    parser_run.add_argument(
        "--mode",
        type=str,
        choices=MODES,
        default="conditional",
        help="conditional: exact pointer analysis, sample: Monte Carlo shots, "
        "sweep: conditional plus the per-g table (default: %(default)s).",
    )
    parser_run.add_argument(
        "--out", type=str, default=None, help="JSON report path (default: stdout)."
    )
    parser_run.add_argument(
        "--table",
        type=str,
        default=None,
        help="CSV sweep table path. Defaults to the report path with .csv.",
    )
    parser_run.add_argument(
        "--workers", type=int, default=None, help="Thread pool size."
    )
    parser_run.set_defaults(func=run_cli_wrapper)

    parser_netdemo = subparsers.add_parser(
        "netdemo",
        help="Run Alice or Bob over a TCP channel",
        parents=[parent_parser],
    )
    parser_netdemo.add_argument(
        "--role", type=str, choices=locc_net.ROLES, required=True, help="Party to play."
    )
    parser_netdemo.add_argument(
        "--endpoint",
        type=str,
        default="127.0.0.1:47000",
        help="host:port Alice listens on and Bob connects to "
        "(default: %(default)s).",
    )
    parser_netdemo.add_argument(
        "--out", type=str, default=None, help="JSONL transcript path."
    )
    parser_netdemo.add_argument(
        "--timeout",
        type=float,
        default=locc_net.DEFAULT_TIMEOUT,
        help="Seconds to wait for each message (default: %(default)s).",
    )
    parser_netdemo.add_argument(
        "--log_path", type=str, default=None, help="Also log the session to a file."
    )
    parser_netdemo.set_defaults(func=netdemo_cli_wrapper)

    return parser


def main(argv: List[str] = None) -> int:
    """Invoke, returning the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_PARSE_ERROR
    # func has to match the set_defaults
    try:
        return args.func(args)
    except ScenarioParseError as err:
        for error in err.errors:
            logger.error(error)
        return EXIT_PARSE_ERROR
    except SessionAbort as err:
        logger.error(f"SESSION ABORTED ({err.reason}): {err.detail}")
        return EXIT_NETWORK_ERROR
    except (PhysicsError, GridError) as err:
        logger.error(f"{type(err).__name__}: {err}")
        return EXIT_PHYSICS_ERROR
    except (OSError, ValueError) as err:
        logger.error(str(err))
        return EXIT_PARSE_ERROR


if __name__ == "__main__":
    sys.exit(main())
