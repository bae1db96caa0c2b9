"""Command line front end.

    hetnoma run --config exp.json [--trials N] [--seed S] [--workers W] [--out DIR]
    hetnoma figure fig3 [--trials N] [--seed S] [--workers W] [--out DIR]
    hetnoma validate --config exp.json

Exit codes: 0 on success, 2 when a description fails validation, 3 when a
run hits a numerical failure (any cell whose quadrature or simulation did
not converge leaves its error in the CSV and flips the exit code).
"""

import argparse
import sys

from .experiments import (
    FIGURES,
    ConfigError,
    figure_experiment,
    load_config,
    replace_run_settings,
    run,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_run_options(command):
    command.add_argument(
        "--trials", type=int, default=None,
        help="Monte Carlo trials per sweep point (overrides the description)",
    )
    command.add_argument("--seed", type=int, default=None, help="base RNG seed")
    command.add_argument(
        "--workers", type=int, default=None,
        help="worker threads for the simulation engine",
    )
    command.add_argument(
        "--out", default=".",
        help="directory for CSV and .dat output (default: current directory)",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hetnoma",
        description="Coverage, rate and energy-efficiency evaluation of "
        "two-user NOMA small cells under a massive-MIMO macro tier.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_command = commands.add_parser(
        "run", help="evaluate a JSON experiment description"
    )
    run_command.add_argument("--config", required=True, help="experiment JSON file")
    _add_run_options(run_command)

    figure_command = commands.add_parser(
        "figure", help="run a bundled preset sweep (%s)" % ", ".join(sorted(FIGURES))
    )
    figure_command.add_argument("name", help="preset name, e.g. fig3")
    _add_run_options(figure_command)

    validate_command = commands.add_parser(
        "validate", help="check an experiment description without running it"
    )
    validate_command.add_argument("--config", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            experiment = load_config(args.config)
            print(
                "ok: %s (%d variants x %d sweep points, %d metrics, engines=%s)"
                % (
                    experiment.name,
                    len(experiment.variants),
                    len(experiment.sweep_values),
                    len(experiment.metrics),
                    experiment.engines,
                )
            )
            return EXIT_OK
        if args.command == "run":
            experiment = replace_run_settings(
                load_config(args.config),
                trials=args.trials, seed=args.seed, workers=args.workers,
            )
        else:
            experiment = figure_experiment(
                args.name, trials=args.trials, seed=args.seed, workers=args.workers
            )
        rows = run(experiment, out_dir=args.out)
    except ConfigError as err:
        print("config error: %s" % err, file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # anything escaping the per-cell capture
        print("numerical error: %s: %s" % (type(err).__name__, err), file=sys.stderr)
        return EXIT_NUMERICAL

    failed = [row for row in rows if row.error is not None]
    for row in failed:
        print(
            "failed: variant=%s %s=%.17g %s [%s]: %s"
            % (
                row.variant or "-",
                experiment.sweep_label,
                row.sweep_value,
                row.metric,
                row.engine,
                row.error,
            ),
            file=sys.stderr,
        )
    print(
        "wrote %s.csv (%d rows, %d failed) in %s"
        % (experiment.name, len(rows), len(failed), args.out)
    )
    return EXIT_NUMERICAL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
