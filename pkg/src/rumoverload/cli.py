"""
Command line interface: parse options, assemble the run configuration and
dispatch to the command runners
"""

import argparse
import logging
import os
import sys
from functools import partial

from .commands import run_command
from .config import (
    COMMANDS,
    RunConfig,
    get_nested_value,
    load_config,
    seed_from_environment,
    tolerances_from_config,
)
from .errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

# RunConfig fields; everything else ends up in RunConfig.options
CORE_OPTIONS = (
    "input",
    "model",
    "scope",
    "bootstrap",
    "seed",
    "threads",
    "out",
    "format",
)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add(parser, *names, defaults=True, default=None, **kwargs):
    if defaults:
        kwargs["default"] = default
    parser.add_argument(*names, **kwargs)


def cli_argument_parser(defaults=True):
    """
    Parse command line arguments and show defaults in help.

    With defaults=False options that are not given stay absent from the
    namespace, which tells explicit flags from built-in defaults.
    """
    parser = _ArgumentParser(
        prog="rumoverload",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        description="Test stochastic choice data for choice overload",
        argument_default=None if defaults else argparse.SUPPRESS,
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run")
    add = partial(_add, parser, defaults=defaults)
    add(
        "--input",
        default="paper",
        help="Panel or aggregate csv, or 'paper' for the embedded data",
    )
    add("--model", default="i", choices=("i", "ii", "iii"), help="Type model")
    add(
        "--scope",
        default="all",
        choices=("all", "exclude-grand"),
        help="Problems entering the RUM test",
    )
    add(
        "--B",
        dest="bootstrap",
        default=1000,
        type=int,
        help="Bootstrap replications",
    )
    add("--seed", type=int, help="Base seed, required for stochastic commands")
    add(
        "--threads",
        default=os.cpu_count() or 1,
        type=int,
        help="Worker processes for bootstrap replications and uniform draws",
    )
    add("--out", help="Output file, stdout if not given")
    add("--format", default="json", choices=("json", "csv"), help="Report format")
    add("-c", "--configfile", help="Path to configuration file")
    add(
        "-v",
        "--verbose",
        default=0,
        action="count",
        help="Verbosity level, repeat to increase verbosity",
    )
    add("--logfile", help="Write the log to this file instead of stderr")
    add(
        "--method",
        default="both",
        choices=("finite", "asymptotic", "both"),
        help="Min test method",
    )
    add("--level", default=0.05, type=float, help="Significance level")
    add("--q", type=int, help="Small problems per subject")
    add("--n", type=int, help="Number of subjects")
    add("--k", default=3, type=int, help="Alternatives of a simulated design")
    add(
        "--population",
        default="rational",
        choices=("rational", "overload", "marginal-match"),
        help="Population to simulate from",
    )
    add(
        "--marginal-match",
        dest="marginal_match",
        default=False,
        action="store_true",
        help="Simulate independent answers matching the input frequencies",
    )
    add(
        "--concentration",
        default=1.0,
        type=float,
        help="Dirichlet concentration of random rational populations",
    )
    add(
        "--share",
        default=0.2,
        type=float,
        help="Overload share of an overload population",
    )
    add(
        "--extra-columns",
        dest="extra_columns",
        default=300,
        type=int,
        help="Random columns seeding column generation",
    )
    add(
        "--max-iter",
        dest="max_iter",
        default=500,
        type=int,
        help="Column generation iteration cap",
    )
    add(
        "--draws",
        default=0,
        type=int,
        help="Uniform draws for the restrictiveness of each model (report)",
    )
    add("--dump", help="CSV with per replication or per iteration detail")
    return parser


def run_config(argv=None):
    """
    Build the RunConfig of a command line.
    Precedence: flag > config file > RUMOVERLOAD_SEED (seed only) > default.
    """
    args = vars(cli_argument_parser().parse_args(argv))
    explicit = vars(cli_argument_parser(defaults=False).parse_args(argv))
    file_config = load_config(args["configfile"])
    section = get_nested_value(file_config, ["rumoverload"], {})

    settings = {}
    for name, default in args.items():
        if name in ("command", "configfile", "verbose", "logfile"):
            continue
        if name in explicit:
            settings[name] = explicit[name]
        elif name in section:
            settings[name] = section[name]
        elif name == "seed":
            settings[name] = seed_from_environment()
        else:
            settings[name] = default
    if settings.pop("marginal_match"):
        settings["population"] = "marginal-match"

    core = {name: settings.pop(name) for name in CORE_OPTIONS}
    options = {k: v for k, v in settings.items() if v is not None}
    return RunConfig(
        command=args["command"],
        tolerances=tolerances_from_config(file_config),
        options=options,
        **core,
    )


def run(config):
    """
    Run one configured command; returns the process exit code
    """
    try:
        run_command(config)
    except ValidationError as e:
        logger.error("%s", e)
        print(f"rumoverload: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        logger.error("%s", e)
        print(f"rumoverload: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None):
    """
    Main function
    """
    args = cli_argument_parser().parse_args(argv)
    logging.basicConfig(
        filename=args.logfile,
        encoding="utf-8",
        level=max(logging.WARNING - 10 * args.verbose, logging.DEBUG),
    )
    try:
        config = run_config(argv)
    except ValidationError as e:
        print(f"rumoverload: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    logger.info("Configuration: %s", config.as_dict())
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
