"""
Base classes for command runners
"""

import logging

import pandas as pd

from ..choice import (
    AGGREGATE_COLUMNS,
    PANEL_COLUMNS,
    AggregateDataset,
    aggregate,
    load_aggregate,
    load_panel,
)
from ..errors import ValidationError
from ..paperdata import paper_aggregate
from ..report import build_report, write_report

logger = logging.getLogger(__name__)

PAPER_INPUT = "paper"

registered_commands = {}


def _get_command_factory(command):
    if isinstance(command, str):
        if command not in registered_commands:
            raise ValidationError("Unknown command: %s" % command)
        return registered_commands[command]
    return command


def add_command(command_class):
    """
    Register a new command runner class, so that `run_command` can find it.

    Do not call this directly, instead use the `CommandRunner.register`
    method.
    """
    for name in command_class.provided_commands:
        registered_commands[name] = command_class
    return command_class


def load_input(config):
    """
    The embedded aggregate data for "paper", otherwise a panel or aggregate
    csv recognised by its header
    """
    if config.input == PAPER_INPUT:
        return paper_aggregate()
    try:
        header = pd.read_csv(config.input, nrows=0, skipinitialspace=True)
        columns = {str(c).strip() for c in header.columns}
    except FileNotFoundError as e:
        raise ValidationError(f"Input file not found: {config.input}") from e
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"Input file is empty: {config.input}") from e
    if set(PANEL_COLUMNS) <= columns:
        return load_panel(config.input)
    if set(AGGREGATE_COLUMNS) <= columns:
        return load_aggregate(
            config.input, q=config.options.get("q") or 0, n=config.options.get("n")
        )
    raise ValidationError(
        f"{config.input}: header must be {','.join(PANEL_COLUMNS)} "
        f"or {','.join(AGGREGATE_COLUMNS)}"
    )


class CommandRunner:
    """
    Base class for running one command of the command line interface

    All command runners must inherit from this class and implement `run`,
    returning the result object that goes into the report.

    Arguments:
    config (RunConfig): the effective configuration of the run

    Attributes:
    config: the effective configuration of the run
    result: the result of `run`, once it has been called
    """

    provided_commands = []
    needs_panel = False

    def __init__(self, config):
        self.config = config
        self.result = None

    @property
    def tolerances(self):
        return self.config.tolerances

    @property
    def options(self):
        return self.config.options

    def data(self):
        """
        The input, checked against what the command needs
        """
        data = load_input(self.config)
        if self.needs_panel and isinstance(data, AggregateDataset):
            raise ValidationError(
                f"{self.config.command} needs subject level panel data, but "
                f"{self.config.input} only has per problem counts. "
                "`simulate --marginal-match` generates a panel matching "
                "the observed frequencies as an approximation."
            )
        return data

    def aggregate(self):
        data = self.data()
        if isinstance(data, AggregateDataset):
            return data
        return aggregate(data)

    def run(self):
        """
        Run the command and return its result
        """
        raise NotImplementedError

    def dump(self, path):
        """
        Write per replication or per iteration detail to `path`
        """
        logger.warning("%s has nothing to dump", self.config.command)

    def write(self):
        """
        Write the report to --out or stdout, and the detail to --dump
        """
        report = build_report(self.config, self.result)
        write_report(report, self.config.out, self.config.format)
        if self.options.get("dump"):
            self.dump(self.options["dump"])
        return report

    @classmethod
    def register(cls):
        """
        Register the class so that `run_command` can find it.
        """
        add_command(cls)


def run_command(config):
    """
    Run the command named in `config` and write its report
    """
    factory = _get_command_factory(config.command)
    runner = factory(config)
    logger.info("Running %s on %s", config.command, config.input)
    runner.result = runner.run()
    return runner.write()
