"""
The test-rum command: cone projection test with bootstrap p-value
"""

from ..report import write_j_star
from ..rumtest import bootstrap_p
from .base import CommandRunner


class RumTestCommand(CommandRunner):
    """
    J_n and its p-value for one model and scope
    """

    provided_commands = ["test-rum"]
    needs_panel = True

    def run(self):
        return bootstrap_p(
            self.data(),
            self.config.model,
            self.config.bootstrap,
            self.config.seed,
            self.config.scope,
            self.config.threads,
            self.tolerances,
        )

    def dump(self, path):
        write_j_star(self.result, path)
