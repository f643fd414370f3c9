"""
The test-min command: finite sample and asymptotic tests of the Min bound
"""

import logging

from ..errors import ValidationError
from ..mintests import asymptotic_min_test, finite_min_test
from ..report import write_adjusted_p_values
from .base import CommandRunner

logger = logging.getLogger(__name__)

METHODS = ("finite", "asymptotic", "both")


class MinTestCommand(CommandRunner):
    """
    Runs the finite sample test, the asymptotic test, or both
    """

    provided_commands = ["test-min"]
    needs_panel = True

    def run(self):
        method = self.options.get("method", "both")
        if method not in METHODS:
            raise ValidationError(f"Unknown Min test method: {method}")
        panel = self.data()
        result = {}
        if method in ("finite", "both"):
            result["finite"] = finite_min_test(panel, self.options.get("level", 0.05))
        if method in ("asymptotic", "both"):
            result["asymptotic"] = asymptotic_min_test(
                panel, self.config.bootstrap, self.config.seed, self.config.threads
            )
        return result

    def dump(self, path):
        if "finite" not in self.result:
            logger.warning("Adjusted p-values are only dumped for the finite test")
            return
        write_adjusted_p_values(self.result["finite"], path)
