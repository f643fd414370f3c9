"""
The bounds command: Min bound, RUM bound and feasible RUM bound
"""

from ..bounds import bounds_report
from .base import CommandRunner


class BoundsCommand(CommandRunner):
    """
    Bounds on the grand problem's default probability for one model
    """

    provided_commands = ["bounds"]

    def run(self):
        return bounds_report(self.aggregate(), self.config.model, self.tolerances)
