"""
The report command: the deterministic analyses of a data set in one go
"""

import logging

from ..bounds import bounds_report, min_bound, rum_bound, uniform_mse
from ..mintests import descriptives
from ..paperdata import example_design, example_probabilities, jam_example
from ..typespace import Model, enumerate_columns
from .base import CommandRunner

logger = logging.getLogger(__name__)


def example_bounds(tolerances):
    """
    Min and RUM bounds of the three-option example at its grand problem
    """
    design = example_design()
    probabilities = example_probabilities()
    grand = design.universe.grand_problem()
    small = probabilities.restrict(design.small_indices)
    return {
        "min_bound": min_bound(small).value,
        "rum_bound": rum_bound(
            small, enumerate_columns(design, Model.I), grand, tolerances
        ).value,
    }


class ReportCommand(CommandRunner):
    """
    Descriptives, bounds for all models, rational fractions, the worked
    examples and, with --draws, the restrictiveness of every model
    """

    provided_commands = ["report"]

    def run(self):
        data = self.aggregate()
        p, large_active = jam_example()
        result = {
            "descriptives": descriptives(data),
            "bounds": {
                m.value: bounds_report(data, m, self.tolerances) for m in Model
            },
            "jam_example": {"p": p, "large_active": large_active},
            "example": example_bounds(self.tolerances),
        }
        result["rational_fraction"] = result["bounds"][Model.I.value].rational_fraction
        draws = self.options.get("draws", 0)
        if draws:
            seed = 0 if self.config.seed is None else self.config.seed
            result["uniform_mse"] = {
                m.value: uniform_mse(
                    enumerate_columns(data.design, m),
                    draws=draws,
                    seed=seed,
                    tolerances=self.tolerances,
                    threads=self.config.threads,
                )
                for m in Model
            }
        return result
