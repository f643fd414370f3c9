"""
The colgen command: projection on the full model cone by column generation
"""

import logging

import numpy as np

from ..colgen import solve_colgen, write_log
from ..errors import SizeGuardError, ValidationError
from ..rumtest import ALL_DATA, weighting_matrix
from ..typespace import Model, column_totals
from .base import CommandRunner

logger = logging.getLogger(__name__)


class ColgenCommand(CommandRunner):
    """
    Column generation projection of the observed frequencies
    """

    provided_commands = ["colgen"]

    def run(self):
        if self.config.scope != ALL_DATA:
            raise ValidationError("colgen projects all problems; use --scope all")
        data = self.aggregate()
        design = data.design
        model = Model.from_name(self.config.model)
        freqs = data.frequencies()
        if design.q > 0:
            weights = weighting_matrix(design, ALL_DATA)
        else:
            weights = np.ones(2 * design.size)
        try:
            totals = column_totals(design, model)
        except SizeGuardError:
            logger.info("Column count unknown without closed form")
            totals = None
        state = solve_colgen(
            freqs,
            design,
            weights,
            model=model,
            max_iter=self.options.get("max_iter", 500),
            extra=self.options.get("extra_columns", 300),
            seed=self.config.seed,
            tolerances=self.tolerances,
            totals=totals,
        )
        self.state = state
        return {
            "model": model.value,
            "status": state.status,
            "objective": state.objective,
            "J": data.design.n * state.objective,
            "H": state.H,
            "columns": state.n_columns,
            "seeded": state.seeded,
            "generated": state.generated,
            "rank": state.rank,
            "iterations": len(state.log),
            "generated_tags": {
                tag.name: state.tags[state.seeded :].count(tag)
                for tag in model.tags
            },
            "eta": {
                p.key: float(v) for p, v in zip(design.problems, state.eta[1::2])
            },
            "weights": {"w": float(weights[-1])},
        }

    def dump(self, path):
        write_log(self.state, path)
