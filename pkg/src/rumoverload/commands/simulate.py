"""
The simulate command: synthetic panels in the experimental layout
"""

import logging
import sys

from ..choice import write_panel
from ..errors import ValidationError
from ..report import build_report, write_report
from ..sim import Kind, design_from_shape, population_for, simulate_panel
from ..streams import replication_seeds
from .base import PAPER_INPUT, CommandRunner

logger = logging.getLogger(__name__)


class SimulateCommand(CommandRunner):
    """
    Draw a population and a panel from it. The panel csv goes to --out (or
    stdout), the JSON summary to --dump.
    """

    provided_commands = ["simulate"]

    def population(self, seed):
        options = self.options
        kind = Kind(options.get("population", Kind.RATIONAL_MIX.value))
        if kind == Kind.MARGINAL_MATCH:
            observed = self.aggregate()
            design = observed.design.with_sample(
                q=options.get("q") or observed.design.q,
                n=options.get("n") or observed.design.n,
            )
            return design, population_for(kind, design, aggregate=observed)
        if self.config.input != PAPER_INPUT:
            logger.info(
                "Ignoring %s for a %s population", self.config.input, kind.value
            )
        design = design_from_shape(
            options.get("k", 3), options.get("q", 2), options.get("n", 100)
        )
        population = population_for(
            kind,
            design,
            concentration=options.get("concentration", 1.0),
            share=options.get("share", 0.2),
            seed=seed,
        )
        return design, population

    def run(self):
        population_seed, panel_seed = replication_seeds(self.config.seed, 2)
        design, population = self.population(population_seed)
        if design.n < 1:
            raise ValidationError("Simulate at least one subject (--n)")
        self.panel = simulate_panel(design, population, panel_seed)
        shown, defaults = self.panel.weighted_counts()
        return {
            "population": population.kind.value,
            "k": design.k,
            "q": design.q,
            "n": self.panel.n_subjects,
            "records": self.panel.n_records,
            "population_passive": population.probabilities().as_dict(),
            "observed_passive": {
                p.key: float(d / s) if s else None
                for p, s, d in zip(design.problems, shown, defaults)
            },
        }

    def write(self):
        out = self.config.out
        write_panel(self.panel, sys.stdout if out is None else out)
        if out is not None:
            logger.info("Panel written to %s", out)
        report = build_report(self.config, self.result)
        if self.options.get("dump"):
            write_report(report, self.options["dump"], "json")
        return report
