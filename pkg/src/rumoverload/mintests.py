"""
Tests of the Min bound: is the default chosen more often from the grand
problem than from the small problem where it is chosen least?

The finite sample test compares every small problem with the grand problem
among the subjects who did not see it (Fisher exact, Bonferroni). The
asymptotic test bootstraps subjects, recenters, and drops small problems
that are clearly slack before computing the critical value.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import fisher_exact

from .choice import bootstrap_passive_frequencies, leave_out_grand_frequency
from .errors import ValidationError

logger = logging.getLogger(__name__)

FINITE = "FINITE"
ASYMPTOTIC = "ASYMPTOTIC"


@dataclass
class MinTestReport:
    """
    Attributes:
    method (str): FINITE or ASYMPTOTIC
    statistic (float): t = grand frequency minus the smallest small frequency
    p_value (float): overall p-value
    p_values (dict): unadjusted per problem p-values (finite method)
    adjusted (dict): Bonferroni adjusted p-values capped at 1 (finite method)
    significant (list): problems with adjusted p-value below `level`
    excluded (list): problems without a usable comparison sample
    retained (list): the moment selected problems (asymptotic method)
    skipped (dict): per problem count of replications without observations
    tuning (dict): alpha_n, B, seed, multiplier and level actually used
    """

    method: str
    statistic: float
    p_value: float
    p_values: dict = field(default_factory=dict)
    adjusted: dict = field(default_factory=dict)
    significant: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    retained: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)
    tuning: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Descriptives:
    grand_frequency: float
    below: tuple
    pooled_small_frequency: float
    significant_below: tuple
    level: float

    @property
    def below_count(self):
        return len(self.below)


def fisher_one_sided(a_defaults, a_shown, x_defaults, x_shown):
    """
    Probability, given the margins, of a default count in the A-sample as
    small as or smaller than the one observed
    """
    for defaults, shown in ((a_defaults, a_shown), (x_defaults, x_shown)):
        if shown <= 0:
            raise ValidationError("Fisher test needs observations in both samples")
        if not 0 <= defaults <= shown:
            raise ValidationError(f"{defaults} defaults out of {shown} shown")
    table = [
        [a_defaults, a_shown - a_defaults],
        [x_defaults, x_shown - x_defaults],
    ]
    return float(fisher_exact(table, alternative="less").pvalue)


def _full_sample(panel):
    shown, defaults = panel.weighted_counts()
    uncovered = [p.key for p, s in zip(panel.design.problems, shown) if s == 0]
    if uncovered:
        raise ValidationError(
            "Problems without observations: %s" % ", ".join(uncovered)
        )
    return shown, defaults, defaults / shown


def finite_min_test(panel, level=0.05):
    """
    Fisher exact test of every small problem against the leave-out grand
    sample, Bonferroni adjusted over the usable problems
    """
    design = panel.design
    shown, defaults, passive = _full_sample(panel)
    grand = design.grand_index
    statistic = float(passive[grand] - passive[:grand].min()) if grand else 0.0
    raw = {}
    excluded = []
    for i in design.small_indices:
        problem = design.problems[i]
        try:
            x_defaults, x_shown = leave_out_grand_frequency(panel, problem)
        except ValidationError:
            logger.warning("Excluding %s: empty leave-out cell", problem)
            excluded.append(problem.key)
            continue
        raw[problem.key] = fisher_one_sided(
            int(defaults[i]), int(shown[i]), x_defaults, x_shown
        )

    multiplier = len(design.small_indices) - len(excluded)
    adjusted = {key: min(1.0, multiplier * p) for key, p in raw.items()}
    if adjusted:
        p_value = min(adjusted.values())
    else:
        logger.warning("No small problem has a leave-out comparison sample")
        p_value = 1.0
    significant = sorted(
        (key for key, p in adjusted.items() if p < level), key=adjusted.get
    )
    logger.info(
        "Finite Min test: p = %.3g, %d of %d problems significant",
        p_value,
        len(significant),
        multiplier,
    )
    return MinTestReport(
        method=FINITE,
        statistic=statistic,
        p_value=p_value,
        p_values=raw,
        adjusted=adjusted,
        significant=significant,
        excluded=excluded,
        tuning={"multiplier": multiplier, "level": level},
    )


def pretest_level(n):
    """
    alpha_n = 1 / log(n), capped at 1
    """
    if n < 2:
        raise ValidationError("The asymptotic test needs at least two subjects")
    return min(1.0, 1.0 / math.log(n))


def asymptotic_min_test(panel, B=1000, seed=0, threads=1):
    """
    Recentered clustered bootstrap of t with moment selection at
    level alpha_n
    """
    design = panel.design
    n = panel.n_subjects
    alpha = pretest_level(n)
    if B < 1000:
        logger.info("B = %d is below the recommended 1000 replications", B)
    _, _, passive = _full_sample(panel)
    grand = design.grand_index
    small = np.array(design.small_indices, dtype=np.int64)
    if small.size == 0:
        raise ValidationError("The Min test needs a small problem")
    statistic = float(passive[grand] - passive[small].min())

    draws = bootstrap_passive_frequencies(panel, seed, B, threads)
    deviations = draws - passive[None, :]
    skipped = {
        design.problems[i].key: int(c)
        for i, c in enumerate(np.isnan(deviations).sum(axis=0))
        if c
    }

    retained = []
    for i in small:
        difference = deviations[:, i] - deviations[:, grand]
        difference = difference[~np.isnan(difference)]
        critical = np.quantile(difference, 1.0 - alpha) if difference.size else 0.0
        if passive[i] - passive[grand] > max(critical, 0.0):
            logger.debug("Pre-test drops %s", design.problems[i])
        else:
            retained.append(int(i))

    tuning = {"alpha_n": alpha, "B": B, "seed": seed, "n": n}
    if not retained:
        logger.warning("No small problem is close to binding; p-value set to 1")
        return MinTestReport(
            method=ASYMPTOTIC,
            statistic=statistic,
            p_value=1.0,
            skipped=skipped,
            tuning=tuning,
        )

    selected = deviations[:, retained]
    smallest = np.where(np.isnan(selected), np.inf, selected).min(axis=1)
    t_star = deviations[:, grand] - smallest
    usable = np.isfinite(t_star)
    if not usable.any():
        raise ValidationError("No bootstrap replication observed the problems")
    if not usable.all():
        logger.warning(
            "%d replications lack observations and are ignored",
            int((~usable).sum()),
        )
    p_value = float(np.mean(t_star[usable] >= statistic))
    tuning["replications_used"] = int(usable.sum())
    logger.info(
        "Asymptotic Min test: t = %.4f, p = %.4g, %d of %d problems retained",
        statistic,
        p_value,
        len(retained),
        small.size,
    )
    return MinTestReport(
        method=ASYMPTOTIC,
        statistic=statistic,
        p_value=p_value,
        retained=[design.problems[i].key for i in retained],
        skipped=skipped,
        tuning=tuning,
    )


def descriptives(aggregate, level=0.05):
    """
    Grand default frequency, the small problems below it, the pooled small
    frequency, and how many of those below are significantly so (Fisher
    against the full grand sample, unadjusted)
    """
    design = aggregate.design
    grand = design.grand_index
    passive = aggregate.passive_frequencies()
    small = list(design.small_indices)
    below = [i for i in small if passive[i] < passive[grand]]
    significant = [
        design.problems[i].key
        for i in below
        if fisher_one_sided(
            int(aggregate.defaults[i]),
            int(aggregate.shown[i]),
            int(aggregate.defaults[grand]),
            int(aggregate.shown[grand]),
        )
        < level
    ]
    pooled = float(aggregate.defaults[small].sum() / aggregate.shown[small].sum())
    return Descriptives(
        grand_frequency=float(passive[grand]),
        below=tuple(design.problems[i].key for i in below),
        pooled_small_frequency=pooled,
        significant_below=tuple(significant),
        level=level,
    )
