"""
Cone projection test of random utility rationalizability.

J_n is n times the weighted distance from the frequencies to the cone
spanned by the type matrix. Its bootstrap distribution is taken on the
tightened cone where every type has weight at least tau_n / H, after
recentering the bootstrap frequencies at the tightened projection.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .choice import ProbVector, bootstrap_passive_frequencies
from .config import DEFAULT_TOLERANCES
from .errors import ValidationError
from .optim import LinProgProblem, QuadProjectionProblem, lp, nnls
from .streams import map_replications
from .typespace import Model, enumerate_columns, overload_indicator

logger = logging.getLogger(__name__)

ALL_DATA = "all"
EXCLUDE_GRAND = "exclude-grand"


@dataclass(frozen=True)
class Tuning:
    cell_size: float
    tau: float


@dataclass(frozen=True, eq=False)
class JResult:
    J: float
    nu: np.ndarray
    eta: np.ndarray
    projection: object


@dataclass
class RumTestReport:
    """
    Attributes:
    model (str): "i", "ii" or "iii"
    scope (str): "all" or "exclude-grand"
    J (float): J_n
    p_value (float): share of replications with J* >= J_n
    support_size (int): columns with positive weight at the point estimate
    eta_tau (dict): passive entries of the tightened projection per problem
    overload_mass (float | None): smallest overload share among the optimal
        mixtures, None for model I
    tuning (dict): tau_n, cell size, w, lower bound, H, B and seed
    skipped (dict): per problem count of replications that reused the full
        sample frequency
    j_star (np.ndarray): per replication statistics
    """

    model: str
    scope: str
    J: float
    p_value: float
    support_size: int
    eta_tau: dict
    overload_mass: float | None
    tuning: dict
    skipped: dict = field(default_factory=dict)
    j_star: np.ndarray = field(default=None, repr=False)


def weighting_matrix(design, scope=ALL_DATA):
    """
    Diagonal of Omega: 1 on every row, w = k(k+1)/(2q) on the two grand rows.
    Without the grand problem all weights are 1.
    """
    if scope == EXCLUDE_GRAND:
        return np.ones(2 * (design.size - 1))
    weights = np.ones(2 * design.size)
    weights[-2:] = design.grand_weight
    return weights


def tuning(design):
    """
    Expected small cell size and tau_n = sqrt(log(cell) / cell)
    """
    if design.n < 2:
        raise ValidationError("Tuning needs at least two subjects")
    cell = design.cell_size
    if cell <= 0:
        raise ValidationError("Tuning needs q > 0")
    return Tuning(cell, math.sqrt(max(math.log(cell), 0.0) / cell))


def j_statistic(
    freqs,
    matrix,
    weights,
    n,
    lower=0.0,
    tolerances=DEFAULT_TOLERANCES,
    passive_set=None,
):
    """
    n times the projection objective, with the minimizer and fitted point
    """
    sub = matrix.align(freqs.problems)
    problem = QuadProjectionProblem(sub.stacked, freqs.values, weights, lower)
    projection = nnls(problem, tolerances, passive_set)
    return JResult(
        n * projection.objective, projection.nu, projection.fitted, projection
    )


def bootstrap_statistic(
    passive,
    matrix,
    recenter,
    weights,
    lower,
    n,
    tolerances=DEFAULT_TOLERANCES,
    start=None,
):
    """
    J* of one bootstrap sample: n times the distance of its recentered
    frequencies to the tightened cone of the stacked `matrix`.

    `start` warm starts the solver from a passive set (usually the one of
    the tightened projection of the data); the statistic does not depend
    on it.
    """
    passive = np.asarray(passive, dtype=float)
    target = np.empty(2 * passive.size)
    target[0::2] = 1.0 - passive
    target[1::2] = passive
    problem = QuadProjectionProblem(matrix, target + recenter, weights, lower)
    return n * nnls(problem, tolerances, start).objective


def overload_mass(matrix, fitted, tolerances=DEFAULT_TOLERANCES):
    """
    Smallest overload share e'nu / 1'nu over the mixtures reproducing
    `fitted` up to the equality slack
    """
    e = overload_indicator(matrix).astype(float)
    if not e.any():
        return 0.0
    M = matrix.stacked
    fitted = np.asarray(fitted, dtype=float)
    slack = tolerances.equality_slack
    program = LinProgProblem(
        -e,
        A_ub=np.vstack([M, -M]),
        b_ub=np.concatenate([fitted + slack, slack - fitted]),
    )
    result = lp(program, tolerances)
    if not result.optimal:
        raise ValidationError(f"Overload mass program is {result.status}")
    total = result.x.sum()
    return float(-result.value / total) if total > 0 else 0.0


def _scoped(panel, matrix, scope):
    design = panel.design
    shown, defaults = panel.weighted_counts()
    uncovered = [p.key for p, s in zip(design.problems, shown) if s == 0]
    if uncovered:
        raise ValidationError(
            "Problems without observations: %s" % ", ".join(uncovered)
        )
    freqs = ProbVector.from_passive(design.problems, defaults / shown)
    if scope == EXCLUDE_GRAND:
        keep = list(design.small_indices)
        return keep, freqs.restrict(keep), matrix.restrict(keep)
    if scope != ALL_DATA:
        raise ValidationError(f"Unknown scope {scope!r}")
    return list(range(design.size)), freqs, matrix


def bootstrap_p(
    panel,
    model=Model.I,
    B=1000,
    seed=0,
    scope=ALL_DATA,
    threads=1,
    tolerances=DEFAULT_TOLERANCES,
    matrix=None,
):
    """
    J_n with its tightened-cone bootstrap p-value
    """
    model = Model.from_name(model)
    design = panel.design
    if matrix is None:
        matrix = enumerate_columns(design, model)
    keep, freqs, matrix = _scoped(panel, matrix, scope)
    weights = weighting_matrix(design, scope)
    grand_weight = design.grand_weight if scope == ALL_DATA else 1.0
    n = panel.n_subjects
    tune = tuning(design)
    H = matrix.H
    lower = tune.tau / H
    if B < 1000:
        logger.info("B = %d is below the recommended 1000 replications", B)

    point = j_statistic(freqs, matrix, weights, n, 0.0, tolerances)
    tight = j_statistic(
        freqs, matrix, weights, n, lower, tolerances, point.projection.passive_set
    )
    logger.info(
        "Model %s, %s: J_n = %.6g with %d support columns (H = %d, tau = %.4f)",
        model.value,
        scope,
        point.J,
        point.projection.passive_set.size,
        H,
        tune.tau,
    )

    draws = bootstrap_passive_frequencies(panel, seed, B, threads)[:, keep]
    missing = np.isnan(draws)
    draws = np.where(missing, freqs.passive[None, :], draws)
    skipped = {
        freqs.problems[i].key: int(c) for i, c in enumerate(missing.sum(axis=0)) if c
    }
    replicate = partial(
        bootstrap_statistic,
        matrix=matrix.stacked,
        recenter=tight.eta - freqs.values,
        weights=weights,
        lower=lower,
        n=n,
        tolerances=tolerances,
        start=tight.projection.passive_set,
    )
    j_star = np.array(
        map_replications(replicate, draws, threads, label="Bootstrap replication")
    )
    p_value = float(np.mean(j_star >= point.J))

    mass = None
    if model != Model.I:
        mass = overload_mass(matrix, point.eta, tolerances)
    eta_tau = {
        p.key: float(v) for p, v in zip(freqs.problems, tight.eta[1::2])
    }
    return RumTestReport(
        model=model.value,
        scope=scope,
        J=float(point.J),
        p_value=p_value,
        support_size=int(point.projection.passive_set.size),
        eta_tau=eta_tau,
        overload_mass=mass,
        tuning={
            "tau_n": tune.tau,
            "cell_size": tune.cell_size,
            "w": grand_weight,
            "lower": lower,
            "H": H,
            "B": B,
            "seed": seed,
            "n": n,
        },
        skipped=skipped,
        j_star=j_star,
    )
