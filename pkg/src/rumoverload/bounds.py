"""
Bounds on the default probability of a large problem: the Min bound, the
RUM bound of a linear program over types, its feasible analog at the
constrained estimator, the rational fraction of the data, and the
restrictiveness of each model against uniformly drawn data.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .choice import AggregateDataset, ProbVector
from .config import DEFAULT_TOLERANCES
from .errors import ValidationError
from .optim import LinProgProblem, QuadProjectionProblem, lp, nnls
from .streams import make_rng, map_replications, replication_seeds
from .typespace import Model, enumerate_columns

logger = logging.getLogger(__name__)

NOT_DEFINED = "NOT_DEFINED"


@dataclass(frozen=True)
class MinBound:
    value: float
    argmin: tuple


@dataclass(frozen=True)
class RumBound:
    """
    value is a probability, or NOT_DEFINED when the data on the subsets of
    the target cannot be rationalized; residual is then the norm of the
    projection residual.
    """

    value: float | str
    residual: float = 0.0

    @property
    def defined(self):
        return self.value != NOT_DEFINED


@dataclass(frozen=True, eq=False)
class Estimate:
    """
    eta (ProbVector): the fitted probabilities, renormalized per problem
    projection (ProjectionResult): the raw projection
    """

    eta: ProbVector
    projection: object


@dataclass(frozen=True)
class FeasibleBound:
    p_rum_feasible: float | str
    min_bound_of_eta: float
    eta: ProbVector = field(compare=False)


@dataclass(frozen=True)
class MseReport:
    """
    rmse: root mean squared passive deviation over problems and draws
    standard_error: Monte Carlo standard error of rmse
    mean_square: the mean squared passive deviation before the root
    objective_per_problem: mean projection objective divided by problems,
        exactly monotone in the model
    draws: number of draws
    """

    rmse: float
    standard_error: float
    mean_square: float
    objective_per_problem: float
    draws: int


@dataclass
class BoundsReport:
    """
    Everything the bounds command reports for one data set and model.
    """

    model: str
    p_min: float
    p_min_argmin: list
    p_rum: float | str
    p_rum_residual: float
    p_rum_feasible: float | str
    min_bound_of_eta: float
    eta_hat: dict
    rational_fraction: dict
    weights: str
    tolerances: dict

    def __post_init__(self):
        if self.p_rum != NOT_DEFINED and self.p_rum > self.p_min + 1e-7:
            logger.warning(
                "RUM bound %.6f exceeds the Min bound %.6f", self.p_rum, self.p_min
            )


def _grand_position(problems):
    members = set()
    for p in problems:
        members.update(p.members)
    for i, p in enumerate(problems):
        if set(p.members) == members:
            return i
    return None


def min_bound(data, target=None):
    """
    Smallest default probability over the problems other than the target
    (the grand problem unless given), with all minimizers
    """
    if isinstance(data, AggregateDataset):
        data = data.frequencies()
    problems = data.problems
    exclude = _grand_position(problems) if target is None else None
    if target is not None and target in problems:
        exclude = problems.index(target)
    keep = [i for i in range(len(problems)) if i != exclude]
    if not keep:
        raise ValidationError("The Min bound needs a problem besides the target")
    passive = data.passive[keep]
    value = float(passive.min())
    argmin = tuple(problems[keep[i]] for i in np.flatnonzero(passive == value))
    return MinBound(value, argmin)


def _row_indices(positions):
    return np.ravel([[2 * i, 2 * i + 1] for i in positions]).astype(int)


def _projection(freqs, matrix, weights, lower, tolerances, passive_set=None):
    matrix = matrix.align(freqs.problems)
    problem = QuadProjectionProblem(matrix.stacked, freqs.values, weights, lower)
    return nnls(problem, tolerances, passive_set)


def _renormalized(problems, fitted, tolerance):
    fitted = np.asarray(fitted, dtype=float)
    sums = fitted[0::2] + fitted[1::2]
    if np.any(sums <= 0):
        raise ValidationError("The projection vanishes on some problem")
    values = np.empty_like(fitted)
    values[0::2] = fitted[0::2] / sums
    values[1::2] = fitted[1::2] / sums
    return ProbVector(problems, np.clip(values, 0.0, 1.0), tolerance)


def constrained_estimator(
    freqs, matrix, weights=None, lower=0.0, tolerances=DEFAULT_TOLERANCES
):
    """
    Project the frequencies on the (tightened) cone of the matrix columns
    """
    projection = _projection(freqs, matrix, weights, lower, tolerances)
    eta = _renormalized(freqs.problems, projection.fitted, 1e-9)
    return Estimate(eta, projection)


def rum_bound(pvec, matrix, target, tolerances=DEFAULT_TOLERANCES, slack=0.0):
    """
    Largest default probability at `target` consistent with a mixture of
    types reproducing pvec on the problems contained in the target.
    Equality rows may be relaxed by `slack` on either side.
    """
    contained = [i for i, p in enumerate(pvec.problems) if p.issubset(target)]
    if not contained:
        return RumBound(1.0)
    restricted = pvec.restrict(contained)
    sub = matrix.align(restricted.problems + (target,))
    rows = _row_indices(range(len(contained)))
    M = sub.stacked[rows]
    a = sub.stacked[2 * len(contained) + 1]
    y = restricted.values

    check = nnls(QuadProjectionProblem(M, y), tolerances)
    residual = float(np.sqrt(check.objective))
    if residual > max(slack, tolerances.equality_slack):
        logger.info(
            "Data on subsets of %s are not rationalizable (residual %.3g)",
            target,
            residual,
        )
        return RumBound(NOT_DEFINED, residual)

    if slack > 0:
        program = LinProgProblem(
            a, A_ub=np.vstack([M, -M]), b_ub=np.concatenate([y + slack, slack - y])
        )
    else:
        program = LinProgProblem(a, A_eq=M, b_eq=y)
    result = lp(program, tolerances)
    if not result.optimal:
        logger.info("RUM bound program is %s", result.status)
        return RumBound(NOT_DEFINED, residual)
    return RumBound(float(np.clip(result.value, 0.0, 1.0)), residual)


def feasible_rum_bound(freqs, matrix, weights=None, tolerances=DEFAULT_TOLERANCES):
    """
    Project the frequencies on the problems other than the grand problem,
    then evaluate the RUM bound and the Min bound at the projection
    """
    grand = _grand_position(freqs.problems)
    if grand is None:
        raise ValidationError("The frequencies lack the grand problem")
    small = [i for i in range(len(freqs.problems)) if i != grand]
    restricted = freqs.restrict(small)
    if weights is not None:
        weights = np.asarray(weights, dtype=float)[_row_indices(small)]
    estimate = constrained_estimator(restricted, matrix, weights, 0.0, tolerances)
    target = freqs.problems[grand]
    bound = rum_bound(
        estimate.eta, matrix, target, tolerances, slack=tolerances.equality_slack
    )
    eta_min = min_bound(estimate.eta, target=target)
    return FeasibleBound(bound.value, eta_min.value, estimate.eta)


def rational_fraction(freqs, matrix, tolerances=DEFAULT_TOLERANCES):
    """
    Largest mass of types whose implied probabilities stay below the data
    on every row, max 1'nu s.t. M nu <= freqs
    """
    sub = matrix.align(freqs.problems)
    program = LinProgProblem(np.ones(sub.H), A_ub=sub.stacked, b_ub=freqs.values)
    result = lp(program, tolerances)
    if not result.optimal:
        raise ValidationError(f"Rational fraction program is {result.status}")
    return float(np.clip(result.value, 0.0, 1.0))


def projection_mse(freqs, matrix, weights=None, tolerances=DEFAULT_TOLERANCES):
    """
    Root mean squared passive deviation between data and their projection
    """
    projection = _projection(freqs, matrix, weights, 0.0, tolerances)
    return float(np.sqrt(np.mean((freqs.passive - projection.fitted[1::2]) ** 2)))


def _uniform_draw(child, problems, stacked, weights, tolerances):
    passive = make_rng(child).random(len(problems))
    target = ProbVector.from_passive(problems, passive)
    result = nnls(QuadProjectionProblem(stacked, target.values, weights), tolerances)
    return np.mean((passive - result.fitted[1::2]) ** 2), result.objective


def uniform_mse(
    matrix,
    weights=None,
    draws=2000,
    seed=0,
    tolerances=DEFAULT_TOLERANCES,
    threads=1,
):
    """
    Project passive probabilities drawn uniformly on [0, 1] per problem.
    The headline `rmse` is the root of the squared passive deviation
    averaged over problems and draws.
    """
    if draws < 1:
        raise ValidationError("uniform_mse needs at least one draw")
    problems = matrix.problems
    results = map_replications(
        partial(
            _uniform_draw,
            problems=problems,
            stacked=matrix.stacked,
            weights=weights,
            tolerances=tolerances,
        ),
        replication_seeds(seed, draws),
        threads,
        label="Uniform MSE draw",
    )
    per_draw, objectives = (np.array(column) for column in zip(*results))
    mean_square = float(per_draw.mean())
    rmse = float(np.sqrt(mean_square))
    if draws > 1 and rmse > 0:
        # delta method on the square root
        standard_error = float(per_draw.std(ddof=1) / np.sqrt(draws) / (2 * rmse))
    else:
        standard_error = float("nan")
    return MseReport(
        rmse=rmse,
        standard_error=standard_error,
        mean_square=mean_square,
        objective_per_problem=float(objectives.mean() / len(problems)),
        draws=draws,
    )


def bounds_report(aggregate, model=Model.I, tolerances=DEFAULT_TOLERANCES):
    """
    Min bound, RUM bound, feasible RUM bound and rational fractions of all
    three models for an aggregate data set
    """
    model = Model.from_name(model)
    design = aggregate.design
    freqs = aggregate.frequencies()
    matrices = {m: enumerate_columns(design, m) for m in Model}
    matrix = matrices[model]
    grand = design.universe.grand_problem()
    small = freqs.restrict(design.small_indices)

    minimum = min_bound(freqs)
    exact = rum_bound(small, matrix, grand, tolerances)
    feasible = feasible_rum_bound(freqs, matrix, tolerances=tolerances)
    fractions = {
        m.value: rational_fraction(freqs, matrices[m], tolerances) for m in Model
    }
    logger.info(
        "Min bound %.4f, feasible RUM bound %s, rational fraction %.3f",
        minimum.value,
        feasible.p_rum_feasible,
        fractions[model.value],
    )
    return BoundsReport(
        model=model.value,
        p_min=minimum.value,
        p_min_argmin=[p.key for p in minimum.argmin],
        p_rum=exact.value,
        p_rum_residual=exact.residual,
        p_rum_feasible=feasible.p_rum_feasible,
        min_bound_of_eta=feasible.min_bound_of_eta,
        eta_hat=feasible.eta.as_dict(),
        rational_fraction=fractions,
        weights="identity on the problems other than the grand problem",
        tolerances=dataclasses.asdict(tolerances),
    )
