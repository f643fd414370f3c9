"""
Synthetic panels: the experimental layout (q random small problems and the
grand problem per subject) filled with answers from a mixture of types or
from independent per problem default probabilities.
"""

import enum
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .choice import ChoiceProblem, Design, PanelDataset, ProbVector, Universe
from .errors import ValidationError
from .streams import make_rng
from .typespace import Model, Tag, TypeMatrix, enumerate_columns

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-4


class Kind(enum.Enum):
    RATIONAL_MIX = "rational"
    OVERLOAD_MIX = "overload"
    MARGINAL_MATCH = "marginal-match"


@dataclass(frozen=True, eq=False)
class Population:
    """
    A mixture of types (weights over the columns of `matrix`) or, for
    MARGINAL_MATCH, one default probability per problem with independent
    answers within a subject.
    """

    kind: Kind
    problems: tuple
    weights: np.ndarray | None = None
    matrix: TypeMatrix | None = None
    passive: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "problems", tuple(self.problems))
        if self.kind == Kind.MARGINAL_MATCH:
            passive = np.array(self.passive, dtype=float)
            if passive.shape != (len(self.problems),):
                raise ValidationError("One default probability per problem")
            if np.any(passive < 0) or np.any(passive > 1):
                raise ValidationError("Default probabilities must lie in [0, 1]")
            passive.setflags(write=False)
            object.__setattr__(self, "passive", passive)
            return
        if self.matrix is None:
            raise ValidationError("A mixture population needs a type matrix")
        if self.matrix.problems != self.problems:
            raise ValidationError("The type matrix does not follow the problems")
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (self.matrix.H,):
            raise ValidationError("One weight per column is required")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValidationError("Weights must be nonnegative and sum to 1")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    def probabilities(self):
        """
        Population (active, passive) probabilities per problem
        """
        if self.kind == Kind.MARGINAL_MATCH:
            return ProbVector.from_passive(self.problems, self.passive, 1e-9)
        return ProbVector(self.problems, self.matrix.stacked @ self.weights, 1e-9)


def design_from_shape(k, q, n):
    """
    Alternatives "1".."k" with every singleton, every pair and the grand
    problem
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    universe = Universe(tuple(str(i) for i in range(1, k + 1)))
    problems = {universe.grand_problem()}
    for size in (1, 2):
        for members in itertools.combinations(universe.alternatives, size):
            problems.add(ChoiceProblem(members))
    return Design.build(universe, problems, q=q, n=n)


def random_rational_population(design, matrix, concentration=1.0, seed=0):
    """
    Symmetric Dirichlet weights over the rational columns, pushed into the
    interior so every weight is at least WEIGHT_FLOOR
    """
    if np.any(matrix.tags != Tag.RATIONAL):
        raise ValidationError("Rational populations need a model I matrix")
    matrix = matrix.align(design.problems)
    H = matrix.H
    if np.isinf(concentration) or H * WEIGHT_FLOOR >= 1:
        weights = np.full(H, 1.0 / H)
    else:
        if concentration <= 0:
            raise ValidationError("The concentration must be positive")
        draw = make_rng(seed).dirichlet(np.full(H, float(concentration)))
        weights = WEIGHT_FLOOR + (1.0 - H * WEIGHT_FLOOR) * draw
        weights /= weights.sum()
    return Population(Kind.RATIONAL_MIX, design.problems, weights, matrix)


def overload_population(population, matrix, share, tag=Tag.OVERLOAD_AT_X):
    """
    Move `share` of every rational type's mass onto the overload type with
    the same witness and `tag` in a model II or III matrix
    """
    if not 0 <= share <= 1:
        raise ValidationError("share must lie in [0, 1]")
    tag = Tag(tag)
    if tag == Tag.RATIONAL or tag not in matrix.model.tags:
        raise ValidationError(
            f"Model {matrix.model.value} has no {tag.name} columns"
        )
    position = {}
    for j, (t, w) in enumerate(zip(matrix.tags, matrix.witnesses)):
        position.setdefault((int(t), int(w)), j)
    weights = np.zeros(matrix.H)
    source = population.matrix
    for j, mass in enumerate(population.weights):
        witness = int(source.witnesses[j])
        rational = position[(int(Tag.RATIONAL), witness)]
        overload = position.get((int(tag), witness))
        if overload is None:
            weights[rational] += mass
        else:
            weights[rational] += (1.0 - share) * mass
            weights[overload] += share * mass
    return Population(Kind.OVERLOAD_MIX, population.problems, weights, matrix)


def marginal_match_population(aggregate):
    """
    Independent answers with the observed default frequency per problem
    """
    return Population(
        Kind.MARGINAL_MATCH,
        aggregate.design.problems,
        passive=aggregate.passive_frequencies(),
    )


def simulate_panel(design, population, seed, n=None):
    """
    n subjects, each shown q distinct small problems drawn uniformly and the
    grand problem
    """
    n = design.n if n is None else n
    small = len(design.small_indices)
    if design.q > small:
        raise ValidationError(f"q = {design.q} exceeds the {small} small problems")
    if n < 1:
        raise ValidationError("Simulate at least one subject")
    if tuple(population.problems) != tuple(design.problems):
        raise ValidationError("The population does not follow the design")
    rng = make_rng(seed)
    q = design.q
    if q:
        shown = np.argsort(rng.random((n, small)), axis=1)[:, :q]
        shown = np.sort(shown, axis=1)
    else:
        shown = np.zeros((n, 0), dtype=np.int64)
    problem_index = np.column_stack([shown, np.full(n, design.grand_index)]).ravel()
    subject_index = np.repeat(np.arange(n), q + 1)

    if population.kind == Kind.MARGINAL_MATCH:
        draws = rng.random(problem_index.size)
        chose_default = draws < population.passive[problem_index]
    else:
        patterns = population.matrix.patterns
        types = rng.choice(population.matrix.H, size=n, p=population.weights)
        chose_default = ~patterns[types[subject_index], problem_index]

    panel = PanelDataset(
        design.with_sample(n=n),
        tuple(str(i + 1) for i in range(n)),
        subject_index,
        problem_index,
        chose_default,
    )
    logger.info(
        "Simulated %d subjects from a %s population", n, population.kind.value
    )
    return panel


def population_for(
    kind, design, aggregate=None, concentration=1.0, share=0.2, seed=0
):
    """
    Populations by name, as used by the simulate command
    """
    kind = Kind(kind)
    if kind == Kind.MARGINAL_MATCH:
        if aggregate is None:
            raise ValidationError("marginal-match needs aggregate frequencies")
        return marginal_match_population(aggregate)
    rational = random_rational_population(
        design, enumerate_columns(design, Model.I), concentration, seed
    )
    if kind == Kind.RATIONAL_MIX:
        return rational
    return overload_population(rational, enumerate_columns(design, Model.II), share)
