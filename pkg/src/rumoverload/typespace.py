"""
Deterministic choice types and the merged type matrix.

Only default versus active choice is observed, so every rational type is
summarized by its witness set S, the alternatives it prefers to the default:
it chooses actively from A exactly when S and A intersect. Overload types
follow a rational witness but choose the default from designated large
problems. Columns are stored as a boolean (H, problems) array of active bits
and stacked into (active, passive) rows on demand.
"""

import enum
import itertools
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd

from .errors import SizeGuardError, ValidationError

logger = logging.getLogger(__name__)

MAX_ENUMERATED_ALTERNATIVES = 24
MAX_EXPLICIT_ALTERNATIVES = 5


class Tag(enum.IntEnum):
    RATIONAL = 0
    OVERLOAD_AT_X = 1
    OVERLOAD_AT_TRIPLES = 2


class Model(enum.Enum):
    I = "i"
    II = "ii"
    III = "iii"

    @classmethod
    def from_name(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError as e:
            raise ValidationError(f"Unknown model {name!r}") from e

    @property
    def tags(self):
        return {
            Model.I: (Tag.RATIONAL,),
            Model.II: (Tag.RATIONAL, Tag.OVERLOAD_AT_X),
            Model.III: (Tag.RATIONAL, Tag.OVERLOAD_AT_X, Tag.OVERLOAD_AT_TRIPLES),
        }[self]


@dataclass(frozen=True)
class TypeColumn:
    """
    One deterministic type: active bit per problem, origin tag, witness set.
    """

    pattern: tuple
    tag: Tag
    witness: tuple

    def stacked(self):
        """
        (active, passive) rows as in a ProbVector
        """
        active = np.array(self.pattern, dtype=float)
        result = np.empty(2 * active.size)
        result[0::2] = active
        result[1::2] = 1.0 - active
        return result


def forced_passive(problems, tag, grand):
    """
    Boolean mask of the problems an overload type forces to the default
    """
    forced = np.zeros(len(problems), dtype=bool)
    if tag == Tag.RATIONAL:
        return forced
    forced |= np.array([p == grand for p in problems])
    if tag == Tag.OVERLOAD_AT_TRIPLES:
        forced |= np.array([p.size >= 2 for p in problems])
    return forced


def witness_patterns(masks, witnesses, forced=None):
    """
    Active bits of every (witness, problem) pair, optionally with some
    problems forced passive
    """
    witnesses = np.asarray(witnesses, dtype=np.int64)
    patterns = (witnesses[:, None] & np.asarray(masks)[None, :]) != 0
    if forced is not None:
        patterns[:, forced] = False
    return patterns


def stack_patterns(patterns):
    """
    (H, P) active bits to the (2P, H) matrix of (active, passive) rows
    """
    patterns = np.asarray(patterns, dtype=float)
    stacked = np.empty((2 * patterns.shape[1], patterns.shape[0]))
    stacked[0::2] = patterns.T
    stacked[1::2] = 1.0 - patterns.T
    return stacked


def _first_unique(patterns):
    """
    Indices of the first occurrence of every distinct row, in order
    """
    if patterns.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    packed = np.packbits(patterns, axis=1)
    _, first = np.unique(packed, axis=0, return_index=True)
    return np.sort(first)


@dataclass(frozen=True, eq=False)
class TypeMatrix:
    """
    Deduplicated columns of the merged matrix BA.

    Attributes:
    universe (Universe): the alternatives the witnesses refer to
    problems (tuple): the problems the rows belong to, in ProbVector order
    model (Model): the model the columns were enumerated for
    patterns (np.ndarray): (H, problems) active bits
    tags (np.ndarray): (H,) Tag values
    witnesses (np.ndarray): (H,) witness bit masks
    """

    universe: object
    problems: tuple
    model: Model
    patterns: np.ndarray
    tags: np.ndarray
    witnesses: np.ndarray

    def __post_init__(self):
        patterns = np.array(self.patterns, dtype=bool, ndmin=2)
        tags = np.array(self.tags, dtype=np.int8)
        witnesses = np.array(self.witnesses, dtype=np.int64)
        object.__setattr__(self, "problems", tuple(self.problems))
        if patterns.shape[1] != len(self.problems):
            raise ValidationError(
                f"Patterns have {patterns.shape[1]} rows for "
                f"{len(self.problems)} problems"
            )
        if tags.shape != (patterns.shape[0],) or witnesses.shape != tags.shape:
            raise ValidationError("One tag and witness per column is required")
        for array in (patterns, tags, witnesses):
            array.setflags(write=False)
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "tags", tags)
        object.__setattr__(self, "witnesses", witnesses)

    @classmethod
    def deduplicated(cls, universe, problems, model, patterns, tags, witnesses):
        """
        Build from possibly repeated columns, keeping first occurrences
        """
        patterns = np.asarray(patterns, dtype=bool)
        keep = _first_unique(patterns)
        return cls(
            universe,
            problems,
            model,
            patterns[keep],
            np.asarray(tags)[keep],
            np.asarray(witnesses)[keep],
        )

    @property
    def H(self):
        return self.patterns.shape[0]

    @property
    def n_rows(self):
        return 2 * len(self.problems)

    @cached_property
    def stacked(self):
        """
        Dense (2 * problems, H) matrix with (active, passive) rows
        """
        matrix = stack_patterns(self.patterns)
        matrix.setflags(write=False)
        return matrix

    @property
    def all_passive_index(self):
        passive = np.flatnonzero(~self.patterns.any(axis=1))
        if passive.size == 0:
            raise ValidationError("The matrix lacks the all-passive column")
        return int(passive[0])

    def witness_ids(self, index):
        mask = int(self.witnesses[index])
        return tuple(
            a for i, a in enumerate(self.universe.alternatives) if mask >> i & 1
        )

    def column(self, index):
        return TypeColumn(
            tuple(bool(b) for b in self.patterns[index]),
            Tag(int(self.tags[index])),
            self.witness_ids(index),
        )

    @property
    def columns(self):
        return [self.column(i) for i in range(self.H)]

    def restrict(self, indices):
        """
        The deduplicated matrix on the problems at `indices`
        """
        indices = list(indices)
        return TypeMatrix.deduplicated(
            self.universe,
            tuple(self.problems[i] for i in indices),
            self.model,
            self.patterns[:, indices],
            self.tags,
            self.witnesses,
        )

    def align(self, problems):
        """
        The matrix on `problems`, in that order
        """
        problems = tuple(problems)
        if problems == self.problems:
            return self
        position = {p: i for i, p in enumerate(self.problems)}
        missing = [p.key for p in problems if p not in position]
        if missing:
            raise ValidationError(
                "Matrix has no rows for problem(s) %s" % ", ".join(missing)
            )
        return self.restrict([position[p] for p in problems])

    def tag_counts(self):
        return {tag.name: int(np.count_nonzero(self.tags == tag)) for tag in Tag}


def _check_enumerable(design):
    if design.k > MAX_ENUMERATED_ALTERNATIVES:
        raise SizeGuardError(
            f"{design.k} alternatives give 2^{design.k} witness sets; "
            "use column generation"
        )


def enumerate_columns(design, model=Model.I):
    """
    All distinct columns of the merged type matrix for `model`.

    Rational columns come first in binary witness order, then grand-overload
    columns, then triple-overload columns. The all-passive column (S empty)
    is column 0.
    """
    model = Model.from_name(model)
    _check_enumerable(design)
    masks = design.masks()
    witnesses = np.arange(1 << design.k, dtype=np.int64)
    blocks = []
    for tag in model.tags:
        forced = forced_passive(
            design.problems, tag, design.universe.grand_problem()
        )
        blocks.append(
            (witness_patterns(masks, witnesses, forced), np.full(witnesses.size, tag))
        )
    matrix = TypeMatrix.deduplicated(
        design.universe,
        design.problems,
        model,
        np.concatenate([b[0] for b in blocks]),
        np.concatenate([b[1] for b in blocks]),
        np.tile(witnesses, len(blocks)),
    )
    logger.info(
        "Enumerated %d columns for model %s on %d problems",
        matrix.H,
        model.value,
        design.size,
    )
    return matrix


def column_violations(matrix, design):
    """
    Indices of columns that break the witness semantics of their tag:
    active only where the witness meets the problem, passive on forced
    problems, active wherever the witness meets an unforced problem.
    """
    masks = np.array([p.mask(design.universe) for p in matrix.problems])
    grand = design.universe.grand_problem()
    bad = []
    for j in range(matrix.H):
        tag = Tag(int(matrix.tags[j]))
        forced = forced_passive(matrix.problems, tag, grand)
        meets = (masks & int(matrix.witnesses[j])) != 0
        expected = meets & ~forced
        if np.any(matrix.patterns[j] != expected):
            bad.append(j)
    return bad


def overload_indicator(matrix):
    """
    0/1 vector marking the overload columns
    """
    if matrix.model == Model.I:
        logger.warning("Model I has no overload columns; indicator is zero")
    return (matrix.tags != Tag.RATIONAL).astype(np.int64)


def _analytic_totals(design, model):
    singletons = {p.members[0] for p in design.problems if p.size == 1}
    if len(singletons) != design.k:
        return None
    if model != Model.I and design.k < 2:
        return None
    grand = design.grand_index
    if model == Model.III:
        in_large = {
            m for i, p in enumerate(design.problems[:grand]) if p.size >= 2
            for m in p.members
        }
        if len(in_large) != design.k:
            return None
    k = design.k
    sizes = np.array([p.size for p in design.problems])
    rational = 2.0**k - 2.0 ** (k - sizes)
    active = rational.copy()
    H = 2**k
    if model in (Model.II, Model.III):
        extra = rational.copy()
        extra[grand] = 0.0
        active += extra
        H += 2**k - 1
    if model == Model.III:
        extra = np.where(sizes == 1, 2.0 ** (k - 1), 0.0)
        extra[grand] = 0.0
        active += extra
        H += 2**k - 1
    return H, active


def column_totals(design, model=Model.I):
    """
    (H, M @ 1) of the full model matrix.

    Closed forms hold when every singleton is observed (plus, for models II
    and III, k >= 2, and for model III every alternative in some small
    problem with two or more members): H = 2^k, 2^(k+1) - 1 and 3 * 2^k - 2.
    Other designs are enumerated.
    """
    model = Model.from_name(model)
    totals = _analytic_totals(design, model)
    if totals is None:
        matrix = enumerate_columns(design, model)
        H = matrix.H
        active = matrix.patterns.sum(axis=0).astype(float)
    else:
        H, active = totals
    sums = np.empty(2 * design.size)
    sums[0::2] = active
    sums[1::2] = H - active
    return H, sums


def explicit_rows(design):
    """
    Row labels (problem, item) of the explicit matrix A: per problem its
    members, then the default
    """
    rows = []
    for problem in design.problems:
        for item in problem.members + (design.universe.default_id,):
            rows.append((problem, item))
    return rows


def build_explicit_A(design):
    """
    0/1 matrix whose columns are the distinct deterministic choice patterns
    of strict preference orders over the alternatives and the default.
    Returns (matrix, row labels).
    """
    if design.k > MAX_EXPLICIT_ALTERNATIVES:
        raise SizeGuardError(
            f"The explicit matrix is limited to {MAX_EXPLICIT_ALTERNATIVES} "
            f"alternatives, got {design.k}"
        )
    rows = explicit_rows(design)
    items = design.universe.alternatives + (design.universe.default_id,)
    columns = []
    seen = set()
    for order in itertools.permutations(items):
        rank = {item: r for r, item in enumerate(order)}
        column = []
        for problem in design.problems:
            offered = problem.members + (design.universe.default_id,)
            chosen = min(offered, key=rank.__getitem__)
            column.extend(int(item == chosen) for item in offered)
        column = tuple(column)
        if column not in seen:
            seen.add(column)
            columns.append(column)
    return np.array(columns, dtype=np.int64).T, rows


def merge_matrix(design):
    """
    The matrix B summing every non-default row of a problem into its active
    row and passing the default row on as its passive row
    """
    rows = explicit_rows(design)
    position = {p: i for i, p in enumerate(design.problems)}
    default = design.universe.default_id
    merge = np.zeros((2 * design.size, len(rows)), dtype=np.int64)
    for r, (problem, item) in enumerate(rows):
        merge[2 * position[problem] + (item == default), r] = 1
    return merge


def write_triplets(matrix, path):
    """
    Dump the stacked matrix as sparse row,col,value csv
    """
    rows, cols = np.nonzero(matrix.stacked)
    frame = pd.DataFrame(
        {"row": rows, "col": cols, "value": matrix.stacked[rows, cols].astype(int)}
    )
    frame.to_csv(path, index=False, encoding="utf-8")
    logger.info(
        "Wrote %d nonzeros of a %dx%d matrix to %s",
        len(frame),
        matrix.n_rows,
        matrix.H,
        path,
    )

