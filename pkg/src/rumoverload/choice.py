"""
Choice data: universes, choice problems, designs, panel and aggregate data
sets, empirical frequencies and the clustered bootstrap.

Problems are keyed by their sorted, dash-joined non-default alternative ids
("3-11"); the default is implicitly a member of every problem. The grand
problem (all alternatives) is always stored last.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd

from .errors import ParseError, ValidationError
from .streams import make_rng, map_replications, replication_seeds

logger = logging.getLogger(__name__)

SEPARATOR = "-"
GRAND_TOKEN = "ALL"
PANEL_COLUMNS = ["subject_id", "choice_set", "chose_default"]
AGGREGATE_COLUMNS = ["choice_set", "shown", "default"]
_TRUE = {"1", "true", "True", "TRUE"}
_FALSE = {"0", "false", "False", "FALSE"}


def alternative_sort_key(identifier):
    """
    Numeric ids sort numerically, everything else lexically after them
    """
    identifier = str(identifier)
    if identifier.isdigit():
        return (0, int(identifier), "")
    return (1, 0, identifier)


def _read_csv(path, columns):
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skipinitialspace=True
        )
    except FileNotFoundError as e:
        raise ValidationError(f"File not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"{path}: no records") from e
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: {e}") from e
    header = [c.strip() for c in frame.columns]
    if header != columns:
        raise ParseError(
            "expected header %r, got %r" % (",".join(columns), ",".join(header)),
            line=1,
        )
    frame.columns = columns
    if frame.empty:
        raise ValidationError(f"{path}: no records")
    return frame


@dataclass(frozen=True)
class Universe:
    """
    The non-default alternatives X (in a fixed order) and the default d.
    """

    alternatives: tuple
    default_id: str = "0"

    def __post_init__(self):
        alternatives = tuple(str(a) for a in self.alternatives)
        object.__setattr__(self, "alternatives", alternatives)
        object.__setattr__(self, "default_id", str(self.default_id))
        if not alternatives:
            raise ValidationError("A universe needs at least one alternative")
        duplicates = [a for a, c in Counter(alternatives).items() if c > 1]
        if duplicates:
            raise ValidationError(f"Duplicate alternatives: {duplicates}")
        if self.default_id in alternatives:
            raise ValidationError(
                f"Default {self.default_id!r} listed among the alternatives"
            )

    @property
    def k(self):
        return len(self.alternatives)

    def position(self, identifier):
        try:
            return self.alternatives.index(identifier)
        except ValueError as e:
            raise ValidationError(f"Unknown alternative id {identifier!r}") from e

    def grand_problem(self):
        return ChoiceProblem(self.alternatives)


@dataclass(frozen=True, order=False)
class ChoiceProblem:
    """
    A choice problem, stored as the sorted set of its non-default members.
    """

    members: tuple

    def __post_init__(self):
        members = {str(m).strip() for m in self.members}
        if not members or "" in members:
            raise ValidationError("A choice problem needs at least one member")
        object.__setattr__(
            self, "members", tuple(sorted(members, key=alternative_sort_key))
        )

    @classmethod
    def from_key(cls, key, universe=None):
        """
        Parse "3-11" (or "ALL" given a universe)
        """
        key = str(key).strip()
        if key == GRAND_TOKEN:
            if universe is None:
                raise ValidationError(f"{GRAND_TOKEN} needs a known universe")
            return universe.grand_problem()
        return cls(tuple(key.split(SEPARATOR)))

    @property
    def key(self):
        return SEPARATOR.join(self.members)

    @property
    def size(self):
        return len(self.members)

    def issubset(self, other):
        return set(self.members) <= set(other.members)

    def mask(self, universe):
        """
        Bit mask of the members over the universe's alternative order
        """
        result = 0
        for member in self.members:
            result |= 1 << universe.position(member)
        return result

    def __str__(self):
        return self.key


def _sort_problems(problems, grand):
    small = sorted(
        (p for p in problems if p != grand),
        key=lambda p: (p.size, [alternative_sort_key(m) for m in p.members]),
    )
    return tuple(small) + (grand,)


@dataclass(frozen=True)
class Design:
    """
    The collection D of observed choice problems together with the sampling
    scheme: every subject sees q small problems and the grand problem.
    """

    universe: Universe
    problems: tuple
    q: int
    n: int

    def __post_init__(self):
        problems = tuple(self.problems)
        object.__setattr__(self, "problems", problems)
        if not problems:
            raise ValidationError("A design needs at least one problem")
        grand = self.universe.grand_problem()
        if problems[-1] != grand:
            raise ValidationError(
                "The grand problem must be present and stored last "
                "(use Design.build to order problems)"
            )
        duplicates = [p.key for p, c in Counter(problems).items() if c > 1]
        if duplicates:
            raise ValidationError(f"Duplicate problems: {duplicates}")
        for problem in problems:
            for member in problem.members:
                if member not in self.universe.alternatives:
                    raise ValidationError(
                        f"Problem {problem.key} has unknown alternative {member!r}"
                    )
        if self.q < 0 or self.q > len(problems) - 1:
            raise ValidationError(
                f"q = {self.q} must lie between 0 and {len(problems) - 1}"
            )
        if self.n < 0:
            raise ValidationError("n must be nonnegative")

    @classmethod
    def build(cls, universe, problems, q, n):
        """
        Canonical design: small problems by size then ids, grand problem last
        """
        problems = list(problems)
        grand = universe.grand_problem()
        if grand not in problems:
            raise ValidationError("The design does not contain the grand problem")
        duplicates = [p.key for p, c in Counter(problems).items() if c > 1]
        if duplicates:
            raise ValidationError(f"Duplicate problems: {duplicates}")
        return cls(universe, _sort_problems(problems, grand), q, n)

    @property
    def k(self):
        return self.universe.k

    @property
    def size(self):
        return len(self.problems)

    @property
    def grand_index(self):
        return len(self.problems) - 1

    @property
    def small_indices(self):
        return tuple(range(len(self.problems) - 1))

    def index(self, problem):
        try:
            return self.problems.index(problem)
        except ValueError as e:
            raise ValidationError(f"Problem {problem} is not in the design") from e

    def masks(self):
        """
        Member bit masks of all problems, in design order
        """
        return np.array(
            [p.mask(self.universe) for p in self.problems], dtype=np.int64
        )

    @property
    def cell_size(self):
        """
        Expected cell size of a small problem, 2qn / (k(k+1))
        """
        return 2.0 * self.q * self.n / (self.k * (self.k + 1))

    @property
    def grand_weight(self):
        """
        Relative cell size of the grand problem, w = k(k+1) / (2q)
        """
        if self.q == 0:
            raise ValidationError("The grand problem weight needs q > 0")
        return self.k * (self.k + 1) / (2.0 * self.q)

    def with_sample(self, q=None, n=None):
        return Design(
            self.universe,
            self.problems,
            self.q if q is None else q,
            self.n if n is None else n,
        )


@dataclass(frozen=True, eq=False)
class ProbVector:
    """
    Stacked (active, passive) probabilities, two adjacent entries per
    problem, in the problem order given.
    """

    problems: tuple
    values: np.ndarray
    tolerance: float = 1e-12

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        object.__setattr__(self, "problems", tuple(self.problems))
        if values.size != 2 * len(self.problems):
            raise ValidationError(
                f"{values.size} values for {len(self.problems)} problems"
            )
        if np.any(values < -self.tolerance) or np.any(values > 1 + self.tolerance):
            raise ValidationError("Probabilities must lie in [0, 1]")
        sums = values[0::2] + values[1::2]
        if np.any(np.abs(sums - 1.0) > self.tolerance):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise ValidationError(
                f"Active and passive probabilities of {self.problems[worst]} "
                f"sum to {sums[worst]!r}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_passive(cls, problems, passive, tolerance=1e-12):
        passive = np.asarray(passive, dtype=float)
        values = np.empty(2 * passive.size)
        values[0::2] = 1.0 - passive
        values[1::2] = passive
        return cls(tuple(problems), values, tolerance)

    @property
    def passive(self):
        return self.values[1::2]

    @property
    def active(self):
        return self.values[0::2]

    def restrict(self, indices):
        """
        The sub-vector for the problems at the given indices
        """
        indices = list(indices)
        rows = np.ravel([[2 * i, 2 * i + 1] for i in indices]).astype(int)
        return ProbVector(
            tuple(self.problems[i] for i in indices),
            self.values[rows],
            self.tolerance,
        )

    def as_dict(self):
        return {p.key: float(v) for p, v in zip(self.problems, self.passive)}


@dataclass(frozen=True, eq=False)
class AggregateDataset:
    """
    Per problem counts: how often it was shown and how often d was chosen.
    """

    design: Design
    shown: np.ndarray
    defaults: np.ndarray

    def __post_init__(self):
        shown = np.array(self.shown, dtype=np.int64)
        defaults = np.array(self.defaults, dtype=np.int64)
        if shown.shape != (self.design.size,) or defaults.shape != shown.shape:
            raise ValidationError("One count pair per design problem is required")
        if np.any(defaults < 0) or np.any(defaults > shown):
            raise ValidationError("Default counts must lie between 0 and shown")
        uncovered = [p.key for p, s in zip(self.design.problems, shown) if s <= 0]
        if uncovered:
            raise ValidationError(
                "Problems without observations: %s" % ", ".join(uncovered)
            )
        shown.setflags(write=False)
        defaults.setflags(write=False)
        object.__setattr__(self, "shown", shown)
        object.__setattr__(self, "defaults", defaults)

    def frequencies(self):
        """
        Empirical (active, passive) frequencies
        """
        values = np.empty(2 * self.design.size)
        values[0::2] = (self.shown - self.defaults) / self.shown
        values[1::2] = self.defaults / self.shown
        return ProbVector(self.design.problems, values)

    def passive_frequencies(self):
        return self.defaults / self.shown

    def count(self, problem):
        i = self.design.index(problem)
        return int(self.defaults[i]), int(self.shown[i])


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """
    Per subject choice records: (subject, problem index, chose default).
    Records are held as parallel integer arrays; `records` gives the tuples.
    """

    design: Design
    subject_ids: tuple
    subject_index: np.ndarray
    problem_index: np.ndarray
    chose_default: np.ndarray

    def __post_init__(self):
        subject_index = np.array(self.subject_index, dtype=np.int64)
        problem_index = np.array(self.problem_index, dtype=np.int64)
        chose_default = np.array(self.chose_default, dtype=bool)
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))
        if not (subject_index.shape == problem_index.shape == chose_default.shape):
            raise ValidationError("Record arrays must have equal length")
        n_subjects = len(self.subject_ids)
        if subject_index.size and (
            subject_index.min() < 0 or subject_index.max() >= n_subjects
        ):
            raise ValidationError("Subject index out of range")
        if problem_index.size and (
            problem_index.min() < 0 or problem_index.max() >= self.design.size
        ):
            raise ValidationError("Problem index out of range")
        pairs = subject_index * self.design.size + problem_index
        unique, counts = np.unique(pairs, return_counts=True)
        if np.any(counts > 1):
            first = int(unique[np.argmax(counts > 1)])
            subject, problem = divmod(first, self.design.size)
            raise ValidationError(
                f"Duplicate record for subject {self.subject_ids[subject]!r} "
                f"and problem {self.design.problems[problem]}"
            )
        for array in (subject_index, problem_index, chose_default):
            array.setflags(write=False)
        object.__setattr__(self, "subject_index", subject_index)
        object.__setattr__(self, "problem_index", problem_index)
        object.__setattr__(self, "chose_default", chose_default)

    @classmethod
    def from_records(cls, design, records):
        """
        Build from (subject_id, problem_index, chose_default) tuples
        """
        subject_ids = sorted(
            {str(r[0]) for r in records}, key=alternative_sort_key
        )
        position = {s: i for i, s in enumerate(subject_ids)}
        return cls(
            design,
            tuple(subject_ids),
            [position[str(r[0])] for r in records],
            [int(r[1]) for r in records],
            [bool(r[2]) for r in records],
        )

    @property
    def n_subjects(self):
        return len(self.subject_ids)

    @property
    def n_records(self):
        return int(self.subject_index.size)

    @property
    def records(self):
        return [
            (self.subject_ids[s], int(p), bool(c))
            for s, p, c in zip(
                self.subject_index, self.problem_index, self.chose_default
            )
        ]

    def weighted_counts(self, multiplicity=None):
        """
        (shown, defaults) per problem, each subject's records counted
        multiplicity[subject] times
        """
        size = self.design.size
        if multiplicity is None:
            weights = None
        else:
            weights = np.asarray(multiplicity, dtype=float)[self.subject_index]
        shown = np.bincount(self.problem_index, weights=weights, minlength=size)
        if weights is None:
            defaults = np.bincount(
                self.problem_index[self.chose_default], minlength=size
            )
        else:
            defaults = np.bincount(
                self.problem_index,
                weights=weights * self.chose_default,
                minlength=size,
            )
        return shown, defaults


def load_panel(path, default_id="0", universe=None):
    """
    Read a panel csv with header subject_id,choice_set,chose_default.

    The universe is the union of all ids unless given; the design holds the
    distinct problems observed, with q the largest number of small problems
    any subject saw.
    """
    frame = _read_csv(path, PANEL_COLUMNS)
    parsed = []
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        subject = row.subject_id.strip()
        if not subject:
            raise ParseError("empty subject_id", line=line)
        key = row.choice_set.strip()
        if not key:
            raise ParseError("empty choice_set", line=line)
        flag = row.chose_default.strip()
        if flag in _TRUE:
            chose = True
        elif flag in _FALSE:
            chose = False
        else:
            raise ParseError(f"chose_default must be 0 or 1, got {flag!r}", line)
        members = None if key == GRAND_TOKEN else key.split(SEPARATOR)
        if members is not None and any(m.strip() == "" for m in members):
            raise ParseError(f"malformed choice_set {key!r}", line=line)
        if members is not None and str(default_id) in members:
            raise ParseError(
                f"the default {default_id!r} is implicit in every problem", line
            )
        parsed.append((line, subject, members, chose))

    if universe is None:
        ids = {m for _, _, members, _ in parsed if members for m in members}
        if not ids:
            raise ValidationError(f"{path}: no alternatives observed")
        universe = Universe(
            tuple(sorted(ids, key=alternative_sort_key)), default_id
        )
    known = set(universe.alternatives)
    problems = {}
    rows = []
    for line, subject, members, chose in parsed:
        if members is None:
            problem = universe.grand_problem()
        else:
            unknown = [m for m in members if m.strip() not in known]
            if unknown:
                raise ValidationError(
                    f"line {line}: unknown alternative id(s) {unknown}"
                )
            problem = ChoiceProblem(tuple(members))
        problems.setdefault(problem, line)
        rows.append((line, subject, problem, chose))

    subjects = sorted({r[1] for r in rows}, key=alternative_sort_key)
    grand = universe.grand_problem()
    small_per_subject = Counter(r[1] for r in rows if r[2] != grand)
    q = max(small_per_subject.values(), default=0)
    design = Design.build(universe, problems, q=q, n=len(subjects))
    position = {p: i for i, p in enumerate(design.problems)}
    seen = {}
    for line, subject, problem, _ in rows:
        if (subject, problem) in seen:
            raise ValidationError(
                f"line {line}: duplicate record for subject {subject!r} and "
                f"problem {problem} (first on line {seen[subject, problem]})"
            )
        seen[subject, problem] = line
    subject_position = {s: i for i, s in enumerate(subjects)}
    panel = PanelDataset(
        design,
        tuple(subjects),
        [subject_position[r[1]] for r in rows],
        [position[r[2]] for r in rows],
        [r[3] for r in rows],
    )
    logger.info(
        "Loaded %d records of %d subjects on %d problems from %s",
        panel.n_records,
        panel.n_subjects,
        design.size,
        path,
    )
    return panel


def load_aggregate(path, q, n=None, default_id="0"):
    """
    Read an aggregate csv with header choice_set,shown,default.
    n defaults to the number of times the grand problem was shown.
    """
    frame = _read_csv(path, AGGREGATE_COLUMNS)
    entries = []
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        try:
            shown = int(row.shown)
            defaults = int(row.default)
        except ValueError as e:
            raise ParseError(f"counts must be integers: {e}", line=line) from e
        key = row.choice_set.strip()
        if not key:
            raise ParseError("empty choice_set", line=line)
        entries.append((line, key, shown, defaults))

    ids = {
        m
        for _, key, _, _ in entries
        if key != GRAND_TOKEN
        for m in key.split(SEPARATOR)
    }
    if not ids:
        raise ValidationError(f"{path}: no alternatives observed")
    universe = Universe(tuple(sorted(ids, key=alternative_sort_key)), default_id)
    counts = {}
    for line, key, shown, defaults in entries:
        try:
            problem = ChoiceProblem.from_key(key, universe)
        except ValidationError as e:
            raise ParseError(str(e), line=line) from e
        if problem in counts:
            raise ValidationError(f"line {line}: duplicate problem {problem}")
        counts[problem] = (shown, defaults)
    grand = universe.grand_problem()
    if grand not in counts:
        raise ValidationError(f"{path}: the grand problem is missing")
    if n is None:
        n = counts[grand][0]
    design = Design.build(universe, counts, q=q, n=n)
    return AggregateDataset(
        design,
        [counts[p][0] for p in design.problems],
        [counts[p][1] for p in design.problems],
    )


def write_panel(panel, path):
    """
    Write a panel in the csv format read by load_panel
    """
    problems = panel.design.problems
    frame = pd.DataFrame(
        {
            "subject_id": [panel.subject_ids[s] for s in panel.subject_index],
            "choice_set": [problems[p].key for p in panel.problem_index],
            "chose_default": panel.chose_default.astype(int),
        }
    )
    frame.to_csv(path, index=False, encoding="utf-8")


def write_aggregate(aggregate, path):
    """
    Write counts in the csv format read by load_aggregate
    """
    frame = pd.DataFrame(
        {
            "choice_set": [p.key for p in aggregate.design.problems],
            "shown": aggregate.shown,
            "default": aggregate.defaults,
        }
    )
    frame.to_csv(path, index=False, encoding="utf-8")


def aggregate(panel):
    """
    Count shown/default per problem
    """
    shown, defaults = panel.weighted_counts()
    uncovered = [
        p.key for p, s in zip(panel.design.problems, shown) if s == 0
    ]
    if uncovered:
        raise ValidationError(
            "Problems without observations: %s" % ", ".join(uncovered)
        )
    return AggregateDataset(panel.design, shown, defaults)


def leave_out_grand_frequency(panel, problem):
    """
    Grand problem (defaults, shown) among subjects who never saw `problem`
    """
    design = panel.design
    index = design.index(problem)
    if index == design.grand_index:
        raise ValidationError("The leave-out cell is defined for small problems")
    saw = np.zeros(panel.n_subjects, dtype=bool)
    saw[panel.subject_index[panel.problem_index == index]] = True
    grand = (panel.problem_index == design.grand_index) & ~saw[panel.subject_index]
    shown = int(np.count_nonzero(grand))
    if shown == 0:
        raise ValidationError(f"empty leave-out cell for problem {problem}")
    defaults = int(np.count_nonzero(grand & panel.chose_default))
    return defaults, shown


def subject_multiplicity(n_subjects, seed):
    """
    How often each subject is drawn in one clustered bootstrap sample
    """
    rng = make_rng(seed)
    draws = rng.integers(0, n_subjects, size=n_subjects)
    return np.bincount(draws, minlength=n_subjects)


def cluster_resample(panel, seed):
    """
    Draw n subjects with replacement and copy all their records.
    The first copy of a subject keeps its id, further copies get
    "<original>#<copy number>".
    """
    n = panel.n_subjects
    if n == 0:
        raise ValidationError("Cannot resample an empty panel")
    rng = make_rng(seed)
    draws = rng.integers(0, n, size=n)
    order = np.argsort(panel.subject_index, kind="stable")
    starts = np.searchsorted(panel.subject_index[order], np.arange(n + 1))
    copies = Counter()
    subject_ids = []
    subject_index = []
    problem_index = []
    chose_default = []
    for j, drawn in enumerate(draws):
        rows = order[starts[drawn] : starts[drawn + 1]]
        original = panel.subject_ids[drawn]
        copy = copies[original]
        copies[original] += 1
        subject_ids.append(original if copy == 0 else f"{original}#{copy}")
        subject_index.append(np.full(rows.size, j))
        problem_index.append(panel.problem_index[rows])
        chose_default.append(panel.chose_default[rows])
    return PanelDataset(
        panel.design,
        tuple(subject_ids),
        np.concatenate(subject_index),
        np.concatenate(problem_index),
        np.concatenate(chose_default),
    )


def _passive_row(panel, child):
    shown, defaults = panel.weighted_counts(
        subject_multiplicity(panel.n_subjects, child)
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(shown > 0, defaults / shown, np.nan)


def bootstrap_passive_frequencies(panel, seed, replications, threads=1):
    """
    Passive frequencies of `replications` clustered bootstrap samples,
    one row per replication, NaN where a problem drew no observations.
    Replication b uses the b-th child of `seed` whatever the worker count.
    """
    rows = map_replications(
        partial(_passive_row, panel),
        replication_seeds(seed, replications),
        threads,
        label="Bootstrap sample",
    )
    return np.array(rows).reshape(replications, panel.design.size)
