"""
Column generation for the cone projection.

The master problem projects on the cone of a working set of columns. The
pricing problem finds the type whose column most violates the optimality
conditions of the current projection; it is appended until no column has a
positive price. Types are searched through a binary program over

    rho_A   active bit of every problem A,
    s_x     witness bit of every alternative (the singleton's rho when the
            singleton is observed, an auxiliary variable otherwise),
    z_t     one switch per overload tag of the model,

with rho_A >= s_x for x in A, rho_A <= sum of s_x over A, rho_i >= rho_j when
problem i contains problem j, and, on the problems a switch forces to the
default, rho_A <= 1 - z and rho_A + z >= s_x.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.linalg import qr

from .config import DEFAULT_TOLERANCES
from .errors import ConvergenceError, RankError, ValidationError
from .optim import QuadProjectionProblem, binary_max, nnls
from .streams import make_rng
from .typespace import Model, Tag, forced_passive, stack_patterns, witness_patterns

logger = logging.getLogger(__name__)

OPTIMAL = "OPTIMAL"
INCONCLUSIVE = "INCONCLUSIVE"
LOG_COLUMNS = ["iter", "objective", "pricing_value", "columns"]
MAX_WITNESS_BITS = 62


@dataclass(frozen=True, eq=False)
class PricingResult:
    """
    pattern: active bit per problem; column: its (active, passive) rows;
    value: price of the column against the reference point
    """

    pattern: np.ndarray
    tag: Tag
    witness: int
    value: float
    column: np.ndarray


@dataclass
class ColGenState:
    """
    Working columns and the current projection on their cone.

    Attributes:
    patterns (list): active bits of every working column
    tags (list): Tag of every working column
    witnesses (list): witness mask of every working column
    seeded (int): how many of the working columns came from seeding
    rank (int): rank of the seeded columns
    nu (np.ndarray): weights of the working columns, lower bound included
    eta (np.ndarray): fitted point, lower * shift included
    objective (float): projection objective
    log (list): (iter, objective, pricing_value, columns) per iteration
    status (str): OPTIMAL or INCONCLUSIVE once finished
    H (int): column count of the full model
    """

    patterns: list
    tags: list
    witnesses: list
    seeded: int
    rank: int
    nu: np.ndarray = None
    eta: np.ndarray = None
    objective: float = float("inf")
    log: list = field(default_factory=list)
    status: str | None = None
    H: int | None = None

    @property
    def n_columns(self):
        return len(self.patterns)

    @property
    def generated(self):
        return self.n_columns - self.seeded

    def matrix(self):
        return stack_patterns(np.array(self.patterns, dtype=bool))

    def log_frame(self):
        return pd.DataFrame(self.log, columns=LOG_COLUMNS)


def _matrix_rank(matrix, tolerance):
    if matrix.size == 0:
        return 0
    R = qr(matrix, mode="r", pivoting=True)[0]
    diagonal = np.abs(np.diag(R))
    if diagonal.size == 0 or diagonal[0] == 0:
        return 0
    return int(np.count_nonzero(diagonal > tolerance * diagonal[0]))


def seed_columns(design, extra=300, seed=0, tolerances=DEFAULT_TOLERANCES, cap=None):
    """
    The all-passive column plus `extra` random rational columns, augmented
    with further random columns until the stacked matrix has rank
    |D| + 1 or `cap` columns are reached
    """
    if extra < 0:
        raise ValidationError("extra must be nonnegative")
    if design.k > MAX_WITNESS_BITS:
        raise ValidationError(f"At most {MAX_WITNESS_BITS} alternatives supported")
    rng = make_rng(seed)
    masks = design.masks()
    required = design.size + 1
    if cap is None:
        cap = max(extra + 1, 10 * required)
    space = 1 << design.k

    witnesses = [0]
    seen_patterns = {witness_patterns(masks, [0])[0].tobytes()}
    seen_witnesses = {0}

    def draw(count):
        added = 0
        attempts = 0
        while added < count and len(seen_witnesses) < space and attempts < 50 * count:
            attempts += 1
            bits = rng.integers(0, 2, size=design.k)
            mask = int(np.sum(bits.astype(np.int64) << np.arange(design.k)))
            if mask in seen_witnesses:
                continue
            seen_witnesses.add(mask)
            key = witness_patterns(masks, [mask])[0].tobytes()
            if key in seen_patterns:
                continue
            seen_patterns.add(key)
            witnesses.append(mask)
            added += 1
        return added

    draw(extra)
    patterns = witness_patterns(masks, witnesses)
    rank = _matrix_rank(stack_patterns(patterns), tolerances.rank)
    while rank < required:
        if len(witnesses) >= cap or len(seen_witnesses) >= space:
            raise RankError("Seed columns do not reach full rank", rank, required)
        batch = min(required - rank + 5, cap - len(witnesses))
        if draw(batch) == 0 and len(seen_witnesses) >= space:
            raise RankError("Seed columns do not reach full rank", rank, required)
        patterns = witness_patterns(masks, witnesses)
        rank = _matrix_rank(stack_patterns(patterns), tolerances.rank)
        logger.debug("Seeded %d columns, rank %d", len(witnesses), rank)
    logger.info(
        "Seeded %d columns (%d requested extra), rank %d", len(witnesses), extra, rank
    )
    return ColGenState(
        patterns=[p for p in patterns],
        tags=[Tag.RATIONAL] * len(witnesses),
        witnesses=list(witnesses),
        seeded=len(witnesses),
        rank=rank,
    )


class PricingProgram:
    """
    The binary program searching the columns of one model on one design.
    Built once; `solve` only changes the objective.
    """

    def __init__(self, design, model=Model.I):
        self.design = design
        self.model = Model.from_name(model)
        problems = design.problems
        P = design.size
        grand = design.universe.grand_problem()
        singleton = {
            p.members[0]: i
            for i, p in enumerate(problems)
            if p.size == 1 and p != grand
        }
        alternatives = design.universe.alternatives
        witness_var = {}
        next_var = P
        for x in alternatives:
            if x in singleton:
                witness_var[x] = singleton[x]
            else:
                witness_var[x] = next_var
                next_var += 1
        switches = [t for t in self.model.tags if t != Tag.RATIONAL]
        switch_var = {}
        for tag in switches:
            switch_var[tag] = next_var
            next_var += 1
        self.size = next_var
        self.witness_var = witness_var
        self.switch_var = switch_var

        forcing = {tag: forced_passive(problems, tag, grand) for tag in switches}
        monotone = []
        cover = []
        rows = []
        rhs = []
        for i, problem in enumerate(problems):
            own = [witness_var[x] for x in problem.members]
            if own == [i]:
                continue
            on = [switch_var[t] for t in switches if forcing[t][i]]
            cover.append((i, tuple(own)))
            for v in own:
                if on:
                    row = np.zeros(self.size)
                    row[v] = 1.0
                    row[i] -= 1.0
                    row[on] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)
                else:
                    monotone.append((i, v))
            if on:
                row = np.zeros(self.size)
                row[i] = 1.0
                row[on] = 1.0
                rows.append(row)
                rhs.append(1.0)
            for j, other in enumerate(problems):
                if j != i and other.size < problem.size and other.issubset(problem):
                    if not on:
                        monotone.append((i, j))
        if len(switches) > 1:
            row = np.zeros(self.size)
            row[list(switch_var.values())] = 1.0
            rows.append(row)
            rhs.append(1.0)
        self.monotone = monotone
        self.cover = cover
        self.A_ub = np.array(rows) if rows else None
        self.b_ub = np.array(rhs) if rows else None
        priority = np.zeros(self.size)
        priority[list(set(witness_var.values()))] = 1.0
        priority[list(switch_var.values())] = 2.0
        self.priority = priority

    def solve(self, direction, reference=None, tolerances=DEFAULT_TOLERANCES):
        """
        max over columns a of direction'(a - reference)
        """
        direction = np.asarray(direction, dtype=float)
        P = self.design.size
        c = np.zeros(self.size)
        c[:P] = direction[0::2] - direction[1::2]
        constant = float(direction[1::2].sum())
        if reference is not None:
            constant -= float(direction @ np.asarray(reference, dtype=float))
        result = binary_max(
            c,
            self.monotone,
            self.cover,
            self.A_ub,
            self.b_ub,
            self.priority,
            tolerances,
        )
        x = result.x
        pattern = x[:P].astype(bool)
        witness = 0
        for i, x_var in enumerate(self.design.universe.alternatives):
            if x[self.witness_var[x_var]]:
                witness |= 1 << i
        tag = Tag.RATIONAL
        for t, v in self.switch_var.items():
            if x[v]:
                tag = t
        column = np.empty(2 * P)
        column[0::2] = pattern
        column[1::2] = ~pattern
        return PricingResult(pattern, tag, witness, result.value + constant, column)


def pricing(
    direction, design, model=Model.I, reference=None, tolerances=DEFAULT_TOLERANCES
):
    """
    Most violating column for the direction Omega(y - eta)
    """
    return PricingProgram(design, model).solve(direction, reference, tolerances)


def solve_colgen(
    freqs,
    design,
    weights=None,
    lower=0.0,
    model=Model.I,
    max_iter=500,
    extra=300,
    seed=0,
    tolerances=DEFAULT_TOLERANCES,
    totals=None,
):
    """
    Project `freqs` on the full model cone without enumerating it.

    With lower > 0 every column of the full model carries at least `lower`;
    `totals` = (H, M @ 1) of the full model (from column_totals) supplies
    that shift and is required then.
    """
    model = Model.from_name(model)
    if tuple(freqs.problems) != tuple(design.problems):
        raise ValidationError("Frequencies must follow the design's problem order")
    y = freqs.values
    if weights is None:
        weights = np.ones(y.size)
    weights = np.asarray(weights, dtype=float)
    if lower > 0:
        if totals is None:
            raise ValidationError("A positive lower bound needs the column totals")
        H, shift = totals
    else:
        H, shift = (None, np.zeros(y.size)) if totals is None else totals

    state = seed_columns(design, extra, seed, tolerances)
    state.H = H
    program = PricingProgram(design, model)
    seen = {p.tobytes() for p in state.patterns}
    passive_set = None
    stalls = 0
    for iteration in range(1, max_iter + 1):
        master = nnls(
            QuadProjectionProblem(state.matrix(), y, weights, lower, shift),
            tolerances,
            passive_set,
        )
        previous = state.objective
        state.nu = master.nu
        state.eta = master.fitted
        state.objective = master.objective
        passive_set = master.passive_set

        direction = weights * (y - master.fitted)
        priced = program.solve(direction, master.fitted - lower * shift, tolerances)
        state.log.append((iteration, master.objective, priced.value, state.n_columns))
        logger.debug(
            "Iteration %d: objective %.12g, pricing value %.3g, %d columns",
            iteration,
            master.objective,
            priced.value,
            state.n_columns,
        )
        if priced.value <= tolerances.pricing:
            state.status = OPTIMAL
            break
        if np.isfinite(previous):
            improvement = (previous - master.objective) / max(previous, 1e-300)
            stalls = stalls + 1 if improvement < tolerances.stall else 0
        if stalls >= tolerances.stall_iterations:
            state.status = INCONCLUSIVE
            logger.warning(
                "Column generation stalled after %d iterations (pricing value %.3g)",
                iteration,
                priced.value,
            )
            break
        key = priced.pattern.tobytes()
        if key in seen:
            state.status = INCONCLUSIVE
            logger.warning(
                "Pricing returned a working column (value %.3g); stopping",
                priced.value,
            )
            break
        seen.add(key)
        state.patterns.append(priced.pattern)
        state.tags.append(priced.tag)
        state.witnesses.append(priced.witness)
    else:
        raise ConvergenceError(
            f"Column generation hit {max_iter} iterations",
            best=state,
            residual=state.log[-1][2],
        )
    logger.info(
        "Column generation %s: objective %.10g with %d columns (%d generated)",
        state.status,
        state.objective,
        state.n_columns,
        state.generated,
    )
    return state


def write_log(state, path):
    state.log_frame().to_csv(path, index=False, encoding="utf-8")
