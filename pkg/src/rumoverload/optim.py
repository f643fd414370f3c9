"""
Optimization kernels: weighted nonnegative least squares with a common lower
bound, linear programs, and small binary programs by branch and bound.

Linear programs are delegated to scipy.optimize.linprog with the HiGHS
solvers; `lp` checks the returned primal point and dual values itself and
turns infeasible and unbounded outcomes into statuses.
"""

import heapq
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .config import DEFAULT_TOLERANCES
from .errors import ConvergenceError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class QuadProjectionProblem:
    """
    min over nu >= lower of (y - M nu)' diag(weights) (y - M nu).

    Attributes:
    matrix (np.ndarray): M, rows x H
    target (np.ndarray): y
    weights (np.ndarray | None): positive diagonal of Omega, ones if None
    lower (float): common lower bound of every nu coordinate
    shift (np.ndarray | None): M @ 1 of the full column set when `matrix`
        holds only some of the columns; defaults to matrix.sum(axis=1)
    """

    matrix: np.ndarray
    target: np.ndarray
    weights: np.ndarray | None = None
    lower: float = 0.0
    shift: np.ndarray | None = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float, ndmin=2)
        target = np.array(self.target, dtype=float).ravel()
        rows = matrix.shape[0]
        if target.size != rows:
            raise ValidationError(
                f"Target has {target.size} entries for {rows} matrix rows"
            )
        if self.weights is None:
            weights = np.ones(rows)
        else:
            weights = np.array(self.weights, dtype=float).ravel()
        if weights.size != rows:
            raise ValidationError(f"{weights.size} weights for {rows} rows")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("Weights must be strictly positive")
        if self.lower < 0:
            raise ValidationError("The lower bound must be nonnegative")
        if self.shift is None:
            shift = matrix.sum(axis=1)
        else:
            shift = np.array(self.shift, dtype=float).ravel()
            if shift.size != rows:
                raise ValidationError(f"Shift has {shift.size} entries")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "shift", shift)

    def objective(self, fitted):
        residual = self.target - fitted
        return float(residual @ (self.weights * residual))


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """
    Attributes:
    nu (np.ndarray): the minimizer, lower + mu
    mu (np.ndarray): the part above the lower bound
    fitted (np.ndarray): lower * shift + M mu
    objective (float): weighted squared residual at `fitted`
    passive_set (np.ndarray): indices with mu > 0, usable as a warm start
    iterations (int): outer plus inner iterations
    history (tuple): objective after every outer iteration
    kkt_residual (float): largest violation of the KKT conditions
    """

    nu: np.ndarray
    mu: np.ndarray
    fitted: np.ndarray
    objective: float
    passive_set: np.ndarray
    iterations: int
    history: tuple
    kkt_residual: float


def _least_squares(A, b, passive):
    z = np.zeros(A.shape[1])
    if passive.any():
        z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
    return z


def _kkt_residual(w, passive):
    free = w[~passive]
    violation = float(free.max()) if free.size else 0.0
    stationarity = float(np.abs(w[passive]).max()) if passive.any() else 0.0
    return max(violation, stationarity, 0.0)


def nnls(problem, tolerances=DEFAULT_TOLERANCES, passive_set=None):
    """
    Lawson-Hanson active set method on the shifted problem
    min over mu >= 0 of ||sqrt(Omega)(y - lower * shift - M mu)||^2.

    A warm start `passive_set` is solved first; coordinates with a
    nonpositive solution are dropped until the start is feasible.
    """
    sqrt_weights = np.sqrt(problem.weights)
    A = problem.matrix * sqrt_weights[:, None]
    b = (problem.target - problem.lower * problem.shift) * sqrt_weights
    n = A.shape[1]
    max_iter = tolerances.nnls_max_iter or 3 * max(n, 1)
    tol = tolerances.kkt

    passive = np.zeros(n, dtype=bool)
    x = np.zeros(n)
    if passive_set is not None and len(passive_set):
        passive[np.asarray(passive_set, dtype=np.int64)] = True
        z = _least_squares(A, b, passive)
        while passive.any() and np.any(z[passive] <= 0):
            passive &= z > 0
            z = _least_squares(A, b, passive)
        x = z
        logger.debug("Warm start with %d columns", int(passive.sum()))

    residual = b - A @ x
    history = [float(residual @ residual)]
    w = A.T @ residual
    rejected = np.zeros(n, dtype=bool)
    iterations = 0
    while True:
        candidates = ~passive & ~rejected & (w > tol)
        if not candidates.any():
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"NNLS did not converge in {max_iter} iterations",
                best=x.copy(),
                residual=_kkt_residual(w, passive),
            )
        iterations += 1
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        z = _least_squares(A, b, passive)
        if z[j] <= 0:
            # rounding made the entering column useless
            passive[j] = False
            rejected[j] = True
            continue
        while np.any(z[passive] <= 0):
            iterations += 1
            if iterations > max_iter:
                raise ConvergenceError(
                    f"NNLS did not converge in {max_iter} iterations",
                    best=x.copy(),
                    residual=_kkt_residual(w, passive),
                )
            blocking = passive & (z <= 0)
            step = np.min(x[blocking] / (x[blocking] - z[blocking]))
            x = x + step * (z - x)
            passive &= x > tol * 1e-3
            x[~passive] = 0.0
            z = _least_squares(A, b, passive)
        x = z
        residual = b - A @ x
        objective = float(residual @ residual)
        if objective > history[-1] * (1.0 + 1e-12) + 1e-300:
            logger.debug(
                "NNLS objective increased %.17g -> %.17g", history[-1], objective
            )
        history.append(objective)
        w = A.T @ residual
        rejected[:] = False

    kkt = _kkt_residual(w, passive)
    if kkt > tol:
        logger.debug("NNLS stopped with KKT residual %.3g", kkt)
    mu = np.where(passive, np.maximum(x, 0.0), 0.0)
    fitted = problem.lower * problem.shift + problem.matrix @ mu
    return ProjectionResult(
        nu=mu + problem.lower,
        mu=mu,
        fitted=fitted,
        objective=problem.objective(fitted),
        passive_set=np.flatnonzero(mu > 0),
        iterations=iterations,
        history=tuple(history),
        kkt_residual=kkt,
    )


@dataclass(frozen=True, eq=False)
class LinProgProblem:
    """
    max c'nu subject to A_eq nu = b_eq, A_ub nu <= b_ub, nu >= 0
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        object.__setattr__(self, "c", c)
        for A_name, b_name in (("A_eq", "b_eq"), ("A_ub", "b_ub")):
            A = getattr(self, A_name)
            b = getattr(self, b_name)
            if (A is None) != (b is None):
                raise ValidationError(f"{A_name} and {b_name} go together")
            if A is None:
                continue
            A = np.array(A, dtype=float, ndmin=2)
            b = np.array(b, dtype=float).ravel()
            if A.shape != (b.size, c.size):
                raise ValidationError(
                    f"{A_name} has shape {A.shape}, expected {(b.size, c.size)}"
                )
            object.__setattr__(self, A_name, A)
            object.__setattr__(self, b_name, b)


@dataclass(frozen=True, eq=False)
class LPResult:
    status: str
    x: np.ndarray | None
    value: float
    feasibility_residual: float = float("nan")
    duality_gap: float = float("nan")

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _feasibility_residual(problem, x):
    residual = max(0.0, float(-x.min())) if x.size else 0.0
    if problem.A_eq is not None:
        residual = max(residual, float(np.abs(problem.A_eq @ x - problem.b_eq).max()))
    if problem.A_ub is not None:
        residual = max(residual, float((problem.A_ub @ x - problem.b_ub).max()))
    return residual


def lp(problem, tolerances=DEFAULT_TOLERANCES):
    """
    Solve with HiGHS; infeasible and unbounded problems are statuses
    """
    result = linprog(
        -problem.c,
        A_ub=problem.A_ub,
        b_ub=problem.b_ub,
        A_eq=problem.A_eq,
        b_eq=problem.b_eq,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": tolerances.feasibility,
            "dual_feasibility_tolerance": tolerances.feasibility,
        },
    )
    if result.status == 2:
        return LPResult(INFEASIBLE, None, float("nan"))
    if result.status == 3:
        return LPResult(UNBOUNDED, None, float("inf"))
    if result.status != 0:
        raise NumericalError(f"Linear program failed: {result.message}")

    x = np.asarray(result.x)
    value = float(problem.c @ x)
    dual = 0.0
    if problem.A_eq is not None:
        dual += float(problem.b_eq @ result.eqlin.marginals)
    if problem.A_ub is not None:
        dual += float(problem.b_ub @ result.ineqlin.marginals)
    gap = abs(-value - dual)
    feasibility = _feasibility_residual(problem, x)
    scale = max(1.0, abs(value))
    if feasibility > tolerances.feasibility * scale or (
        gap > tolerances.feasibility * scale
    ):
        logger.warning(
            "LP certificate above tolerance: feasibility %.3g, duality gap %.3g",
            feasibility,
            gap,
        )
    return LPResult(OPTIMAL, x, value, feasibility, gap)


@dataclass(frozen=True, eq=False)
class BinaryResult:
    x: np.ndarray
    value: float
    nodes: int


@dataclass(order=True)
class _Node:
    priority: float
    count: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)


def _constraint_rows(size, monotone, cover, A_ub, b_ub):
    rows = []
    rhs = []
    for i, j in monotone:
        row = np.zeros(size)
        row[j] += 1.0
        row[i] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    for i, members in cover:
        row = np.zeros(size)
        row[i] += 1.0
        for j in members:
            row[j] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    if A_ub is not None:
        A_ub = np.array(A_ub, dtype=float, ndmin=2)
        rows.extend(A_ub)
        rhs.extend(np.asarray(b_ub, dtype=float).ravel())
    if not rows:
        return None, None
    return np.array(rows), np.array(rhs)


def _check_indices(size, monotone, cover):
    for i, j in monotone:
        if not (0 <= i < size and 0 <= j < size):
            raise ValidationError(f"Monotone constraint ({i}, {j}) out of range")
    for i, members in cover:
        if not 0 <= i < size or any(not 0 <= j < size for j in members):
            raise ValidationError(f"Cover constraint for {i} out of range")


def binary_max(
    c,
    monotone=(),
    cover=(),
    A_ub=None,
    b_ub=None,
    branch_priority=None,
    tolerances=DEFAULT_TOLERANCES,
    max_nodes=200_000,
):
    """
    max c'x over x in {0, 1}^I subject to x_i >= x_j for every (i, j) in
    `monotone`, x_i <= sum(x_J) for every (i, J) in `cover` and optional
    rows A_ub x <= b_ub. Best-bound branch and bound on LP relaxations;
    variables with a higher `branch_priority` are branched on first.
    """
    c = np.asarray(c, dtype=float).ravel()
    size = c.size
    monotone = [tuple(m) for m in monotone]
    cover = [(i, tuple(J)) for i, J in cover]
    _check_indices(size, monotone, cover)
    G, h = _constraint_rows(size, monotone, cover, A_ub, b_ub)
    priority = (
        np.zeros(size) if branch_priority is None else np.asarray(branch_priority)
    )
    integrality = tolerances.integrality

    def feasible(x):
        return G is None or np.all(G @ x <= h + integrality)

    best_x = None
    best_value = -np.inf
    start = np.zeros(size)
    if feasible(start):
        best_x, best_value = start, 0.0

    counter = itertools.count()
    heap = [_Node(-np.inf, next(counter), np.zeros(size), np.ones(size))]
    nodes = 0
    while heap:
        node = heapq.heappop(heap)
        if -node.priority <= best_value + tolerances.feasibility:
            break
        nodes += 1
        if nodes > max_nodes:
            raise ConvergenceError(
                f"Branch and bound exceeded {max_nodes} nodes",
                best=best_x,
                residual=-node.priority - best_value,
            )
        relaxation = linprog(
            -c,
            A_ub=G,
            b_ub=h,
            bounds=np.column_stack([node.lower, node.upper]),
            method="highs",
        )
        if relaxation.status == 2:
            continue
        if relaxation.status != 0:
            raise NumericalError(f"LP relaxation failed: {relaxation.message}")
        x = relaxation.x
        bound = float(c @ x)
        if bound <= best_value + tolerances.feasibility:
            continue
        rounded = np.round(x)
        fractional = np.abs(x - rounded) > integrality
        if not fractional.any():
            best_x, best_value = rounded, float(c @ rounded)
            logger.debug("Incumbent %.12g after %d nodes", best_value, nodes)
            continue
        heuristic = (x > 0.5).astype(float)
        if feasible(heuristic) and c @ heuristic > best_value:
            best_x, best_value = heuristic, float(c @ heuristic)
        candidates = np.flatnonzero(fractional)
        top = candidates[priority[candidates] == priority[candidates].max()]
        branch = int(top[np.argmin(np.abs(x[top] - 0.5))])
        for value in (1.0, 0.0):
            lower = node.lower.copy()
            upper = node.upper.copy()
            lower[branch] = upper[branch] = value
            heapq.heappush(heap, _Node(-bound, next(counter), lower, upper))

    if best_x is None:
        raise ValidationError("The binary program is infeasible")
    return BinaryResult(best_x.astype(np.int64), float(c @ best_x), nodes)
