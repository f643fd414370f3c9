"""
Test the numerical kernels
"""

import itertools

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.optimize import nnls as reference_nnls

from rumoverload.config import DEFAULT_TOLERANCES
from rumoverload.errors import ConvergenceError, ValidationError
from rumoverload.optim import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinProgProblem,
    QuadProjectionProblem,
    binary_max,
    lp,
    nnls,
)


@pytest.fixture
def random_problem():
    rng = np.random.default_rng(17)
    return rng.random((12, 7)), rng.random(12)


def test_nnls_matches_reference(random_problem):
    A, b = random_problem
    result = nnls(QuadProjectionProblem(A, b))
    x, norm = reference_nnls(A, b)
    assert result.objective == pytest.approx(norm**2, rel=1e-9, abs=1e-12)
    assert np.all(result.nu >= 0)
    assert result.kkt_residual <= 1e-8


def test_weighted_nnls_with_lower_bound(random_problem):
    A, b = random_problem
    weights = np.linspace(1.0, 3.0, b.size)
    lower = 0.01
    result = nnls(QuadProjectionProblem(A, b, weights, lower))
    scale = np.sqrt(weights)
    shifted = (b - lower * A.sum(axis=1)) * scale
    mu, _ = reference_nnls(A * scale[:, None], shifted)
    np.testing.assert_allclose(result.nu, mu + lower, atol=1e-8)
    assert np.all(result.nu >= lower)
    residual = b - A @ result.nu
    assert result.objective == pytest.approx(residual @ (weights * residual))


def test_nnls_warm_start(random_problem):
    A, b = random_problem
    cold = nnls(QuadProjectionProblem(A, b))
    warm = nnls(QuadProjectionProblem(A, b), passive_set=cold.passive_set)
    np.testing.assert_allclose(warm.nu, cold.nu, atol=1e-10)
    assert warm.iterations == 0


def test_nnls_iteration_cap():
    A = np.random.default_rng(2).random((10, 6)) + 0.1
    b = A @ np.ones(6)
    tolerances = DEFAULT_TOLERANCES.replace(nnls_max_iter=1)
    with pytest.raises(ConvergenceError):
        nnls(QuadProjectionProblem(A, b), tolerances)


def test_projection_problem_validation():
    with pytest.raises(ValidationError):
        QuadProjectionProblem(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValidationError):
        QuadProjectionProblem(np.ones((3, 2)), np.ones(3), weights=[1.0, 0.0, 1.0])
    with pytest.raises(ValidationError):
        QuadProjectionProblem(np.ones((3, 2)), np.ones(3), lower=-1.0)


def test_lp_optimum():
    result = lp(LinProgProblem([1.0, 1.0], A_ub=[[1.0, 2.0], [3.0, 1.0]], b_ub=[4, 6]))
    assert result.status == OPTIMAL
    assert result.optimal
    assert result.value == pytest.approx(2.8)
    np.testing.assert_allclose(result.x, [1.6, 1.2], atol=1e-8)
    assert result.feasibility_residual <= 1e-9
    assert result.duality_gap <= 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_lp_agrees_with_highs(seed):
    rng = np.random.default_rng(seed)
    c = rng.random(6)
    A_ub = rng.random((4, 6)) + 0.1
    b_ub = rng.random(4) + 1.0
    reference = linprog(-c, A_ub=A_ub, b_ub=b_ub, method="highs")
    result = lp(LinProgProblem(c, A_ub=A_ub, b_ub=b_ub))
    assert result.optimal
    assert result.value == pytest.approx(-reference.fun, rel=1e-9)


def test_lp_statuses():
    infeasible = lp(LinProgProblem([1.0], A_ub=[[1.0]], b_ub=[-1.0]))
    assert infeasible.status == INFEASIBLE
    assert not infeasible.optimal
    assert lp(LinProgProblem([1.0])).status == UNBOUNDED
    with pytest.raises(ValidationError):
        LinProgProblem([1.0], A_ub=[[1.0]])


def test_binary_max_knapsack():
    result = binary_max([5.0, 4.0, 3.0], A_ub=[[2.0, 3.0, 1.0]], b_ub=[4.0])
    np.testing.assert_array_equal(result.x, [1, 0, 1])
    assert result.value == pytest.approx(8.0)


def test_binary_max_structural_constraints():
    assert binary_max([-1.0, 2.0], monotone=[(0, 1)]).value == pytest.approx(1.0)
    result = binary_max([3.0, -1.0, -2.0], cover=[(0, (1, 2))])
    np.testing.assert_array_equal(result.x, [1, 1, 0])
    with pytest.raises(ValidationError):
        binary_max([1.0], A_ub=[[-1.0]], b_ub=[-2.0])
    with pytest.raises(ValidationError):
        binary_max([1.0], monotone=[(0, 3)])


@pytest.mark.parametrize("seed", range(5))
def test_binary_max_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=5)
    monotone = [(0, 1), (0, 2), (3, 4)]
    cover = [(0, (1, 2))]
    best = -np.inf
    for bits in itertools.product((0, 1), repeat=5):
        x = np.array(bits)
        if any(x[i] < x[j] for i, j in monotone):
            continue
        if any(x[i] > sum(x[j] for j in J) for i, J in cover):
            continue
        best = max(best, float(c @ x))
    assert binary_max(c, monotone, cover).value == pytest.approx(best, abs=1e-9)


def _random_binary_program(size, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=size)
    monotone = [
        tuple(int(v) for v in rng.choice(size, 2, replace=False))
        for _ in range(size // 2)
    ]
    cover = []
    for _ in range(size // 3):
        i, *members = (int(v) for v in rng.choice(size, 4, replace=False))
        cover.append((i, tuple(members)))
    A_ub = rng.random((1, size))
    b_ub = [0.4 * A_ub.sum()]
    return c, monotone, cover, A_ub, b_ub


def _brute_force_max(c, monotone, cover, A_ub, b_ub):
    size = len(c)
    bits = np.arange(size, dtype=np.int32)
    X = ((np.arange(2**size, dtype=np.int32)[:, None] >> bits) & 1).astype(np.int8)
    keep = np.all(X @ A_ub.T <= np.asarray(b_ub) + 1e-12, axis=1)
    for i, j in monotone:
        keep &= X[:, i] >= X[:, j]
    for i, members in cover:
        keep &= X[:, i] <= X[:, list(members)].sum(axis=1)
    return float((X[keep] @ c).max())


@pytest.mark.parametrize("size", [8, 12, 16])
@pytest.mark.parametrize("seed", range(4))
def test_binary_max_matches_enumeration_on_random_programs(size, seed):
    program = _random_binary_program(size, seed)
    expected = _brute_force_max(*program)
    result = binary_max(*program)
    assert result.value == pytest.approx(expected, abs=1e-9)
    c, monotone, cover, A_ub, b_ub = program
    x = result.x
    assert all(x[i] >= x[j] for i, j in monotone)
    assert all(x[i] <= sum(x[j] for j in J) for i, J in cover)
    assert float(A_ub[0] @ x) <= b_ub[0] + 1e-9


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_binary_max_matches_enumeration_at_twenty_variables(seed):
    program = _random_binary_program(20, 100 + seed)
    expected = _brute_force_max(*program)
    assert binary_max(*program).value == pytest.approx(expected, abs=1e-9)
