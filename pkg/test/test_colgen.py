"""
Test column generation against full enumeration
"""

import numpy as np
import pytest

from rumoverload.colgen import (
    LOG_COLUMNS,
    OPTIMAL,
    PricingProgram,
    pricing,
    seed_columns,
    solve_colgen,
    write_log,
)
from rumoverload.choice import ChoiceProblem, Design, ProbVector, Universe
from rumoverload.errors import RankError, ValidationError
from rumoverload.optim import QuadProjectionProblem, nnls
from rumoverload.paperdata import example_design, example_probabilities, paper_aggregate
from rumoverload.typespace import Model, Tag, column_totals, enumerate_columns


def test_seed_columns_reach_full_rank():
    design = example_design()
    state = seed_columns(design, extra=3, seed=0)
    assert state.rank == design.size + 1
    assert state.witnesses[0] == 0
    assert not state.patterns[0].any()
    assert all(tag == Tag.RATIONAL for tag in state.tags)
    assert state.generated == 0


def test_seed_columns_rank_error():
    with pytest.raises(RankError) as error:
        seed_columns(example_design(), extra=0, seed=0, cap=1)
    assert error.value.required == 8
    with pytest.raises(ValidationError):
        seed_columns(example_design(), extra=-1)


@pytest.mark.parametrize("model", list(Model))
@pytest.mark.parametrize("seed", range(3))
def test_pricing_matches_brute_force(model, seed):
    design = example_design()
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=2 * design.size)
    reference = rng.random(2 * design.size)
    stacked = enumerate_columns(design, model).stacked
    expected = np.max(direction @ (stacked - reference[:, None]))
    priced = pricing(direction, design, model, reference)
    assert priced.value == pytest.approx(expected, abs=1e-8)
    assert direction @ (priced.column - reference) == pytest.approx(priced.value)
    assert any(np.array_equal(priced.column, c) for c in stacked.T)


def test_pricing_program_size():
    program = PricingProgram(example_design(), Model.III)
    assert program.size == 7 + 2
    assert set(program.switch_var) == {Tag.OVERLOAD_AT_X, Tag.OVERLOAD_AT_TRIPLES}


@pytest.mark.parametrize("model", [Model.I, Model.II])
def test_colgen_matches_enumeration(model):
    design = example_design()
    data = example_probabilities(grand_passive=0.7)
    stacked = enumerate_columns(design, model).stacked
    full = nnls(QuadProjectionProblem(stacked, data.values))
    state = solve_colgen(data, design, model=model, extra=0, seed=1)
    assert state.status == OPTIMAL
    assert state.objective == pytest.approx(full.objective, abs=1e-9)
    np.testing.assert_allclose(state.eta, full.fitted, atol=1e-6)


def test_colgen_with_lower_bound_needs_totals():
    design = example_design()
    data = example_probabilities()
    with pytest.raises(ValidationError):
        solve_colgen(data, design, lower=0.01)
    totals = column_totals(design, Model.I)
    state = solve_colgen(data, design, lower=0.01, totals=totals, seed=2)
    assert state.H == 8
    assert state.status == OPTIMAL


def test_colgen_log(tmp_path):
    design = example_design()
    state = solve_colgen(example_probabilities(0.7), design, model="ii", seed=4)
    assert state.log_frame().columns.tolist() == LOG_COLUMNS
    assert state.log[-1][2] <= 1e-9
    path = tmp_path / "log.csv"
    write_log(state, path)
    assert path.read_text().splitlines()[0] == ",".join(LOG_COLUMNS)


@pytest.mark.slow
def test_colgen_on_embedded_data_matches_enumeration():
    data = paper_aggregate()
    design = data.design
    freqs = data.frequencies()
    full = nnls(QuadProjectionProblem(enumerate_columns(design).stacked, freqs.values))
    state = solve_colgen(freqs, design, model=Model.I, seed=11)
    assert state.objective == pytest.approx(full.objective, rel=1e-6, abs=1e-10)


def _random_design(rng):
    k = int(rng.integers(3, 9))
    universe = Universe(tuple(str(i) for i in range(1, k + 1)))
    problems = {universe.grand_problem()}
    target = 1 + int(rng.integers(k, 2 * k + 1))
    while len(problems) < target:
        size = int(rng.integers(1, k))
        problems.add(ChoiceProblem(rng.choice(universe.alternatives, size, False)))
    return Design.build(universe, problems, q=1, n=100)


@pytest.mark.slow
def test_colgen_matches_enumeration_on_random_designs():
    rng = np.random.default_rng(2024)
    models = list(Model)
    for trial in range(50):
        design = _random_design(rng)
        model = models[trial % len(models)]
        freqs = ProbVector.from_passive(design.problems, rng.random(design.size))
        stacked = enumerate_columns(design, model).stacked
        full = nnls(QuadProjectionProblem(stacked, freqs.values))
        state = solve_colgen(freqs, design, model=model, seed=trial)
        assert state.status == OPTIMAL
        assert state.objective == pytest.approx(full.objective, abs=1e-6)
        assert state.log[-1][2] <= 1e-9
