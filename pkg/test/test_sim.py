"""
Test populations and simulated panels
"""

import numpy as np
import pytest

from rumoverload.errors import ValidationError
from rumoverload.paperdata import paper_aggregate
from rumoverload.rumtest import j_statistic
from rumoverload.sim import (
    WEIGHT_FLOOR,
    Kind,
    design_from_shape,
    marginal_match_population,
    overload_population,
    population_for,
    random_rational_population,
    simulate_panel,
)
from rumoverload.typespace import Model, Tag, enumerate_columns


@pytest.fixture
def design():
    return design_from_shape(3, 2, 100)


def test_design_from_shape(design):
    assert design.size == 3 + 3 + 1
    assert design.q == 2
    assert design.n == 100
    assert [p.key for p in design.problems][-1] == "1-2-3"


def test_random_rational_population(design):
    matrix = enumerate_columns(design)
    population = random_rational_population(design, matrix, seed=3)
    assert population.kind == Kind.RATIONAL_MIX
    assert population.weights.sum() == pytest.approx(1.0)
    assert population.weights.min() >= WEIGHT_FLOOR - 1e-12
    result = j_statistic(
        population.probabilities(), matrix, np.ones(2 * design.size), n=100
    )
    assert result.J == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValidationError):
        random_rational_population(design, enumerate_columns(design, Model.II))


def test_overload_population(design):
    rational = random_rational_population(design, enumerate_columns(design), seed=3)
    matrix = enumerate_columns(design, Model.II)
    population = overload_population(rational, matrix, share=0.3)
    assert population.weights.sum() == pytest.approx(1.0)
    overload = population.weights[matrix.tags == Tag.OVERLOAD_AT_X].sum()
    empty = rational.weights[rational.matrix.all_passive_index]
    assert overload == pytest.approx(0.3 * (1.0 - empty))
    with pytest.raises(ValidationError):
        overload_population(rational, matrix, share=1.5)
    with pytest.raises(ValidationError):
        overload_population(rational, matrix, share=0.3, tag=Tag.OVERLOAD_AT_TRIPLES)


def test_simulate_panel_layout(design):
    population = population_for("rational", design, seed=4)
    panel = simulate_panel(design, population, seed=5)
    assert panel.n_subjects == 100
    assert panel.n_records == 100 * 3
    for subject in range(panel.n_subjects):
        shown = panel.problem_index[panel.subject_index == subject]
        assert len(set(shown)) == 3
        assert design.grand_index in shown
    again = simulate_panel(design, population, seed=5)
    np.testing.assert_array_equal(panel.chose_default, again.chose_default)
    np.testing.assert_array_equal(panel.problem_index, again.problem_index)


def test_rational_types_answer_consistently(design):
    population = population_for("rational", design, seed=6)
    panel = simulate_panel(design, population, seed=7)
    grand = design.grand_index
    for subject in range(panel.n_subjects):
        mine = panel.subject_index == subject
        passive = dict(
            zip(panel.problem_index[mine], panel.chose_default[mine])
        )
        if passive[grand]:
            assert all(passive.values())


def test_marginal_match_population():
    data = paper_aggregate()
    population = marginal_match_population(data)
    np.testing.assert_allclose(population.passive, data.passive_frequencies())
    design = data.design.with_sample(n=2000)
    panel = simulate_panel(design, population, seed=8)
    grand = panel.chose_default[panel.problem_index == design.grand_index]
    assert grand.size == 2000
    assert grand.mean() == pytest.approx(409 / 1832, abs=0.05)


def test_simulation_validation(design):
    population = population_for("rational", design, seed=1)
    with pytest.raises(ValidationError):
        simulate_panel(design, population, seed=1, n=0)
    with pytest.raises(ValidationError):
        simulate_panel(design_from_shape(4, 2, 10), population, seed=1)
    with pytest.raises(ValidationError):
        population_for("marginal-match", design)
