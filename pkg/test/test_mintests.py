"""
Test the finite sample and asymptotic Min tests
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import hypergeom

from rumoverload.choice import ChoiceProblem, Design, PanelDataset, Universe
from rumoverload.errors import ValidationError
from rumoverload.mintests import (
    ASYMPTOTIC,
    FINITE,
    asymptotic_min_test,
    descriptives,
    finite_min_test,
    fisher_one_sided,
    pretest_level,
)
from rumoverload.paperdata import paper_aggregate
from rumoverload.sim import Kind, Population, design_from_shape, simulate_panel


def test_fisher_one_sided_is_hypergeometric():
    p = fisher_one_sided(1, 10, 8, 10)
    assert p == pytest.approx(hypergeom.cdf(1, 20, 10, 9))
    assert fisher_one_sided(5, 10, 5, 10) > 0.5
    with pytest.raises(ValidationError):
        fisher_one_sided(0, 0, 1, 2)
    with pytest.raises(ValidationError):
        fisher_one_sided(3, 2, 1, 2)


def test_finite_min_test(violating_panel):
    report = finite_min_test(violating_panel)
    assert report.method == FINITE
    assert report.statistic == pytest.approx(1.0)
    assert report.tuning["multiplier"] == 2
    assert report.p_values["1"] == pytest.approx(1 / math.comb(40, 20))
    assert report.adjusted["1"] == pytest.approx(2 / math.comb(40, 20))
    assert report.adjusted["2"] == 1.0
    assert report.significant == ["1"]
    assert report.p_value == report.adjusted["1"]


def test_finite_min_test_excludes_empty_cells():
    universe = Universe(("1", "2"))
    design = Design.build(
        universe,
        [ChoiceProblem(("1",)), ChoiceProblem(("2",)), universe.grand_problem()],
        q=2,
        n=3,
    )
    records = [(s, p, p == 2) for s in ("a", "b", "c") for p in range(3)]
    report = finite_min_test(PanelDataset.from_records(design, records))
    assert sorted(report.excluded) == ["1", "2"]
    assert report.p_value == 1.0
    assert report.adjusted == {}


def test_pretest_level():
    assert pretest_level(1832) == pytest.approx(1 / math.log(1832))
    assert pretest_level(2) == 1.0
    with pytest.raises(ValidationError):
        pretest_level(1)


def test_asymptotic_min_test_rejects(violating_panel):
    report = asymptotic_min_test(violating_panel, B=50, seed=1)
    assert report.method == ASYMPTOTIC
    assert report.statistic == pytest.approx(1.0)
    assert report.p_value == 0.0
    assert report.retained == ["1", "2"]
    assert report.tuning["alpha_n"] == pytest.approx(1 / math.log(40))


def test_asymptotic_min_test_with_empty_selection():
    universe = Universe(("1", "2"))
    design = Design.build(
        universe,
        [ChoiceProblem(("1",)), ChoiceProblem(("2",)), universe.grand_problem()],
        q=1,
        n=20,
    )
    records = []
    for s in range(20):
        records.append((s, s % 2, True))
        records.append((s, 2, False))
    panel = PanelDataset.from_records(design, records)
    report = asymptotic_min_test(panel, B=30, seed=2)
    assert report.retained == []
    assert report.p_value == 1.0


def test_asymptotic_min_test_does_not_depend_on_threads(violating_panel):
    serial = asymptotic_min_test(violating_panel, B=40, seed=9, threads=1)
    parallel = asymptotic_min_test(violating_panel, B=40, seed=9, threads=3)
    assert serial == parallel


def test_descriptives_of_embedded_data():
    summary = descriptives(paper_aggregate())
    assert summary.grand_frequency == pytest.approx(409 / 1832)
    assert summary.below_count == 23
    assert summary.pooled_small_frequency == pytest.approx(0.707, abs=5e-4)
    assert 0 < len(summary.significant_below) <= summary.below_count
    assert set(summary.significant_below) <= set(summary.below)


def test_finite_min_test_size_under_independent_answers():
    design = design_from_shape(3, 2, 100)
    population = Population(
        Kind.MARGINAL_MATCH, design.problems, passive=np.full(design.size, 0.5)
    )
    rejections = [
        finite_min_test(simulate_panel(design, population, seed=seed)).p_value < 0.05
        for seed in range(100)
    ]
    assert np.mean(rejections) <= 0.1


def _lower_tails(a_shown, x_shown):
    """
    P(A-sample defaults <= a | total defaults K) for every K and a, from
    exact binomial coefficients
    """
    total = a_shown + x_shown
    tails = {}
    for K in range(total + 1):
        cumulative = 0
        for a in range(max(0, K - x_shown), min(K, a_shown) + 1):
            cumulative += math.comb(a_shown, a) * math.comb(x_shown, K - a)
            tails[a, K] = float(Fraction(cumulative, math.comb(total, K)))
    return tails


@pytest.mark.slow
def test_fisher_one_sided_matches_exact_enumeration():
    for total in range(2, 51):
        for a_shown in range(1, total):
            x_shown = total - a_shown
            tails = _lower_tails(a_shown, x_shown)
            for a_defaults in range(a_shown + 1):
                for x_defaults in range(x_shown + 1):
                    p = fisher_one_sided(a_defaults, a_shown, x_defaults, x_shown)
                    expected = tails[a_defaults, a_defaults + x_defaults]
                    assert p == pytest.approx(expected, rel=1e-9, abs=1e-13)
