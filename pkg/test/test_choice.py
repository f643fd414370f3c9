"""
Test choice problems, designs, data sets and the clustered bootstrap
"""

import numpy as np
import pandas as pd
import pytest

from rumoverload.choice import (
    ChoiceProblem,
    Design,
    ProbVector,
    Universe,
    aggregate,
    bootstrap_passive_frequencies,
    cluster_resample,
    leave_out_grand_frequency,
    load_aggregate,
    load_panel,
    subject_multiplicity,
    write_aggregate,
    write_panel,
)
from rumoverload.errors import ParseError, ValidationError
from rumoverload.paperdata import paper_design
from rumoverload.sim import (
    design_from_shape,
    random_rational_population,
    simulate_panel,
)
from rumoverload.typespace import enumerate_columns

PANEL_CSV = """subject_id,choice_set,chose_default
1,1,1
1,ALL,0
2,2,0
2,ALL,1
3,1,0
3,ALL,1
4,2,1
4,ALL,0
"""


def test_choice_problem_key():
    problem = ChoiceProblem(("11", "3"))
    assert problem.key == "3-11"
    assert problem.size == 2
    assert ChoiceProblem.from_key("3-11") == problem
    assert ChoiceProblem(("3",)).issubset(problem)
    assert not problem.issubset(ChoiceProblem(("3",)))


def test_choice_problem_validation():
    with pytest.raises(ValidationError):
        ChoiceProblem(())
    with pytest.raises(ValidationError):
        ChoiceProblem.from_key("ALL")
    universe = Universe(("1", "2", "3"))
    assert ChoiceProblem.from_key("ALL", universe) == universe.grand_problem()


def test_universe_validation():
    with pytest.raises(ValidationError):
        Universe(("1", "1"))
    with pytest.raises(ValidationError):
        Universe(("0", "1"), default_id="0")
    assert ChoiceProblem(("3", "1")).mask(Universe(("1", "2", "3"))) == 0b101


def test_design_order():
    universe = Universe(("1", "2", "3"))
    problems = [
        universe.grand_problem(),
        ChoiceProblem(("2", "3")),
        ChoiceProblem(("3",)),
        ChoiceProblem(("1",)),
    ]
    design = Design.build(universe, problems, q=2, n=10)
    assert [p.key for p in design.problems] == ["1", "3", "2-3", "1-2-3"]
    assert design.grand_index == 3
    assert design.small_indices == (0, 1, 2)
    with pytest.raises(ValidationError):
        Design.build(universe, problems[1:], q=1, n=10)
    with pytest.raises(ValidationError):
        Design.build(universe, problems, q=4, n=10)


def test_embedded_design_tuning_quantities():
    design = paper_design()
    assert design.k == 12
    assert design.size == 79
    assert design.grand_weight == pytest.approx(12 * 13 / 18)
    assert design.cell_size == pytest.approx(2 * 9 * 1832 / 156)


def test_prob_vector():
    problems = (ChoiceProblem(("1",)), ChoiceProblem(("1", "2")))
    vector = ProbVector.from_passive(problems, [0.8, 0.6])
    np.testing.assert_allclose(vector.values, [0.2, 0.8, 0.4, 0.6])
    np.testing.assert_allclose(vector.active, [0.2, 0.4])
    assert vector.restrict([1]).problems == (problems[1],)
    assert vector.as_dict() == {"1": 0.8, "1-2": 0.6}
    with pytest.raises(ValidationError):
        ProbVector(problems, [0.5, 0.6, 0.4, 0.6])
    with pytest.raises(ValidationError):
        ProbVector(problems, [0.2, 0.8])


def test_load_panel(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text(PANEL_CSV)
    panel = load_panel(path)
    assert panel.n_subjects == 4
    assert panel.n_records == 8
    assert panel.design.q == 1
    assert panel.design.n == 4
    assert [p.key for p in panel.design.problems] == ["1", "2", "1-2"]
    shown, defaults = panel.weighted_counts()
    np.testing.assert_array_equal(shown, [2, 2, 4])
    np.testing.assert_array_equal(defaults, [1, 1, 2])


def test_panel_write_and_read(tmp_path, small_panel):
    path = tmp_path / "panel.csv"
    write_panel(small_panel, path)
    panel = load_panel(path)
    assert sorted(panel.records) == sorted(small_panel.records)


def test_aggregate_ignores_record_order(tmp_path):
    design = design_from_shape(3, 2, 60)
    population = random_rational_population(design, enumerate_columns(design), seed=3)
    ordered = tmp_path / "ordered.csv"
    write_panel(simulate_panel(design, population, seed=4), ordered)
    shuffled = tmp_path / "shuffled.csv"
    frame = pd.read_csv(ordered, dtype=str)
    frame.sample(frac=1, random_state=5).to_csv(shuffled, index=False)
    first = aggregate(load_panel(ordered))
    second = aggregate(load_panel(shuffled))
    assert first.design.problems == second.design.problems
    np.testing.assert_array_equal(first.shown, second.shown)
    np.testing.assert_array_equal(first.defaults, second.defaults)


@pytest.mark.parametrize(
    "body, line",
    [
        ("1,1,yes\n", 2),
        ("1,1,1\n2,,0\n", 3),
        ("1,1-,1\n", 2),
        ("1,0-1,1\n", 2),
    ],
)
def test_load_panel_parse_errors(tmp_path, body, line):
    path = tmp_path / "panel.csv"
    path.write_text("subject_id,choice_set,chose_default\n" + body)
    with pytest.raises(ParseError) as error:
        load_panel(path)
    assert error.value.line == line


def test_load_panel_rejects_bad_files(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text("subject,set,default\n1,1,1\n")
    with pytest.raises(ParseError) as error:
        load_panel(path)
    assert error.value.line == 1
    path.write_text("subject_id,choice_set,chose_default\n1,1,1\n1,1,0\n")
    with pytest.raises(ValidationError, match="duplicate"):
        load_panel(path)
    with pytest.raises(ValidationError):
        load_panel(tmp_path / "missing.csv")


def test_aggregate_round_trip(tmp_path, small_panel):
    counts = aggregate(small_panel)
    np.testing.assert_array_equal(counts.shown, [2, 2, 4])
    np.testing.assert_array_equal(counts.defaults, [1, 1, 2])
    assert counts.count(ChoiceProblem(("1",))) == (1, 2)
    path = tmp_path / "aggregate.csv"
    write_aggregate(counts, path)
    loaded = load_aggregate(path, q=1)
    assert loaded.design.n == 4
    np.testing.assert_allclose(loaded.frequencies().values, counts.frequencies().values)


def test_load_aggregate_validation(tmp_path):
    path = tmp_path / "aggregate.csv"
    path.write_text("choice_set,shown,default\n1,10,3\n2,10,11\nALL,10,1\n")
    with pytest.raises(ValidationError):
        load_aggregate(path, q=1)
    path.write_text("choice_set,shown,default\n1,10,3\n2,ten,1\nALL,10,1\n")
    with pytest.raises(ParseError) as error:
        load_aggregate(path, q=1)
    assert error.value.line == 3
    path.write_text("choice_set,shown,default\n1,10,3\n2,10,1\n")
    with pytest.raises(ValidationError, match="grand"):
        load_aggregate(path, q=1)


def test_leave_out_grand_frequency(small_panel):
    assert leave_out_grand_frequency(small_panel, ChoiceProblem(("1",))) == (1, 2)
    assert leave_out_grand_frequency(small_panel, ChoiceProblem(("2",))) == (1, 2)
    with pytest.raises(ValidationError):
        leave_out_grand_frequency(small_panel, ChoiceProblem(("1", "2")))


def test_cluster_resample_keeps_subjects_whole(small_panel):
    sample = cluster_resample(small_panel, seed=5)
    assert sample.n_subjects == small_panel.n_subjects
    assert sample.n_records == small_panel.n_records
    for subject in range(sample.n_subjects):
        assert np.count_nonzero(sample.subject_index == subject) == 2
    assert len(set(sample.subject_ids)) == sample.n_subjects
    multiplicity = subject_multiplicity(4, seed=5)
    assert multiplicity.sum() == 4


def test_bootstrap_frequencies_do_not_depend_on_threads(violating_panel):
    serial = bootstrap_passive_frequencies(violating_panel, 3, 20, threads=1)
    parallel = bootstrap_passive_frequencies(violating_panel, 3, 20, threads=4)
    assert serial.shape == (20, 3)
    np.testing.assert_array_equal(serial, parallel)
    np.testing.assert_array_equal(serial[:, 2], 1.0)
