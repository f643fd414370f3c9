"""
Shared fixtures
"""

import pytest

from rumoverload.choice import ChoiceProblem, Design, PanelDataset, Universe


def two_option_design(q=1, n=0):
    universe = Universe(("1", "2"))
    problems = [ChoiceProblem(("1",)), ChoiceProblem(("2",)), universe.grand_problem()]
    return Design.build(universe, problems, q=q, n=n)


@pytest.fixture
def small_panel():
    """
    Four subjects, each shown one singleton and the grand problem
    """
    records = [
        ("1", 0, True),
        ("1", 2, False),
        ("2", 1, False),
        ("2", 2, True),
        ("3", 0, False),
        ("3", 2, True),
        ("4", 1, True),
        ("4", 2, False),
    ]
    return PanelDataset.from_records(two_option_design(q=1, n=4), records)


@pytest.fixture
def violating_panel():
    """
    Forty subjects: option 1 is never left for the default, option 2 and the
    grand problem always are
    """
    records = []
    for s in range(40):
        small = 0 if s < 20 else 1
        records.append((str(s + 1), small, small == 1))
        records.append((str(s + 1), 2, True))
    return PanelDataset.from_records(two_option_design(q=1, n=40), records)
