"""
Embedded experimental data and small didactic designs.

The experiment offered 12 options (ids 1-12) next to a default worth 7
points (id 0). Subjects saw 9 random problems with one or two options plus
the default, then the grand problem. Only per-problem counts are published,
so the data is shipped as an AggregateDataset; no panel is reconstructed.
"""

import math

import numpy as np

from .choice import AggregateDataset, ChoiceProblem, Design, ProbVector, Universe
from .errors import ValidationError

PAPER_Q = 9
PAPER_N = 1832
PAPER_DEFAULT_ID = "0"

# option id -> value in experimental points; the default (id 0) is worth 7
OPTION_VALUES = {
    "0": 7,
    "1": 0,
    "2": 2,
    "3": 1,
    "4": 2,
    "5": 6,
    "6": 4,
    "7": 7,
    "8": 1,
    "9": 8,
    "10": 1,
    "11": 10,
    "12": 1,
}

# (choice set without the default, times shown, times the default was chosen)
CHOICE_COUNTS = (
    ("1", 204, 199),
    ("2", 193, 188),
    ("3", 218, 210),
    ("4", 232, 225),
    ("5", 227, 214),
    ("6", 230, 226),
    ("7", 221, 212),
    ("8", 229, 212),
    ("9", 201, 18),
    ("10", 199, 190),
    ("11", 194, 20),
    ("12", 195, 184),
    ("1-2", 209, 203),
    ("1-3", 225, 217),
    ("1-4", 185, 175),
    ("1-5", 204, 190),
    ("1-6", 208, 199),
    ("1-7", 203, 188),
    ("1-8", 225, 203),
    ("1-9", 211, 24),
    ("1-10", 218, 215),
    ("1-11", 223, 30),
    ("1-12", 235, 219),
    ("2-3", 229, 219),
    ("2-4", 213, 202),
    ("2-5", 218, 202),
    ("2-6", 215, 208),
    ("2-7", 250, 231),
    ("2-8", 193, 178),
    ("2-9", 207, 36),
    ("2-10", 192, 185),
    ("2-11", 194, 24),
    ("2-12", 192, 182),
    ("3-4", 191, 182),
    ("3-5", 218, 203),
    ("3-6", 198, 194),
    ("3-7", 205, 192),
    ("3-8", 215, 194),
    ("3-9", 207, 44),
    ("3-10", 199, 190),
    ("3-11", 200, 38),
    ("3-12", 231, 219),
    ("4-5", 219, 190),
    ("4-6", 215, 200),
    ("4-7", 213, 191),
    ("4-8", 216, 187),
    ("4-9", 193, 35),
    ("4-10", 219, 204),
    ("4-11", 210, 28),
    ("4-12", 197, 186),
    ("5-6", 224, 200),
    ("5-7", 209, 183),
    ("5-8", 210, 186),
    ("5-9", 224, 45),
    ("5-10", 199, 189),
    ("5-11", 214, 36),
    ("5-12", 213, 199),
    ("6-7", 205, 189),
    ("6-8", 200, 178),
    ("6-9", 218, 44),
    ("6-10", 209, 204),
    ("6-11", 223, 31),
    ("6-12", 221, 210),
    ("7-8", 223, 202),
    ("7-9", 206, 36),
    ("7-10", 199, 182),
    ("7-11", 205, 30),
    ("7-12", 221, 205),
    ("8-9", 226, 32),
    ("8-10", 205, 182),
    ("8-11", 222, 33),
    ("8-12", 221, 204),
    ("9-10", 192, 31),
    ("9-11", 202, 23),
    ("9-12", 223, 42),
    ("10-11", 219, 33),
    ("10-12", 193, 187),
    ("11-12", 224, 36),
    ("1-2-3-4-5-6-7-8-9-10-11-12", 1832, 409),
)


def paper_universe():
    return Universe(tuple(str(i) for i in range(1, 13)), PAPER_DEFAULT_ID)


def paper_aggregate():
    """
    The published per-problem counts as an AggregateDataset
    """
    universe = paper_universe()
    counts = {
        ChoiceProblem.from_key(key): (shown, defaults)
        for key, shown, defaults in CHOICE_COUNTS
    }
    design = Design.build(universe, counts, q=PAPER_Q, n=PAPER_N)
    return AggregateDataset(
        design,
        [counts[p][0] for p in design.problems],
        [counts[p][1] for p in design.problems],
    )


def paper_design():
    return paper_aggregate().design


def example_design():
    """
    Options a, b, c: all singletons and pairs plus the grand problem
    """
    universe = Universe(("a", "b", "c"), "d")
    problems = [
        ChoiceProblem(members)
        for members in (
            ("a",),
            ("b",),
            ("c",),
            ("a", "b"),
            ("a", "c"),
            ("b", "c"),
            ("a", "b", "c"),
        )
    ]
    return Design.build(universe, problems, q=2, n=0)


def example_probabilities(grand_passive=0.4):
    """
    Each option beats the default with probability 0.2 and pairs are chosen
    actively with probability 0.4. These are rationalizable only with
    mutually exclusive preferences, which pins the grand passive
    probability at 0.4; other values of `grand_passive` make it
    inconsistent with a rational population.
    """
    design = example_design()
    passive = np.array([0.8, 0.8, 0.8, 0.6, 0.6, 0.6, grand_passive])
    return ProbVector.from_passive(design.problems, passive)


def nested_design():
    """
    Problems {a1}, {a1, a2}, {a1, a2, a3}, each with the default
    """
    universe = Universe(("a1", "a2", "a3"), "d")
    problems = [
        ChoiceProblem(("a1",)),
        ChoiceProblem(("a1", "a2")),
        ChoiceProblem(("a1", "a2", "a3")),
    ]
    return Design.build(universe, problems, q=2, n=0)


# the displayed A of the nested design, rows a1|{a1,d}, d|{a1,d}, ...
NESTED_A = np.array(
    [
        [1, 1, 1, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 1, 1, 1],
        [1, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 0, 1, 1, 0, 0],
        [1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 1, 0],
        [0, 1, 0, 1, 0, 1, 0, 1],
        [0, 0, 0, 0, 1, 0, 0, 0],
    ]
)

NESTED_B = np.array(
    [
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 1, 1, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 1],
    ]
)


def jam_example(small_active=0.12, small_size=6, large_size=24):
    """
    Independent preferences: each of `small_size` jams beats "no jam" with
    probability p. Solve 1 - (1 - p)^small_size = small_active for p and
    return (p, implied active probability with `large_size` jams).
    """
    if not 0 <= small_active < 1:
        raise ValidationError("small_active must lie in [0, 1)")
    p = 1.0 - math.pow(1.0 - small_active, 1.0 / small_size)
    return p, 1.0 - math.pow(1.0 - p, large_size)
