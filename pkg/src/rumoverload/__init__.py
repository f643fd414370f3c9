"""
RumOverload is a package for testing stochastic choice data with a default
option for choice overload: the Min and RUM bounds on the default
probability at the largest menu, and tests of random utility with and
without switching to the default.
"""

__all__ = [
    "bounds",
    "choice",
    "cli",
    "colgen",
    "commands",
    "mintests",
    "rumtest",
    "sim",
    "typespace",
]
