"""
Numerical tolerances and run configuration
"""

import dataclasses
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import reduce

from .errors import ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

SEED_ENVIRONMENT_VARIABLE = "RUMOVERLOAD_SEED"

COMMANDS = ("bounds", "test-min", "test-rum", "colgen", "simulate", "report")
STOCHASTIC_COMMANDS = ("test-min", "test-rum", "colgen", "simulate")


@dataclass(frozen=True)
class Tolerances:
    """
    Tolerances shared by all numerical kernels.

    Attributes:
    feasibility (float): primal feasibility of LP solutions
    kkt (float): KKT residual accepted from the NNLS solver
    integrality (float): distance from 0/1 accepted as integral
    equality_slack (float): slack on equality rows fed with projected data
    rank (float): relative singular value cutoff for rank decisions
    pricing (float): pricing value treated as nonpositive
    stall (float): relative objective improvement counted as a stall
    stall_iterations (int): consecutive stalls before giving up
    probability_sum (float): allowed deviation of (active, passive) sums
    nnls_max_iter (int): outer iteration cap of the NNLS solver, 0 = 3 * H
    """

    feasibility: float = 1e-9
    kkt: float = 1e-9
    integrality: float = 1e-6
    equality_slack: float = 1e-7
    rank: float = 1e-10
    pricing: float = 1e-9
    stall: float = 1e-10
    stall_iterations: int = 5
    probability_sum: float = 1e-12
    nnls_max_iter: int = 0

    def replace(self, **overrides):
        """
        Return a copy with some tolerances replaced, rejecting unknown names
        """
        names = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - names
        if unknown:
            raise ValidationError(
                "Unknown tolerance(s): %s" % ", ".join(sorted(unknown))
            )
        return dataclasses.replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a single command line run depends on.

    Attributes:
    command (str): one of COMMANDS
    input (str): path of a panel/aggregate csv, or "paper"
    model (str): "i", "ii" or "iii"
    scope (str): "all" or "exclude-grand"
    bootstrap (int): bootstrap replications B
    seed (int | None): base seed of all random streams
    threads (int): worker processes for replications
    out (str | None): output path, stdout when None
    format (str): "json" or "csv"
    tolerances (Tolerances): numerical tolerances
    options (dict): command specific settings
    """

    command: str
    input: str = "paper"
    model: str = "i"
    scope: str = "all"
    bootstrap: int = 1000
    seed: int | None = None
    threads: int = 1
    out: str | None = None
    format: str = "json"
    tolerances: Tolerances = field(default_factory=Tolerances)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"Unknown command: {self.command}")
        if self.model not in ("i", "ii", "iii"):
            raise ValidationError(f"Unknown model: {self.model}")
        if self.scope not in ("all", "exclude-grand"):
            raise ValidationError(f"Unknown scope: {self.scope}")
        if self.format not in ("json", "csv"):
            raise ValidationError(f"Unknown format: {self.format}")
        if self.command in STOCHASTIC_COMMANDS and self.seed is None:
            raise ValidationError(
                f"Command {self.command} is stochastic and needs --seed "
                f"(or {SEED_ENVIRONMENT_VARIABLE})"
            )
        if self.bootstrap < 1:
            raise ValidationError("--B must be at least 1")
        if self.threads < 1:
            raise ValidationError("--threads must be at least 1")

    def as_dict(self):
        """
        Plain dictionary for embedding in reports
        """
        result = dataclasses.asdict(self)
        result["options"] = dict(sorted(self.options.items()))
        return result


def get_nested_value(nested_dict, keys, default=None):
    """
    Get a nested value from a nested dictionary, or default if absent
    """
    try:
        return reduce(lambda d, k: d[k], keys, nested_dict)
    except (KeyError, TypeError):
        return default


def load_config(configfile):
    """
    Load a TOML config file. Returns an empty configuration for None.
    """
    if configfile is None:
        return {}
    try:
        with open(configfile, "rb") as f:
            config = tomllib.load(f)
    except FileNotFoundError as e:
        raise ValidationError(f"Config file not found: {configfile}") from e
    except tomllib.TOMLDecodeError as e:
        raise ValidationError(f"Invalid config file {configfile}: {e}") from e
    logger.info("Loaded configuration from %s", configfile)
    return config


def tolerances_from_config(config):
    """
    Build Tolerances from the [rumoverload.tolerances] table of a config
    """
    overrides = get_nested_value(config, ["rumoverload", "tolerances"], {})
    if not overrides:
        return DEFAULT_TOLERANCES
    for name, value in overrides.items():
        logger.info("Tolerance override %s = %s", name, value)
    return DEFAULT_TOLERANCES.replace(**overrides)


def seed_from_environment():
    """
    Seed from RUMOVERLOAD_SEED, or None
    """
    value = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
    if value in (None, ""):
        return None
    try:
        return int(value)
    except ValueError as e:
        raise ValidationError(
            f"{SEED_ENVIRONMENT_VARIABLE} must be an integer, got {value!r}"
        ) from e
