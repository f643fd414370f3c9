"""
Serialize command results as versioned JSON reports or flat CSV files
"""

import dataclasses
import datetime
import enum
import json
import logging
import sys
from importlib.metadata import PackageNotFoundError, version

import numpy as np
import pandas as pd

from .choice import ChoiceProblem

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"


def tool_version():
    try:
        return version("RumOverload")
    except PackageNotFoundError:
        return "unknown"


def to_jsonable(value):
    """
    Recursively turn dataclasses, enums, numpy scalars/arrays and choice
    problems into plain JSON types. Non-finite floats become strings.
    """
    # before the dataclass branch: problems are frozen dataclasses
    if isinstance(value, ChoiceProblem):
        return value.key
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: to_jsonable(getattr(value, f.name))
            for f in dataclasses.fields(value)
            if f.repr
        }
    if isinstance(value, dict):
        return {str(to_jsonable(k)): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, enum.Enum):
        return value.value if not isinstance(value, int) else value.name
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return "NaN"
        if np.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return value
    return value


def build_report(config, result, timestamp=None):
    """
    Wrap a command result with schema version, tool version, the effective
    configuration and a timestamp
    """
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc)
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "rumoverload", "version": tool_version()},
        "timestamp": timestamp.strftime(TIMESTAMP_FORMAT),
        "command": config.command,
        "config": to_jsonable(config.as_dict()),
        "result": to_jsonable(result),
    }


def dumps(report):
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def flatten(report):
    """
    One (field, value) row per leaf of the report, nested keys joined by "."
    """
    frame = pd.json_normalize(report, sep=".")
    rows = []
    for name in frame.columns:
        value = frame.at[0, name]
        if isinstance(value, list):
            value = json.dumps(value)
        rows.append((name, value))
    return pd.DataFrame(rows, columns=["field", "value"])


def write_report(report, out=None, fmt="json"):
    """
    Write to `out`, or to stdout when it is None
    """
    if fmt == "json":
        text = dumps(report)
    else:
        text = flatten(report).to_csv(index=False)
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("Report written to %s", out)


def write_adjusted_p_values(min_report, path):
    """
    problem,p_value,adjusted_p_value per problem of a finite Min test
    """
    frame = pd.DataFrame(
        {
            "problem": list(min_report.p_values),
            "p_value": list(min_report.p_values.values()),
            "adjusted_p_value": [
                min_report.adjusted[key] for key in min_report.p_values
            ],
        }
    )
    frame.to_csv(path, index=False, encoding="utf-8")


def write_j_star(rum_report, path):
    frame = pd.DataFrame(
        {
            "replication": np.arange(1, rum_report.j_star.size + 1),
            "j_star": rum_report.j_star,
        }
    )
    frame.to_csv(path, index=False, encoding="utf-8")
