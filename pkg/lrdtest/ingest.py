"""
Reading series from CSV files (any fsspec URL) and the bundled fixtures.
"""
import csv
import logging
import math
import os

import fsspec
import numpy as np

from .errors import ConfigurationError, DataError
from .periodogram import SeriesView

logger = logging.getLogger("lrdtest.ingest")

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
FIXTURE_PREFIX = "fixture:"
TRANSFORMS = ("none", "log_return", "square", "square_log_return")


def fixture_path(name):
    path = os.path.join(FIXTURES, f"{name}.csv")
    if not os.path.exists(path):
        available = sorted(f[:-4] for f in os.listdir(FIXTURES) if f.endswith(".csv"))
        raise ConfigurationError(f"no bundled series {name!r}; available: {', '.join(available)}")
    return path


def resolve_input(location):
    """``fixture:NAME`` names a bundled series; anything else is a path or URL."""
    if location.startswith(FIXTURE_PREFIX):
        return fixture_path(location[len(FIXTURE_PREFIX) :])
    return location


def _parse_float(text):
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _column_index(header, column):
    if column is None:
        return 0
    if isinstance(column, int) or column.isdigit():
        return int(column)
    if header is None:
        raise DataError(f"column {column!r} requested but the file has no header")
    try:
        return [h.strip() for h in header].index(column)
    except ValueError:
        raise DataError(f"no column {column!r} in header {header}") from None


def parse_rows(rows, column=None):
    """Values of one column from CSV rows (header optional).

    The first row is a header when its selected field is not numeric.
    Non-numeric, missing or non-finite fields raise ``DataError`` listing
    every offending line.
    """
    numbered = [(i + 1, row) for i, row in enumerate(rows) if any(f.strip() for f in row)]
    if not numbered:
        raise DataError("no data rows")
    first = numbered[0][1]
    named = column is not None and not str(column).isdigit()
    index = 0 if named else _column_index(None, column)
    header = None
    if named or index >= len(first) or _parse_float(first[index]) is None:
        header = first
        numbered = numbered[1:]
    if not numbered:
        raise DataError("header but no data rows")
    index = _column_index(header, column)
    if column is None and any(len(row) > 1 for _, row in numbered):
        raise DataError("multi-column input; select a column")

    values, bad = [], []
    for line, row in numbered:
        value = _parse_float(row[index]) if index < len(row) else None
        if value is None:
            bad.append(line)
        else:
            values.append(value)
    if bad:
        shown = ", ".join(map(str, bad[:10])) + (" ..." if len(bad) > 10 else "")
        raise DataError(f"non-numeric or non-finite values on lines {shown}", lines=bad)
    return np.array(values)


def apply_transform(values, transform="none"):
    """none | log_return | square | square_log_return (log return, then square)."""
    if transform not in TRANSFORMS:
        raise ConfigurationError(f"unknown transform {transform!r}")
    values = np.asarray(values, dtype=float)
    if transform in ("log_return", "square_log_return"):
        bad = np.flatnonzero(values <= 0)
        if bad.size:
            raise DataError("log returns need positive values", lines=bad + 1)
        values = np.diff(np.log(values))
    if transform in ("square", "square_log_return"):
        values = values ** 2
    return values


def read_series(location, column=None, transform="none"):
    """Read a series from a CSV file, local or remote.

    Parameters
    ----------
    location: str
        Path, fsspec URL or ``fixture:NAME``.
    column: str or int
        Header name or zero-based index, for multi-column files.
    transform: str
        See ``apply_transform``.
    """
    path = resolve_input(location)
    try:
        with fsspec.open(path, "rt", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read {location}: {e}") from e
    values = apply_transform(parse_rows(rows, column), transform)
    logger.debug(f"read {len(values)} values from {location} (transform={transform})")
    return SeriesView(values)


def load_fixture(name, transform="none"):
    return read_series(FIXTURE_PREFIX + name, transform=transform)
