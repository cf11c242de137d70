import logging
import os

from fsspec.utils import setup_logging

__version__ = "0.1.0"

logger = logging.getLogger("lrdtest")

if "LRD_DEBUG" in os.environ:
    setup_logging(logger=logger, level=os.getenv("LRD_DEBUG"))

from .core import TestConfig, TestReport, run_test  # noqa: E402
from .errors import LRDError  # noqa: E402
from .ingest import load_fixture, read_series  # noqa: E402
from .periodogram import SeriesView  # noqa: E402
from .simulate import monte_carlo, simulate_named_model, simulate_tvfarima  # noqa: E402
from .spectral import SieveParams  # noqa: E402

__all__ = [
    "LRDError",
    "SeriesView",
    "SieveParams",
    "TestConfig",
    "TestReport",
    "load_fixture",
    "monte_carlo",
    "read_series",
    "run_test",
    "simulate_named_model",
    "simulate_tvfarima",
]
