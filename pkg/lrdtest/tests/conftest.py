import numpy as np
import pytest

from lrdtest.ingest import load_fixture
from lrdtest.periodogram import SeriesView
from lrdtest.simulate import generator
from lrdtest.spectral import default_grid
from lrdtest.tests.settings import TEST_SEED, TEST_SLOW

csv_files = {
    "single.csv": "flow\n1.5\n2.5\n3.5\n4.5\n",
    "bare.csv": "1.5\n2.5\n3.5\n4.5\n",
    "multi.csv": "year,flow,price\n1871,1120,10\n1872,1160,11\n1873,963,12\n1874,1210,13\n",
    "broken.csv": "flow\n1.5\nabc\n3.5\n\n4.5\nnan\n",
}


def pytest_collection_modifyitems(config, items):
    if TEST_SLOW:
        return
    skip = pytest.mark.skip(reason="Monte Carlo run; set LRD_TEST_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture
def rng():
    return generator(TEST_SEED)


@pytest.fixture
def white_noise(rng):
    return SeriesView(rng.standard_normal(1024))


@pytest.fixture(scope="session")
def nile():
    return load_fixture("nile")


@pytest.fixture
def csv_dir(tmp_path):
    for name, text in csv_files.items():
        (tmp_path / name).write_text(text)
    return tmp_path
