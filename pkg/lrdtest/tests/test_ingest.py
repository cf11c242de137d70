import fsspec
import numpy as np
import pytest

from lrdtest.errors import ConfigurationError, DataError
from lrdtest.ingest import apply_transform, fixture_path, load_fixture, parse_rows, read_series, resolve_input


@pytest.mark.parametrize(
    "name, column, expected",
    [
        ("single.csv", None, [1.5, 2.5, 3.5, 4.5]),
        ("single.csv", "flow", [1.5, 2.5, 3.5, 4.5]),
        ("bare.csv", None, [1.5, 2.5, 3.5, 4.5]),
        ("bare.csv", "0", [1.5, 2.5, 3.5, 4.5]),
        ("multi.csv", "flow", [1120, 1160, 963, 1210]),
        ("multi.csv", "2", [10, 11, 12, 13]),
        ("multi.csv", 0, [1871, 1872, 1873, 1874]),
    ],
)
def test_read_series(csv_dir, name, column, expected):
    series = read_series(str(csv_dir / name), column)
    assert series.values.tolist() == expected


def test_read_series_bad_lines(csv_dir):
    with pytest.raises(DataError) as e:
        read_series(str(csv_dir / "broken.csv"))
    assert e.value.lines == (3, 7)
    assert "3, 7" in str(e.value)


@pytest.mark.parametrize(
    "name, column",
    [
        ("multi.csv", None),
        ("multi.csv", "volume"),
        ("bare.csv", "flow"),
        ("missing.csv", None),
    ],
)
def test_read_series_errors(csv_dir, name, column):
    with pytest.raises(DataError):
        read_series(str(csv_dir / name), column)


def test_parse_rows():
    assert parse_rows([["x"], ["1"], [" 2 "], [], ["3e2"]]).tolist() == [1.0, 2.0, 300.0]
    with pytest.raises(DataError):
        parse_rows([["x"]])
    with pytest.raises(DataError):
        parse_rows([])
    with pytest.raises(DataError) as e:
        parse_rows([["a", "b"], ["1", "2"], ["3"]], column="b")
    assert e.value.lines == (3,)


def test_read_series_memory_url():
    with fsspec.open("memory://lrdtest/series.csv", "w") as f:
        f.write("value\n0.5\n-0.25\n")
    assert read_series("memory://lrdtest/series.csv").values.tolist() == [0.5, -0.25]


@pytest.mark.parametrize(
    "transform, expected",
    [
        ("none", [1.0, np.e, np.e ** 3]),
        ("log_return", [1.0, 2.0]),
        ("square", [1.0, np.e ** 2, np.e ** 6]),
        ("square_log_return", [1.0, 4.0]),
    ],
)
def test_apply_transform(transform, expected):
    np.testing.assert_allclose(apply_transform([1.0, np.e, np.e ** 3], transform), expected)


def test_apply_transform_errors():
    with pytest.raises(DataError) as e:
        apply_transform([1.0, 0.0, 2.0, -1.0], "log_return")
    assert e.value.lines == (2, 4)
    with pytest.raises(ConfigurationError):
        apply_transform([1.0, 2.0], "diff")


def test_nile_fixture(nile):
    assert nile.T == 100
    assert nile.values[0] == 1120.0
    assert nile.values[-1] == 740.0
    assert load_fixture("nile", transform="log_return").T == 99
    assert resolve_input("fixture:nile") == fixture_path("nile")
    assert resolve_input("data/flow.csv") == "data/flow.csv"
    with pytest.raises(ConfigurationError):
        load_fixture("ibm")
