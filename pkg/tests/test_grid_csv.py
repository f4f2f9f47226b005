"""Grid bookkeeping and CSV round trips."""

import numpy as np
import pytest

from contact_hj import BIG, ConfigError, GridFunction, GridSpec
from contact_hj import csvio
from contact_hj.grid import point_source_values


def test_periodic_spacing_excludes_right_endpoint():
    g = GridSpec(200, 4.0, 1, "periodic")
    nodes = g.axis_nodes()
    assert g.h == 8.0 / 200
    assert nodes[0] == -4.0
    assert nodes[-1] == pytest.approx(4.0 - g.h)


def test_clamped_spacing_includes_both_endpoints():
    g = GridSpec(161, 4.0, 1, "clamped")
    nodes = g.axis_nodes()
    assert g.h == pytest.approx(0.05)
    assert nodes[0] == -4.0 and nodes[-1] == 4.0


@pytest.mark.parametrize("kwargs,match", [
    (dict(n=41, boundary="weird"), "boundary"),
    (dict(n=1), "at least 3 nodes"),
    (dict(n=41, d=3), "dimension"),
])
def test_grid_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        GridSpec(half_width=4.0, **kwargs)


def test_from_callable_and_lipschitz_estimate():
    g = GridSpec(161, 4.0, 1, "clamped")
    f = GridFunction.from_callable(g, np.abs)
    assert f.values[0] == 4.0
    assert f.lip_estimate == pytest.approx(1.0)


def test_point_source_is_big_off_source():
    g = GridSpec(41, 4.0, 1, "clamped")
    vals = point_source_values(g, 10, 1.25)
    assert vals[10] == 1.25
    assert np.all(vals[np.arange(41) != 10] >= BIG / 2)


def test_fmt_uses_12_significant_digits():
    assert csvio.fmt(np.pi) == "3.14159265359"
    assert csvio.fmt(1.0) == "1"
    assert csvio.fmt(-0.25) == "-0.25"


def test_grid_function_csv_round_trip(tmp_path):
    g = GridSpec(81, 4.0, 1, "periodic")
    rng = np.random.default_rng(0x5EED)
    f = GridFunction(g, rng.uniform(-2, 2, 81))
    path = tmp_path / "f.csv"
    csvio.write_text(path, csvio.grid_function_csv(f))
    back = csvio.read_grid_function(path, g)
    # 12 significant digits survive a round trip at this magnitude
    np.testing.assert_allclose(back.values, f.values, rtol=1e-11, atol=1e-12)
    assert back.grid.n == 81
    wrong = GridSpec(41, 4.0, 1, "periodic")
    with pytest.raises(ConfigError):
        csvio.read_grid_function(path, wrong)


def test_render_csv_shapes_header_and_rows():
    text = csvio.render_csv(["a", "b"], [[1.0, 2.0], [3.0, 4.5]])
    lines = text.strip().split("\n")
    assert lines[0] == "a,b"
    assert lines[1] == "1,2"
    assert lines[2] == "3,4.5"
