import math

import numpy as np
import pytest

from sweperf.grid import (FieldSet, GridSpec, ScenarioConfig, flat_index, init_circular_dam_break,
                          init_dambreak_1d, init_lake_at_rest, make_scenario, parse_config)


@pytest.mark.parametrize("i, j, expected", [(0, 0, 0), (1, 1, 7), (5, 5, 35)])
def test_flat_index_examples(i, j, expected):
    assert flat_index(i, j, GridSpec(4, 4)) == expected


def test_flat_index_matches_numpy_ravel():
    spec = GridSpec(7, 3)
    for j in range(spec.n_y + 2):
        for i in range(spec.n_x + 2):
            assert flat_index(i, j, spec) == np.ravel_multi_index((j, i), spec.padded_shape)


def test_flat_index_out_of_range():
    with pytest.raises(IndexError):
        flat_index(6, 0, GridSpec(4, 4))


def test_grid_views_share_memory():
    f = FieldSet.zeros(GridSpec(4, 3))
    f.grid("h")[2, 1] = 5.0
    assert f.h[flat_index(1, 2, f.spec)] == 5.0
    assert f.interior("h").shape == (3, 4)


def test_circular_dam_break_values():
    spec = GridSpec.square(50)
    f = init_circular_dam_break(spec)
    x, y = spec.cell_centers()
    r = np.hypot(x, y)
    centre = np.unravel_index(np.argmin(np.where(np.isfinite(r), r, np.inf)[1:-1, 1:-1]), (50, 50))
    assert f.interior("h")[centre] == 4.0
    assert f.interior("h")[0, 0] == 1.0
    assert np.all(f.hu == 0) and np.all(f.hv == 0) and np.all(f.z == 0)


def test_circular_dam_break_volume_recount():
    n, dx = 40, 0.5
    f = init_circular_dam_break(GridSpec.square(n, dx))
    radius = n * dx / 5
    inside = 0
    for j in range(n):
        for i in range(n):
            xc = -n * dx / 2 + (i + 0.5) * dx
            yc = -n * dx / 2 + (j + 0.5) * dx
            inside += math.sqrt(xc * xc + yc * yc) <= radius
    expected = dx * dx * (4 * inside + (n * n - inside))
    assert f.volume() == pytest.approx(expected, rel=1e-14)


def test_circular_dam_break_is_symmetric():
    h = init_circular_dam_break(GridSpec.square(64)).interior("h")
    assert np.array_equal(h, h.T)
    assert np.array_equal(h, h[::-1])
    assert np.array_equal(h, h[:, ::-1])


def test_circular_dam_break_rejects_rectangle():
    with pytest.raises(ValueError):
        init_circular_dam_break(GridSpec(10, 12))


def test_lake_at_rest_flat():
    f = init_lake_at_rest(GridSpec.square(20), 0.0)
    assert np.all(f.interior("h") == 1.0)
    assert np.all(f.interior("z") == 0.0)


def test_lake_at_rest_dry_crest():
    f = init_lake_at_rest(GridSpec.square(20), 2.0)
    h = f.interior("h")
    assert (h == 0).any()
    assert h[10, 10] == 0.0
    wet = h > 0
    assert np.allclose(f.surface()[wet], 1.0, atol=1e-15, rtol=0)


def test_dambreak_1d_split():
    f = init_dambreak_1d(GridSpec(10, 1, 1.0))
    assert list(f.interior("h")[0]) == [4.0] * 5 + [1.0] * 5


def test_parse_config_sections_and_defaults():
    cfg = parse_config("kind = lake-at-rest\nn_side = 32\n[physics]\nmanning_n = 0.03\n")
    assert cfg.kind == "lake-at-rest" and cfg.n_side == 32 and cfg.manning_n == 0.03
    assert cfg.cfl == 0.45


@pytest.mark.parametrize("bad", [{"n_side": 0}, {"cfl": 0.0}, {"cfl": 1.5}, {"kind": "tsunami"},
                                 {"rain_rate": -1.0}, {"dx": -0.5}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ScenarioConfig(**bad)


def test_make_scenario_kinds():
    assert make_scenario(ScenarioConfig(n_side=8)).spec.n_x == 8
    f = make_scenario(ScenarioConfig(kind="dambreak-1d", n_side=8))
    assert (f.spec.n_x, f.spec.n_y) == (8, 1)
