import math

import numpy as np
import pytest

from sweperf.grid import FieldSet, GridSpec, init_circular_dam_break
from sweperf.decomposition import apply_reflective_bc
from sweperf.riemann import EdgeFluxAccumulator, accumulate_flux_sweep
from sweperf.timestepping import (NegativeDepthError, NoWetCellsError, ReductionLimitError, compute_dt,
                                  compute_dt_checked, compute_new_state, compute_timestep_reduction,
                                  reduction_level)


def still(n=8, depth=1.0):
    f = FieldSet.zeros(GridSpec.square(n))
    f.h[:] = depth
    return f


def test_dt_still_water_hand_value():
    expected = 0.45 * 0.5 / math.sqrt(9.81)
    assert compute_dt(still(), 0.45, 9.81) == pytest.approx(expected, rel=1e-12)
    # 0.225 / 3.1320919...
    assert expected == pytest.approx(0.07183697, abs=1e-8)


def test_dt_scales_with_depth():
    assert compute_dt(still(depth=2.0)) == pytest.approx(compute_dt(still()) / math.sqrt(2.0), rel=1e-14)


def test_dt_uses_fastest_direction():
    f = still()
    f.grid("hv")[3, 3] = 2.0
    c = math.sqrt(9.81)
    assert compute_dt(f) == pytest.approx(0.45 * 0.5 / (2.0 + c), rel=1e-14)


def test_dt_ignores_dry_cells_and_halos():
    f = still()
    f.grid("h")[2, 2] = 0.0
    f.grid("hu")[2, 2] = 100.0
    f.grid("h")[0, :] = 50.0
    assert compute_dt(f) == compute_dt(still())


def test_dt_all_dry():
    f = FieldSet.zeros(GridSpec.square(4))
    assert compute_dt(f) == math.inf
    with pytest.raises(NoWetCellsError, match="no wet cells"):
        compute_dt_checked(f)


def zero_acc(spec):
    return EdgeFluxAccumulator.zeros(spec), EdgeFluxAccumulator.zeros(spec)


def test_new_state_identity():
    f = init_circular_dam_break(GridSpec.square(10))
    f.hu[:] = 0.3
    ax, ay = zero_acc(f.spec)
    out = compute_new_state(f, ax, ay, 0.05)
    for name in ("h", "hu", "hv"):
        assert np.array_equal(getattr(out, name), getattr(f, name))


def test_new_state_rain():
    f = still()
    ax, ay = zero_acc(f.spec)
    out = compute_new_state(f, ax, ay, 0.1, rain_rate=1e-5)
    assert np.all(out.interior("h") == 1.0 + 1e-5 * 0.1)
    assert np.allclose(out.interior("h") - 1.0, 1e-6, rtol=1e-9, atol=0)


def test_new_state_mass_audit_one_step():
    f = init_circular_dam_break(GridSpec.square(40))
    apply_reflective_bc(f)
    ax = accumulate_flux_sweep(f, "x")
    ay = accumulate_flux_sweep(f, "y")
    dt = compute_dt(f)
    out = compute_new_state(f, ax, ay, dt)
    assert abs(out.volume() - f.volume()) <= 1e-12 * f.volume()


def test_new_state_friction_slows_flow():
    f = still()
    f.hu[:] = 1.0
    ax, ay = zero_acc(f.spec)
    out = compute_new_state(f, ax, ay, 0.1, manning_n=0.03)
    factor = 1.0 / (1.0 + 9.81 * 0.03**2 * 0.1 * 1.0 / 1.0)
    assert np.allclose(out.interior("hu"), factor, rtol=1e-14)


def test_new_state_negative_depth_signals_reduction():
    f = still()
    ax, ay = zero_acc(f.spec)
    ax.dh[f.spec.stride + 1] = 10.0
    with pytest.raises(NegativeDepthError, match="dt reduction"):
        compute_new_state(f, ax, ay, 0.1)


def test_new_state_dry_cells_lose_momentum():
    f = still()
    k = 2 * f.spec.stride + 2
    f.hu[k] = 0.5
    ax, ay = zero_acc(f.spec)
    # drain the cell to exactly zero
    ax.dh[k] = 1.0 / (0.1 / 0.5)
    out = compute_new_state(f, ax, ay, 0.1)
    assert out.h[k] == 0.0 and out.hu[k] == 0.0


def test_reduction_not_needed():
    f = still()
    ax, ay = zero_acc(f.spec)
    assert compute_timestep_reduction(f, ax, ay, 0.07) == 0.07


def test_reduction_halves_for_overdraft():
    f = still()
    ax, ay = zero_acc(f.spec)
    dt, dx = 0.1, f.spec.dx
    k = 3 * f.spec.stride + 3
    # outflow of 1.5 times the cell's depth at dt
    ax.dh[k] = 1.5 * f.h[k] * dx / dt
    assert compute_timestep_reduction(f, ax, ay, dt) == dt / 2
    assert reduction_level(f, ax, ay, dt) == (1, k)


def test_reduction_result_is_safe(rng):
    f = still(12)
    f.h[:] = rng.uniform(0.1, 1.0, f.spec.n_arr)
    ax, ay = zero_acc(f.spec)
    ax.dh[:] = rng.uniform(-2, 8, f.spec.n_arr)
    ay.dh[:] = rng.uniform(-2, 8, f.spec.n_arr)
    dt = compute_timestep_reduction(f, ax, ay, 0.4)
    compute_new_state(f, ax, ay, dt)


def test_reduction_limit():
    f = still()
    ax, ay = zero_acc(f.spec)
    dt, dx = 0.1, f.spec.dx
    k = 4 * f.spec.stride + 2
    # needs 2**11 times less dt: 11 halvings
    ax.dh[k] = 2.0**11 * 1.5 * dx / dt
    with pytest.raises(ReductionLimitError, match=r"worst cell \(2, 4\)"):
        compute_timestep_reduction(f, ax, ay, dt)
    ax.dh[k] = 2.0**9 * 1.5 * dx / dt
    assert compute_timestep_reduction(f, ax, ay, dt) == dt / 2**10
