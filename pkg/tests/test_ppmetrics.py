import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweperf.perf import PlatformPeaks, reference_peaks
from sweperf.ppmetrics import (PlatformObservation, format_table, pp1, pp2, pp_sweep, read_observations,
                               read_portability_table, relative_performance, write_observations)

JUWELS = PlatformPeaks("JUWELS BOOSTER", 9494.71e9, 1258.40e9)


def obs(p_gflops, a, peaks=JUWELS, kernel="fluxX", n=1024):
    return PlatformObservation(peaks.platform, kernel, n, p_gflops * 1e9, a, peaks)


def test_relative_performance_memory_bound():
    assert relative_performance(obs(600.0, 1.0)) == pytest.approx(600 / 1258.40, rel=1e-12)
    assert relative_performance(obs(600.0, 1.0)) == pytest.approx(0.4768, abs=1e-4)


def test_relative_performance_compute_bound():
    assert relative_performance(obs(4747.355, 20.0)) == pytest.approx(0.5, rel=1e-12)


def test_relative_performance_at_roof():
    assert relative_performance(obs(1258.40 * 2.0, 2.0)) == pytest.approx(1.0, rel=1e-12)


def test_relative_performance_noise_clip_and_error():
    with pytest.warns(UserWarning):
        assert relative_performance(obs(1258.40 * 1.01, 1.0)) == 1.0
    with pytest.raises(ValueError):
        relative_performance(obs(1258.40 * 1.2, 1.0))


@pytest.mark.parametrize("rs, e1, e2", [((0.5, 0.5), 0.5, 0.5), ((1.0, 0.0), 0.0, 0.5)])
def test_pp_simple(rs, e1, e2):
    assert pp1(rs) == e1 and pp2(rs) == e2


def test_pp_four_platforms():
    rs = (0.2, 0.4, 0.6, 0.8)
    assert pp2(rs) == 0.5
    assert pp1(rs) == pytest.approx(0.384, abs=1e-3)
    assert pp1(rs) == pytest.approx(4 / (5 + 2.5 + 5 / 3 + 1.25), rel=1e-15)


def test_pp_empty_and_range():
    assert pp2([]) == 0.0 and pp1([]) == 0.0
    with pytest.raises(ValueError):
        pp1([1.2])


rs_lists = st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=10_000, deadline=None)
@given(rs_lists)
def test_am_hm(rs):
    assert pp1(rs) <= pp2(rs)


@settings(max_examples=500, deadline=None)
@given(rs_lists, st.randoms())
def test_permutation_invariance(rs, rnd):
    shuffled = list(rs)
    rnd.shuffle(shuffled)
    assert pp1(shuffled) == pytest.approx(pp1(rs), rel=1e-12, abs=1e-300)
    assert pp2(shuffled) == pytest.approx(pp2(rs), rel=1e-12, abs=1e-300)


@settings(max_examples=500, deadline=None)
@given(rs_lists, st.integers(min_value=0, max_value=11), st.floats(min_value=0.0, max_value=1.0))
def test_monotone_in_each_r(rs, idx, bump):
    idx %= len(rs)
    raised = list(rs)
    raised[idx] = max(raised[idx], bump)
    assert pp1(raised) >= pp1(rs) - 1e-12
    assert pp2(raised) >= pp2(rs) - 1e-12


def test_sweep_single_platform():
    report = pp_sweep([obs(600.0, 1.0)])
    (p,) = report.points
    assert p.pp1 == pytest.approx(600 / 1258.40, rel=1e-14)
    assert p.pp2 == pytest.approx(600 / 1258.40, rel=1e-14)


def test_sweep_missing_platform_scores_zero():
    peaks = reference_peaks()
    observations = [obs(500.0, 1.0, peaks["JEDI"]), obs(400.0, 1.0, peaks["FRONTIER"]),
                    obs(300.0, 1.0, peaks["JEDI"], n=2048)]
    report = pp_sweep(observations)
    by_n = {p.n_side: p for p in report.points}
    assert by_n[2048].pp1 == 0.0 and by_n[2048].pp2 == 0.0
    assert by_n[2048].missing == ["FRONTIER"]
    assert by_n[1024].pp1 <= by_n[1024].pp2


def test_sweep_series_and_table():
    peaks = reference_peaks()
    o = [obs(100.0 * k, 1.0, peaks[h], kernel, n) for k, h in enumerate(peaks, 1)
         for kernel in ("fluxX", "newState") for n in (256, 512)]
    report = pp_sweep(o)
    assert [s[0] for s in report.series("fluxX")] == [256, 512]
    assert [row[0] for row in report.table(512)] == ["fluxX", "newState"]
    assert all(p.pp1 <= p.pp2 for p in report.points)


def test_observation_csv_round_trip(tmp_path):
    peaks = reference_peaks()
    o = [obs(123.5, 0.75, peaks["AURORA"], "computeDt", 64)]
    back = read_observations(write_observations(tmp_path / "o.csv", o), peaks)
    assert back == o


def test_unknown_platform_in_observations(tmp_path):
    path = tmp_path / "o.csv"
    path.write_text("platform,kernel,n_side,p_achieved_gflops,a_achieved_flops_per_byte\nX,fluxX,8,1,1\n")
    with pytest.raises(KeyError):
        read_observations(path, reference_peaks())


def test_reference_table_fixture():
    rows = read_portability_table()
    assert len(rows) == 5
    assert ("computeTimeStepReduction", 0.5731, 0.6111) in rows
    assert all(a <= b for _, a, b in rows)
    text = format_table(rows)
    assert "computeTimeStepReduction  0.5731  0.6111" in text
