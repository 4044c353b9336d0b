import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gridfreq import (ConfigError, FrequencyTrace, compute_metrics, compute_sigma, nadir_zenith,
                      pct_out_of_range, recovery_time, skewness, time_error)
from gridfreq.metrics import histogram, load_frequency_csv


def tr(x, dt=0.1):
    return FrequencyTrace.uniform(x, dt)


def welford_std(x):
    n, mean, m2 = 0, 0.0, 0.0
    for v in x:
        n += 1
        d = v - mean
        mean += d / n
        m2 += d * (v - mean)
    return math.sqrt(m2 / n)


def test_sigma_basics():
    assert compute_sigma(tr(np.full(10, 3.0))) == 0.0
    assert compute_sigma(tr([-1.0, 1.0])) == 1.0
    with pytest.raises(ConfigError):
        compute_sigma(tr([1.0]))


def test_sigma_streaming_vs_two_pass():
    # a day-long AR(1) trace standing in for a scenario run, at 1 s
    rng = np.random.default_rng(0)
    e = rng.standard_normal(86400) * 20.0
    x = np.empty_like(e)
    x[0] = 0.0
    for k in range(1, x.size):
        x[k] = 0.99 * x[k - 1] + e[k]
    assert compute_sigma(tr(x, 1.0)) == pytest.approx(welford_std(x), rel=1e-9)


def test_pct_out_of_range():
    assert pct_out_of_range(tr(np.zeros(100)), 200.0) == 0.0
    x = np.array([300.0, -300.0, 0.0, 10.0])
    assert pct_out_of_range(tr(x), 200.0) == 50.0
    assert pct_out_of_range(tr([200.0, 0.0]), 200.0) == 0.0
    with pytest.raises(ConfigError):
        pct_out_of_range(tr(x), 0.0)


@settings(max_examples=100, deadline=None)
@given(x=arrays(float, st.integers(2, 200), elements=st.floats(-1000, 1000)))
def test_pct_monotone_in_threshold(x):
    t = tr(x)
    p150, p200 = pct_out_of_range(t, 150.0), pct_out_of_range(t, 200.0)
    assert 0.0 <= p200 <= p150 <= 100.0


def test_skewness_cases(rng):
    assert skewness(tr([-1.0, 1.0])) == 0.0
    assert skewness(tr([0.0, 0.0, 0.0, 3.0])) > 0
    with pytest.raises(ConfigError):
        skewness(tr(np.ones(5)))
    x = rng.gamma(2.0, 10.0, 1000)
    mean = sum(x) / len(x)
    m2 = sum((v - mean) ** 2 for v in x) / len(x)
    m3 = sum((v - mean) ** 3 for v in x) / len(x)
    assert skewness(tr(x)) == pytest.approx(m3 / m2 ** 1.5, rel=1e-9)


def test_recovery_never_leaves_band():
    assert recovery_time(tr(np.full(100, 20.0)), 1.0) == 0.0


def test_recovery_exponential_crossing():
    # -500 mHz decaying so that it crosses -150 mHz at exactly 12 s
    t = np.arange(0, 60, 0.01)
    tau = 12.0 / math.log(500.0 / 150.0)
    x = -500.0 * np.exp(-t / tau)
    assert recovery_time(FrequencyTrace(t + 100.0, x), 100.0) == pytest.approx(12.0, abs=0.011)


def test_recovery_dwell_defers_to_final_entry():
    t = np.arange(0, 60, 0.1)
    x = np.full(t.size, -300.0)
    x[(t >= 10) & (t < 12)] = -100.0  # brief re-entry
    x[t >= 20] = -100.0
    assert recovery_time(FrequencyTrace(t, x), 0.0) == pytest.approx(20.0)


def test_recovery_none_and_bounds():
    t = np.arange(0, 30, 0.1)
    assert recovery_time(FrequencyTrace(t, np.full(t.size, -300.0)), 1.0) is None
    with pytest.raises(ConfigError):
        recovery_time(FrequencyTrace(t, np.zeros(t.size)), 40.0)


def test_time_error_integral():
    assert time_error(tr(np.zeros(10))) == 0.0
    x = np.full(100000, -10.0)
    assert time_error(tr(x, 0.01), 50.0) == pytest.approx(-0.2, abs=1e-12)
    assert time_error(tr(np.r_[np.full(50, 10.0), np.full(50, -10.0)])) == 0.0


def test_nadir_zenith(rng):
    assert nadir_zenith(tr([0.0, 0.0])) == (0.0, 0.0)
    x = rng.normal(0, 50, 5000)
    lo, hi = nadir_zenith(tr(x))
    assert lo == min(x) and hi == max(x) and lo <= hi


def test_histogram_counts_every_sample(rng):
    x = rng.normal(0, 300, 10000)
    counts, edges = histogram(tr(x))
    assert counts.sum() == x.size
    assert edges[0] == -500.0 and edges[-1] == 500.0 and len(edges) == 201
    assert np.allclose(np.diff(edges), 5.0)


def test_report_invariants(rng):
    x = np.r_[0.0, rng.normal(0, 80, 999)]
    m = compute_metrics(tr(x), events=[10.0])
    assert m.nadir <= 0.0 <= m.zenith
    assert 0.0 <= m.pct_out_200 <= m.pct_out_150 <= 100.0
    assert m.histogram.sum() == x.size
    assert len(m.recovery_times) == 1
    assert compute_metrics(tr(np.zeros(10))).skewness is None


@settings(max_examples=50, deadline=None)
@given(x=arrays(float, st.integers(10, 100), elements=st.floats(-300, 300)), c=st.floats(0.1, 10),
       shift=st.floats(-50, 50))
def test_scale_and_shift(x, c, shift):
    if np.ptp(x) < 1e-3:
        return
    t = tr(x)
    scaled = tr(c * x)
    assert compute_sigma(scaled) == pytest.approx(c * compute_sigma(t), rel=1e-9, abs=1e-9)
    lo, hi = nadir_zenith(t)
    assert nadir_zenith(scaled) == pytest.approx((c * lo, c * hi), rel=1e-12)
    assert skewness(scaled) == pytest.approx(skewness(t), rel=1e-6, abs=1e-6)
    assert pct_out_of_range(scaled, 100.0 * c) == pct_out_of_range(t, 100.0) or \
        np.any(np.isclose(np.abs(x), 100.0))
    moved = tr(x + shift)
    assert compute_sigma(moved) == pytest.approx(compute_sigma(t), rel=1e-6, abs=1e-6)
    assert skewness(moved) == pytest.approx(skewness(t), rel=1e-5, abs=1e-5)
    assert time_error(moved) - time_error(t) == pytest.approx(shift / 1000 / 50 * 0.1 * x.size, rel=1e-6, abs=1e-12)


def test_trace_validation():
    with pytest.raises(ConfigError):
        FrequencyTrace([0.0, 0.1, 0.3], [0.0, 0.0, 0.0])
    with pytest.raises(ConfigError):
        FrequencyTrace([0.0, 0.1], [0.0, np.nan])


def test_csv_import(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("t_s,delta_f_mhz\n0.0,1.0\n0.1,-1.0\n0.2,1.0\n")
    trace = load_frequency_csv(p)
    assert len(trace) == 3 and trace.dt == pytest.approx(0.1)
    bad = tmp_path / "bad.csv"
    bad.write_text("time,f\n0,1\n")
    with pytest.raises(ConfigError):
        load_frequency_csv(bad)
    gap = tmp_path / "gap.csv"
    gap.write_text("t_s,delta_f_mhz\n0.0,1.0\n0.1,-1.0\n0.5,1.0\n")
    with pytest.raises(ConfigError):
        load_frequency_csv(gap)
