import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import integrate, stats

from gridrisk.index import (
    DegenerateSeriesError, RiskLevel, assess_series, average_index, classify_risk,
    confidence_interval, get_test_function, n_phi, phi_entropy, register_test_function,
    standardize_series, t_critical, t_pvalue,
)


def brute_n_phi(features):
    mags = sorted(abs(float(f)) for f in features)
    k = len(mags)
    med = mags[k // 2] if k % 2 else 0.5 * (mags[k // 2 - 1] + mags[k // 2])
    return math.fsum(-m * math.log(m) for m in mags if m > med and m > 0)


def test_phi_values():
    assert phi_entropy(1.0) == 0.0
    assert phi_entropy(0.0) == 0.0
    assert phi_entropy(0.5) == pytest.approx(0.34657, abs=1e-5)
    with pytest.raises(ValueError):
        phi_entropy(1.5)


def test_n_phi_hand_example():
    assert n_phi([0.2, -0.4, 0.6, -0.8]) == pytest.approx(0.48501, abs=1e-5)


def test_n_phi_equal_magnitudes_is_zero():
    assert n_phi([0.3, -0.3, 0.3]) == 0.0


feature_vectors = hnp.arrays(np.float64, st.integers(1, 80), elements=st.floats(-1, 1))


@given(feature_vectors)
def test_n_phi_matches_brute_force(f):
    assert abs(n_phi(f) - brute_n_phi(f)) < 1e-12


@given(feature_vectors, st.randoms())
def test_n_phi_permutation_invariant(f, rnd):
    g = list(f)
    rnd.shuffle(g)
    assert n_phi(g) == pytest.approx(n_phi(f), abs=1e-13)


@given(feature_vectors)
def test_n_phi_bounds(f):
    mags = np.abs(f)
    count = int(np.sum(mags > np.median(mags)))
    value = n_phi(f)
    assert 0.0 <= value <= count / math.e + 1e-12


def test_register_custom_test_function():
    register_test_function("square", lambda v: v * v)
    assert n_phi([0.1, 0.2, 0.9], "square") == pytest.approx(0.81)
    with pytest.raises(ValueError):
        register_test_function("shifted", lambda v: v + 1)
    with pytest.raises(ValueError):
        get_test_function("nope")


def test_average_index():
    assert average_index([0.4, 0.6]) == 0.5
    assert average_index([0.7]) == 0.7
    vals = np.random.default_rng(0).random(10)
    assert abs(average_index(vals) - math.fsum(vals) / 10) < 1e-12
    with pytest.raises(ValueError):
        average_index([])


def test_standardize_examples():
    np.testing.assert_allclose(standardize_series([1.0, 3.0]), [-0.70711, 0.70711], atol=1e-5)
    for bad in ([2.0, 2.0, 2.0], [1.0]):
        with pytest.raises(DegenerateSeriesError):
            standardize_series(bad)


@given(hnp.arrays(np.float64, st.integers(3, 40), elements=st.floats(-10, 10)),
       st.floats(0.1, 10), st.floats(-10, 10))
def test_standardize_affine_invariant(x, a, b):
    if np.std(x) < 1e-3:
        return
    z = standardize_series(x)
    np.testing.assert_allclose(standardize_series(a * x + b), z, atol=1e-9)
    assert abs(z.mean()) < 1e-12 and abs(z.std(ddof=1) - 1) < 1e-12


def test_worked_example_p_value():
    assert t_pvalue(2.650, 13) == pytest.approx(0.0100, abs=5e-4)


def test_t_symmetry_and_center():
    assert t_pvalue(0.0, 7) == 0.5
    assert t_pvalue(-2.0, 7) == t_pvalue(2.0, 7)


def test_t_matches_density_quadrature():
    df = 13
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    tail, _ = integrate.quad(lambda s: c * (1 + s * s / df) ** (-(df + 1) / 2), 1.350, np.inf)
    assert t_pvalue(1.350, 13) == pytest.approx(0.100, abs=1e-3)
    assert t_pvalue(1.350, 13) == pytest.approx(tail, rel=1e-9)


@given(st.floats(0, 40), st.integers(1, 300))
def test_t_matches_scipy(t, df):
    assert t_pvalue(t, df) == pytest.approx(stats.t.sf(t, df), rel=1e-8, abs=1e-300)


@given(st.floats(0, 20), st.floats(0.01, 5), st.integers(1, 100))
def test_t_pvalue_strictly_decreasing(t, dt, df):
    if t_pvalue(t + dt, df) < 1e-280:
        return
    assert t_pvalue(t + dt, df) < t_pvalue(t, df)


def test_large_df_approaches_normal():
    for t in np.linspace(0, 4, 21):
        assert abs(t_pvalue(t, 200) - 0.5 * math.erfc(t / math.sqrt(2))) < 1e-3


def test_t_critical_inverts_pvalue():
    for p in (0.0125, 0.025, 0.05):
        t = t_critical(p, 49)
        assert t_pvalue(t, 49) == pytest.approx(p, rel=1e-9)
        assert t == pytest.approx(stats.t.isf(p, 49), rel=1e-9)
    lo, hi = confidence_interval(0.95, 13, 14)
    assert hi == -lo == pytest.approx(stats.t.isf(0.025, 13) / math.sqrt(14), rel=1e-9)


def test_classify_table():
    assert classify_risk(0.002) is RiskLevel.EMERGENCY
    assert classify_risk(0.02) is RiskLevel.HIGH_RISK
    assert classify_risk(0.03) is RiskLevel.PREVENTIVE
    assert classify_risk(0.5) is RiskLevel.NORMAL
    assert classify_risk(0.0125) is RiskLevel.HIGH_RISK
    assert classify_risk(0.05) is RiskLevel.NORMAL


@given(st.floats(1e-9, 0.5), st.floats(1e-9, 0.5))
def test_classify_monotone(p1, p2):
    if p1 < p2:
        assert classify_risk(p1) >= classify_risk(p2)


def test_assess_one_low_point():
    rng = np.random.default_rng(2)
    values = list(1.0 + 0.01 * rng.standard_normal(14))
    values[9] = 0.9
    s = assess_series("f1", values, range(96, 96 * 15, 96))
    assert s.degrees_of_freedom == 13
    assert s.risk_levels[9] is RiskLevel.EMERGENCY
    assert all(lvl is RiskLevel.NORMAL for k, lvl in enumerate(s.risk_levels) if k != 9)


def test_assess_constant_series_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        assess_series("f", [1.0] * 5, range(5))


@given(hnp.arrays(np.float64, st.integers(3, 30), elements=st.floats(0, 5)), st.floats(-3, 3))
def test_shift_changes_no_p_value(values, c):
    if np.std(values) < 1e-3:
        return
    a = assess_series("f", values, range(len(values)))
    b = assess_series("f", values + c, range(len(values)))
    np.testing.assert_allclose(a.p_values, b.p_values, rtol=1e-6, atol=1e-12)
    for pa, pb in zip(a.p_values, b.p_values):
        # grades can only differ if rounding straddles a threshold
        if all(abs(pa - th) > 1e-9 for th in (0.0125, 0.025, 0.05)):
            assert classify_risk(pa) == classify_risk(pb)
