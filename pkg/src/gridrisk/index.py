"""Median-filtered test-function index over learned features and its risk grading."""
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels


class DegenerateSeriesError(ValueError):
    """A series with zero sample deviation cannot be standardized."""


class RiskLevel(enum.IntEnum):
    NORMAL = 0
    PREVENTIVE = 1
    HIGH_RISK = 2
    EMERGENCY = 3


# one-sided tail thresholds: p = alpha / 2 at confidence levels 97.5%, 95%, 90%
EMERGENCY_P = 0.0125
HIGH_RISK_P = 0.025
PREVENTIVE_P = 0.05


def phi_entropy(lam):
    """``-lam * ln(lam)`` on [0, 1], with phi(0) = 0."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"entropy test function is defined on [0, 1], got {lam}")
    if lam == 0.0:
        return 0.0
    return -lam * math.log(lam)


def _phi_entropy_vec(lam):
    lam = np.asarray(lam, dtype=np.float64)
    if np.any((lam < 0.0) | (lam > 1.0)):
        raise ValueError("entropy test function is defined on [0, 1]")
    out = np.zeros_like(lam)
    pos = lam > 0.0
    out[pos] = -lam[pos] * np.log(lam[pos])
    return out


@dataclass(frozen=True)
class TestFunction:
    tag: str
    scalar: object
    vectorized: object = None

    __test__ = False  # not a pytest class

    def __call__(self, lam):
        if self.vectorized is not None:
            return self.vectorized(lam)
        return np.array([self.scalar(v) for v in np.ravel(lam)])


TEST_FUNCTIONS = {"entropy": TestFunction("entropy", phi_entropy, _phi_entropy_vec)}


def register_test_function(tag, scalar, vectorized=None):
    """Make another test function selectable by ``tag`` (it must satisfy phi(0) = 0)."""
    if scalar(0.0) != 0.0:
        raise ValueError("test functions must map 0 to 0")
    TEST_FUNCTIONS[tag] = TestFunction(tag, scalar, vectorized)
    return TEST_FUNCTIONS[tag]


def get_test_function(tag):
    try:
        return TEST_FUNCTIONS[tag]
    except KeyError:
        raise ValueError(f"unknown test function {tag!r}; known: {sorted(TEST_FUNCTIONS)}") from None


def n_phi(features, phi="entropy"):
    """Sum of phi(|f_r|) over the entries whose magnitude strictly exceeds the median magnitude."""
    if isinstance(phi, str):
        phi = get_test_function(phi)
    mags = np.abs(np.asarray(features, dtype=np.float64))
    if mags.size == 0:
        raise ValueError("features must be non-empty")
    above = mags[mags > np.median(mags)]
    if above.size == 0:
        return 0.0
    return float(np.sum(phi(above)))


def average_index(values):
    values = list(values)
    if not values:
        raise ValueError("cannot average an empty list of indices")
    return math.fsum(values) / len(values)


def standardize_series(values):
    """Center and scale by the sample standard deviation (n - 1 denominator)."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise DegenerateSeriesError("standardization needs at least two values")
    sd = x.std(ddof=1)
    if not sd > 0.0 or not np.isfinite(sd):
        raise DegenerateSeriesError("series has zero sample deviation")
    return (x - x.mean()) / sd


def t_pvalue(t, df):
    """Upper-tail probability ``P(T_df > |t|)`` via the regularized incomplete beta function."""
    if df < 1:
        raise ValueError("degrees of freedom must be at least 1")
    t = abs(float(t))
    if t == 0.0:
        return 0.5
    a = 0.5 * df
    t2 = t * t
    x = df / (df + t2)
    if x < (a + 1.0) / (a + 2.5):
        return 0.5 * kernels.betainc(a, 0.5, x)
    # near the center: take the complement with 1 - x formed exactly
    return 0.5 - 0.5 * kernels.betainc(0.5, a, t2 / (df + t2))


def t_critical(p, df):
    """Upper-tail critical value: the t with ``t_pvalue(t, df) == p`` (bisection)."""
    if not 0.0 < p < 0.5:
        raise ValueError("tail probability must lie in (0, 0.5)")
    lo, hi = 0.0, 1.0
    while t_pvalue(hi, df) > p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_pvalue(mid, df) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def confidence_interval(confidence, df, count):
    """Interval ``[-t_{alpha/2} / sqrt(count), +t_{alpha/2} / sqrt(count)]`` for a standardized series.

    Reported alongside an assessment; risk grading uses per-point p-values.
    """
    alpha = 1.0 - confidence
    half = t_critical(alpha / 2.0, df) / math.sqrt(count)
    return -half, half


def classify_risk(p):
    if p < EMERGENCY_P:
        return RiskLevel.EMERGENCY
    if p < HIGH_RISK_P:
        return RiskLevel.HIGH_RISK
    if p < PREVENTIVE_P:
        return RiskLevel.PREVENTIVE
    return RiskLevel.NORMAL


@dataclass
class IndexSeries:
    feeder_id: str
    end_ticks: list
    n_phi: list
    standardized: list
    p_values: list
    risk_levels: list
    degrees_of_freedom: int


def assess_series(feeder_id, values, end_ticks, N_s=None):
    """Standardize segment indices, attach one-sided t p-values (df = count - 1) and grade them.

    ``N_s`` is accepted for symmetry with the segmenting step; the series
    length already equals the number of segments.
    """
    values = [float(v) for v in values]
    end_ticks = [int(t) for t in end_ticks]
    if len(values) != len(end_ticks):
        raise ValueError("one end tick is needed per index value")
    z = standardize_series(values)
    df = len(values) - 1
    p = [t_pvalue(v, df) for v in z]
    return IndexSeries(
        feeder_id=feeder_id,
        end_ticks=end_ticks,
        n_phi=values,
        standardized=[float(v) for v in z],
        p_values=p,
        risk_levels=[classify_risk(v) for v in p],
        degrees_of_freedom=df,
    )
