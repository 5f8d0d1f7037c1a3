import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aecal.errors import DomainError
from aecal.physics import TITANIUM
from aecal.radiation import (
    J1_ZEROS, PatternQuery, aperture, compare_cosine, directivity,
    lobe_zeros, pattern, tang_pattern,
)

# mpmath.besseljzero(1, k)
J1_ORACLE = (3.83170597020751, 7.01558666981562, 10.1734681350627, 13.3236919363142)
THETA = np.linspace(0, math.radians(89), 400)


def test_zero_table_matches_oracle():
    np.testing.assert_allclose(J1_ZEROS[:4], J1_ORACLE, atol=1e-9)


def test_normal_incidence_is_one():
    for f in (1e4, 4e5, 3e6):
        assert tang_pattern(PatternQuery(0.0, f)) == pytest.approx(1.0, abs=1e-15)


def test_aperture_small_argument_continuous():
    x = np.array([0.0, 1e-7, 2e-6, 1e-3])
    from scipy.special import j1
    exact = np.where(x == 0, 1.0, 2 * j1(np.where(x == 0, 1, x)) / np.where(x == 0, 1, x))
    np.testing.assert_allclose(aperture(x), exact, rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.5), st.floats(1e4, 3e6))
def test_pattern_even_in_theta(theta, f):
    # the pattern is a function of sin^2 and cos of the incidence angle
    k = 2 * math.pi * f / TITANIUM.vp
    neg = aperture(-k * 5e-3 * math.sin(theta)) * directivity(theta, TITANIUM.vs / TITANIUM.vp)[0]
    assert float(abs(neg)) == pytest.approx(float(pattern(theta, f)[0]), rel=1e-14, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.5), st.floats(1e4, 2e6), st.floats(0.2, 5.0))
def test_pattern_scaling_invariance(theta, f, beta):
    a = pattern(theta, f, 5e-3)[0]
    b = pattern(theta, beta * f, 5e-3 / beta)[0]
    assert float(b) == pytest.approx(float(a), rel=1e-9, abs=1e-15)


def test_lobe_zeros_match_j1():
    for f in (2e6, 3e6, 5e6):
        zeros = lobe_zeros(f)
        k = 2 * math.pi * f / TITANIUM.vp
        x = k * 5e-3 * np.sin(zeros)
        assert len(x) >= 2
        n = min(len(x), 4)
        np.testing.assert_allclose(x[:n], J1_ORACLE[:n], rtol=0, atol=1e-6)
        # the rest against the tabulated values
        np.testing.assert_allclose(x[4:5], J1_ZEROS[4:len(x)], rtol=0, atol=1e-6)


def test_no_zeros_at_low_frequency():
    # k R_s < 3.83: the main lobe never closes
    assert lobe_zeros(1e5).size == 0


def test_deviation_ordering():
    dev = compare_cosine([1e5, 4e5, 7e5, 1e6], THETA)
    assert dev[0] < dev[2] < dev[3]
    assert np.all(np.diff(dev) > 0)
    assert dev[0] < 0.15


def test_deviation_zero_on_normal_grid():
    np.testing.assert_array_equal(compare_cosine([1e5, 1e6], [0.0]), [0.0, 0.0])


def test_directivity_never_singular_for_real_solids():
    for nu in (0.0, 0.25, 0.34, 0.49):
        kappa = math.sqrt((1 - 2 * nu) / (2 * (1 - nu)))
        _, sing = directivity(np.linspace(0, math.pi / 2 - 1e-9, 2000), kappa)
        assert not sing.any()


def test_directivity_denominator_positive_for_any_ratio():
    theta = np.linspace(0, math.pi / 2 - 1e-6, 5001)
    for kappa in np.linspace(0.05, 2.0, 40):
        _, sing = directivity(theta, kappa)
        assert not sing.any()


def test_regular_query_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tang_pattern(PatternQuery(0.6, 4e5))


@pytest.mark.parametrize("kw", [dict(theta=-0.1, frequency=1e5), dict(theta=math.pi / 2, frequency=1e5),
                                dict(theta=0.1, frequency=0.0), dict(theta=0.1, frequency=1e5, sensor_radius=0)])
def test_query_validation(kw):
    with pytest.raises(DomainError):
        PatternQuery(**kw)


def test_compare_cosine_empty_grid():
    with pytest.raises(DomainError):
        compare_cosine([], THETA)
