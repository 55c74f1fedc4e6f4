import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import special

from univsparse import specfun
from univsparse.errors import DomainError
from univsparse.specfun import BetaParams


def mp_ibeta(a, b, x):
    return float(mpmath.betainc(a, b, 0, x, regularized=True))


shapes = st.floats(min_value=0.05, max_value=60.0)
unit = st.floats(min_value=0.0, max_value=1.0)


@pytest.mark.parametrize(
    "a, b, x, want",
    [
        (1.0, 1.0, 0.37, 0.37),
        (0.5, 0.5, 0.25, 1.0 / 3.0),
        (2.0, 0.5, 0.1, 0.75 * (4.0 / 3.0 - 2.0 * math.sqrt(0.9) + 2.0 / 3.0 * 0.9 ** 1.5)),
    ],
)
def test_reg_inc_beta_examples(a, b, x, want):
    assert specfun.reg_inc_beta(a, b, x) == pytest.approx(want, abs=1e-12)
    assert specfun.reg_inc_beta(BetaParams(a, b, x)) == pytest.approx(want, abs=1e-12)


def test_reg_inc_beta_third_example_digits():
    assert specfun.reg_inc_beta(2.0, 0.5, 0.1) == pytest.approx(0.0038825, abs=5e-8)


def test_endpoints_are_exact():
    assert specfun.reg_inc_beta(3.0, 0.7, 0.0) == 0.0
    assert specfun.reg_inc_beta(3.0, 0.7, 1.0) == 1.0
    assert specfun.log_reg_inc_beta(3.0, 0.7, 0.0) == -math.inf


@pytest.mark.parametrize("bad", [(0.0, 1.0, 0.5), (1.0, -1.0, 0.5), (1.0, 1.0, 1.5), (1.0, 1.0, -0.1)])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        specfun.reg_inc_beta(*bad)
    with pytest.raises(DomainError):
        BetaParams(*bad)


@pytest.mark.parametrize(
    "a, b, x",
    [(800.0, 0.5, 0.1), (4999.5, 0.5, 0.25), (0.5, 2.0, 0.999), (30.0, 40.0, 0.43), (1e-3, 5.0, 0.2)],
)
def test_against_mpmath(a, b, x):
    assert specfun.reg_inc_beta(a, b, x) == pytest.approx(mp_ibeta(a, b, x), rel=1e-11, abs=1e-300)


def test_log_domain_survives_underflow():
    # I_{0.01}(5000, 1/2) is ~1e-10000, far below the double range
    got = specfun.log_reg_inc_beta(5000.0, 0.5, 0.01)
    want = float(mpmath.log(mpmath.betainc(5000, 0.5, 0, 0.01, regularized=True)))
    assert got == pytest.approx(want, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(shapes, shapes, unit)
def test_matches_scipy_and_reflection(a, b, x):
    # the reflection needs 1 - x to be exact in double precision
    assume(1.0 - (1.0 - x) == x)
    v = specfun.reg_inc_beta(a, b, x)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(special.betainc(a, b, x), abs=1e-12)
    assert v + specfun.reg_inc_beta(b, a, 1.0 - x) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(shapes, shapes, unit, unit)
def test_monotone_in_x(a, b, x1, x2):
    lo, hi = sorted((x1, x2))
    assert specfun.reg_inc_beta(a, b, lo) <= specfun.reg_inc_beta(a, b, hi) + 1e-15


@pytest.mark.parametrize("a, b, p, want", [(3.0, 3.0, 0.5, 0.5), (0.5, 0.5, 1.0 / 3.0, 0.25), (1.0, 4.0, 0.9999, 0.9)])
def test_inverse_examples(a, b, p, want):
    assert specfun.reg_inc_beta_inv(a, b, p) == pytest.approx(want, abs=1e-9)


@settings(max_examples=150, deadline=None)
@given(shapes, shapes, st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_inverse_round_trip(a, b, p):
    x = specfun.reg_inc_beta_inv(a, b, p)
    if abs(specfun.reg_inc_beta(a, b, x) - p) <= 1e-10:
        return
    # where the CDF jumps by more than the tolerance between adjacent doubles,
    # the answer must be the double that brackets p
    below = specfun.reg_inc_beta(a, b, float(np.nextafter(x, 0.0)))
    above = specfun.reg_inc_beta(a, b, float(np.nextafter(x, 1.0)))
    assert below <= p <= above


def test_inverse_monotone_in_p():
    xs = [specfun.reg_inc_beta_inv(0.5, 2.0, p) for p in np.linspace(0.0, 1.0, 41)]
    assert all(b >= a for a, b in zip(xs, xs[1:]))


def test_beta_pdf_matches_scipy():
    for a, b, x in [(0.5, 2.0, 0.3), (3.0, 4.0, 0.7), (1.0, 1.0, 0.2)]:
        assert specfun.beta_pdf(a, b, x) == pytest.approx(special.beta(a, b) ** -1 * x ** (a - 1) * (1 - x) ** (b - 1))
    assert specfun.beta_pdf(0.5, 2.0, 0.0) == math.inf
    assert specfun.beta_pdf(2.0, 3.0, 1.0) == 0.0


@pytest.mark.parametrize(
    "a, b, x, want",
    [(1.0, 1.0, 0.6, 0.6), (0.5, 0.5, 0.25, 0.29464), (2.0, 0.5, 0.1, 0.0036935)],
)
def test_beta_lower_bound_examples(a, b, x, want):
    got = specfun.beta_lower_bound(a, b, x)
    assert got == pytest.approx(want, rel=2e-5)
    assert got <= specfun.reg_inc_beta(a, b, x)


def test_beta_lower_bound_rejects_b_above_one():
    with pytest.raises(DomainError):
        specfun.beta_lower_bound(2.0, 1.5, 0.3)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=0.1, max_value=50.0), st.floats(min_value=1e-3, max_value=1.0), unit)
def test_beta_lower_bound_is_a_lower_bound(a, b, x):
    lb = specfun.log_beta_lower_bound(a, b, x)
    exact = specfun.log_reg_inc_beta(a, b, x)
    if x == 0.0:
        assert lb == exact == -math.inf
    else:
        assert lb <= exact + 1e-12 * max(1.0, abs(exact))


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.1, max_value=50.0), unit)
def test_beta_lower_bound_exact_at_b_one(a, x):
    assert specfun.beta_lower_bound(a, 1.0, x) == pytest.approx(x ** a, rel=1e-13, abs=1e-300)


def test_cap_tightness_at_large_d():
    lo, ours, up = specfun.cap_bounds_frankl(10_000, 0.5, log=True)
    assert math.exp(ours - up) == pytest.approx(0.99992, abs=1e-5)


def test_half_cap_closed_form():
    assert specfun.half_cap_area(3, 0.6) == pytest.approx(0.5 * (1 - math.sqrt(1 - 0.36)), abs=1e-14)


def test_cap_bounds_near_hemisphere():
    lo, ours, up = specfun.cap_bounds_frankl(2, 1 - 1e-9)
    assert lo == 0.0
    assert ours <= 0.5


@pytest.mark.parametrize("d", [3, 5, 10, 40, 100, 1000, 10_000])
@pytest.mark.parametrize("eps", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_cap_bound_ordering(d, eps):
    lo, ours, up = specfun.cap_bounds_frankl(d, eps, log=True)
    area = specfun.half_cap_area(d, eps, log=True)
    assert lo <= ours + 1e-12
    assert ours <= area + 1e-12
    assert area <= up + 1e-12


def test_entropy_and_kl_examples():
    assert specfun.bernoulli_entropy(0.5) == pytest.approx(math.log(2))
    assert specfun.bernoulli_entropy(0.0) == 0.0
    assert specfun.bernoulli_entropy(0.1) == pytest.approx(0.325083, abs=1e-6)
    assert specfun.bernoulli_kl(0.3, 0.3) == 0.0
    assert specfun.bernoulli_kl(0.8, 0.1) == pytest.approx(1.3627377, abs=1e-7)
    assert specfun.bernoulli_kl(0.0, 0.5) == pytest.approx(math.log(2))
    with pytest.raises(DomainError):
        specfun.bernoulli_kl(0.5, 0.0)


@given(unit, st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_kl_nonnegative_and_entropy_symmetric(a, b):
    assert specfun.bernoulli_kl(a, b) >= -1e-15
    assert specfun.bernoulli_entropy(a) == pytest.approx(specfun.bernoulli_entropy(1.0 - a), abs=1e-15)


def _mp_h(x):
    lx = mpmath.log(x)
    return float((1 + 2 / lx) * (1 + mpmath.log(lx) / lx + mpmath.sqrt(mpmath.e) / (x * lx)))


@pytest.mark.parametrize("x", [3.0, 5.0, 1e6])
def test_covering_h_matches_formula(x):
    assert specfun.covering_h(x) == pytest.approx(_mp_h(x), rel=1e-13)


def test_covering_h_decreasing_towards_one():
    xs = np.geomspace(3, 1e12, 60)
    hs = [specfun.covering_h(float(x)) for x in xs]
    assert all(b < a for a, b in zip(hs, hs[1:]))
    assert 1.0 < hs[-1] < 1.25
    with pytest.raises(DomainError):
        specfun.covering_h(2.9)


def test_dasgupta_examples():
    v = specfun.dasgupta_tail(10, 2, 4.5)
    assert v == pytest.approx(0.00109863, rel=1e-5)
    assert 1e-4 <= v
    assert v == pytest.approx(math.exp(-5 * specfun.bernoulli_kl(0.8, 0.1)), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=3, max_value=200), st.floats(min_value=0.01, max_value=0.999))
def test_dasgupta_dominates_beta_survival_k2(d, frac):
    # k = 2 gives L ~ Beta(1, (d-2)/2) whose survival is (1 - t)^((d-2)/2)
    beta = 1.0 + frac * (d / 2.0 - 1.0)
    t = beta * 2 / d
    survival = (1.0 - t) ** ((d - 2) / 2.0)
    assert survival <= specfun.dasgupta_tail(d, 2, beta) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=4, max_value=5000), st.floats(min_value=0.05, max_value=0.95),
       st.floats(min_value=0.01, max_value=0.99))
def test_dasgupta_kl_identity(d, s, e2):
    k = max(1, round(s * d))
    if k >= d or e2 >= 1 - k / d:
        return
    beta = (1.0 - e2) * d / k
    if beta <= 1:
        return
    lhs = specfun.dasgupta_tail(d, k, beta, log=True)
    rhs = -(d / 2.0) * specfun.bernoulli_kl(1.0 - k / d, e2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
