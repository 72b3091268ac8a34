import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openkpz.errors import DomainError, PoleError
from openkpz import qspecial as qs

# reference values computed with mpmath at 50 digits, q = exp(-eps)
QGAMMA_REF = {
    (0.5, 0.1): 1.739892376799952,
    (1.5, 0.1): 0.89169031327270008,
    (3.0, 0.1): 1.9048374180359596,
    (0.5, 0.025): 1.7641878867756764,
    (1.5, 0.025): 0.88760695875014492,
    (3.0, 0.025): 1.9753099120283327,
}


def test_pochhammer_simple_products():
    assert qs.q_pochhammer(0.5, 0.0) == pytest.approx(0.5)
    # (a;q)_inf = (1-a)(aq;q)_inf
    a, q = 0.3 + 0.2j, 0.6
    assert qs.q_pochhammer(a, q) == pytest.approx((1 - a) * qs.q_pochhammer(a * q, q), rel=1e-14)


def test_pochhammer_euler_identity():
    # sum_n z^n/(q;q)_n = 1/(z;q)_inf
    q, z = 0.4, 0.3
    s, poch = 0.0, 1.0
    for n in range(80):
        s += z ** n / poch
        poch *= 1 - q ** (n + 1)
    assert 1.0 / qs.q_pochhammer(z, q) == pytest.approx(s, rel=1e-14)


def test_pochhammer_array_and_log_branch():
    a = np.array([0.1, -0.5, 0.9 + 0.3j])
    v = qs.q_pochhammer(a, 0.7)
    assert v.shape == (3,)
    assert np.allclose(np.exp(qs.log_q_pochhammer(a, 0.7)), v, rtol=1e-13)


@pytest.mark.parametrize("q", [-0.1, 1.0, 1.5])
def test_pochhammer_rejects_bad_q(q):
    with pytest.raises(DomainError):
        qs.q_pochhammer(0.5, q)


@pytest.mark.parametrize("key", sorted(QGAMMA_REF))
def test_q_gamma_reference(key):
    z, eps = key
    val = qs.q_gamma(z, math.exp(-eps))
    assert val.real == pytest.approx(QGAMMA_REF[key], rel=1e-13)
    assert abs(val.imag) < 1e-14


def test_q_gamma_pole():
    with pytest.raises(PoleError):
        qs.q_gamma(-2, 0.5)
    with pytest.raises(DomainError):
        qs.q_gamma(0.5, 1.0)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.2, 4.0), y=st.floats(-3.0, 3.0), q=st.floats(0.05, 0.95))
def test_q_gamma_recurrence(x, y, q):
    z = complex(x, y)
    lhs = qs.q_gamma(z + 1, q)
    rhs = (1 - q ** z) / (1 - q) * qs.q_gamma(z, q)
    assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.2, 6.0), y=st.floats(-8.0, 8.0))
def test_log_gamma_conjugate_symmetry(x, y):
    z = complex(x, y)
    a = qs.complex_log_gamma(z)
    b = qs.complex_log_gamma(z.conjugate())
    assert a.real == pytest.approx(b.real, abs=1e-12)


def test_log_gamma_matches_math():
    for x in (0.3, 1.0, 2.5, 7.0, 30.0):
        assert qs.complex_log_gamma(x).real == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-14)
    # |Gamma(iy)|^2 = pi / (y sinh(pi y))
    y = 1.3
    assert qs.abs_gamma_sq(1j * y) == pytest.approx(math.pi / (y * math.sinh(math.pi * y)), rel=1e-12)


def test_bernoulli():
    from fractions import Fraction
    assert [qs.bernoulli_number(n) for n in range(5)] == [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30)]
    # B_2(z) = z^2 - z + 1/6
    assert qs.bernoulli_polynomial(2, 0.3) == pytest.approx(0.09 - 0.3 + 1 / 6)


def test_expansion_small_residual_double():
    r = qs.log_poch_expansion(0.5, 0.1, 2)
    assert r.residual < 1e-12
    assert len(r.bernoulli_terms) == 2


def test_expansion_resolved_precision():
    r = qs.log_poch_expansion(1.0, 0.1, 1, dps=200)
    # the true error at z = 1 is exponentially small in 1/eps
    assert 0 < r.residual < 1e-150


def test_expansion_domain():
    with pytest.raises(DomainError):
        qs.log_poch_expansion(-1.0, 0.1, 1)
    with pytest.raises(DomainError):
        qs.log_poch_expansion(1.0, 0.1, 0)
    with pytest.raises(DomainError):
        qs.fit_envelope([(1.0, 0.1)], [1e-3], 1, 0.25, 1.5)


def test_envelope_grid_rejects_large_imag():
    with pytest.raises(DomainError):
        qs.envelope_check([(1 + 60j, 0.1)], 1, 0.25, 0.5)


def test_bessel_k_iu_reference():
    assert qs.bessel_k_iu(1.0, 1.0) == pytest.approx(0.28942803702599213, rel=1e-11)
    assert qs.bessel_k_iu(1.5, 0.3) == pytest.approx(0.084700671760827077, rel=1e-10)
    # u = 0 reduces to K_0
    assert qs.bessel_k_iu(0.0, 1.0) == pytest.approx(0.4210244382407084, rel=1e-12)


def test_qseries_point_consistency():
    qs.QSeriesPoint(0.5, math.exp(-0.2), epsilon=0.2)
    with pytest.raises(DomainError):
        qs.QSeriesPoint(0.5, 0.5, epsilon=0.2)
