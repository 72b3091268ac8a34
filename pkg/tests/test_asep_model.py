import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openkpz.asep_model import (
    AsepParams, BoundaryRoots, Phase, Region, bond_currents, check_liggett, classify_phase,
    generating_function_exact, generator_matrix, kappa_roots, liggett_params, particle_hole,
    particle_hole_table, product_bernoulli, roots_bijection, roots_inverse, stationary_current,
    stationary_exact, weak_asymmetry_params,
)
from openkpz.errors import DomainError

BERN = dict(q=0.5, alpha=0.4, beta=0.6, gamma=0.3, delta=0.2)


def bern(N):
    return AsepParams(n_sites=N, **BERN)


def test_params_validation():
    with pytest.raises(DomainError):
        AsepParams(1.0, 0.5, 0.5, 0, 0, 3)
    with pytest.raises(DomainError):
        AsepParams(0.5, 0.0, 0.5, 0, 0, 3)
    with pytest.raises(DomainError):
        AsepParams(0.5, 0.5, 0.5, -0.1, 0, 3)
    with pytest.raises(DomainError):
        AsepParams(0.5, 0.5, 0.5, 0, 0, 0)


def test_kappa_roots_hand_values():
    kp, km = kappa_roots(0.5, 0.4, 0.3)
    assert kp == pytest.approx(1.5, abs=1e-14)
    assert km == pytest.approx(-0.5, abs=1e-14)
    assert kappa_roots(0.5, 0.4, 0.0)[1] == 0.0


@settings(max_examples=80, deadline=None)
@given(q=st.floats(0.0, 0.95), x=st.floats(0.01, 3.0), y=st.floats(0.0, 3.0))
def test_kappa_vieta(q, x, y):
    kp, km = kappa_roots(q, x, y)
    assert kp * km == pytest.approx(-y / x, rel=1e-10, abs=1e-14)
    for k in (kp, km):
        assert abs(x * k * k - (1 - q - x + y) * k - y) < 1e-10 * (1 + abs(k)) ** 2


def test_roots_bijection_example():
    r = roots_bijection(bern(3))
    assert (r.A, r.B, r.C, r.D) == pytest.approx((2 / 3, -0.5, 1.5, -0.5), abs=1e-14)
    assert r.rho_left == pytest.approx(0.4)
    assert r.rho_right == pytest.approx(0.4)
    back = roots_inverse(r, 0.5, 3)
    for k, v in BERN.items():
        assert getattr(back, k) == pytest.approx(v, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(q=st.floats(0.0, 0.9), a=st.floats(0.05, 2.0), b=st.floats(0.05, 2.0),
       g=st.floats(0.0, 1.0), d=st.floats(0.0, 1.0))
def test_roots_round_trip(q, a, b, g, d):
    p = AsepParams(q, a, b, g, d, 4)
    back = roots_inverse(roots_bijection(p), q, 4)
    for k in ("alpha", "beta", "gamma", "delta"):
        assert getattr(back, k) == pytest.approx(getattr(p, k), rel=1e-9, abs=1e-12)


def test_bad_roots():
    with pytest.raises(DomainError):
        BoundaryRoots(1.0, -1.0, 1.0, 0.0)


@pytest.mark.parametrize("rl,rr,phase,region,J", [
    (0.6, 0.3, Phase.MAXIMAL_CURRENT, Region.FAN, 0.25),
    (0.3, 0.4, Phase.LOW_DENSITY, Region.SHOCK, 0.21),
    (0.5, 0.5, Phase.TRIPLE_POINT, Region.LINE, 0.25),
    (0.7, 0.8, Phase.HIGH_DENSITY, Region.SHOCK, 0.16),
    (0.3, 0.7, Phase.COEXISTENCE_LINE, Region.SHOCK, 0.21),
])
def test_classify_phase(rl, rr, phase, region, J):
    c = classify_phase(rl, rr)
    assert c.phase == phase and c.region == region
    assert c.current_limit_J == pytest.approx(J)


@settings(max_examples=80, deadline=None)
@given(q=st.floats(0.05, 0.9), rl=st.floats(0.02, 0.98), rr=st.floats(0.02, 0.98))
def test_fan_iff_ac_below_one(q, rl, rr):
    if abs(rl - rr) < 1e-6:
        return
    r = roots_bijection(liggett_params(q, rl, rr, 3))
    fan = classify_phase(rl, rr).region == Region.FAN
    assert fan == (r.A * r.C < 1)


def test_stationary_small_examples():
    t1 = stationary_exact(bern(1))
    assert t1.probabilities[1] == pytest.approx(0.4, abs=1e-14)
    t2 = stationary_exact(bern(2))
    assert t2.probabilities[0b10] == pytest.approx(0.24, abs=1e-14)
    assert t2.total_variation(product_bernoulli(2, 0.4)) < 1e-14
    assert t2.state_bits() == ["00", "01", "10", "11"]


def test_stationary_tasep_single_site():
    p = AsepParams(0.0, 0.3, 0.7, 0.0, 0.0, 1)
    assert stationary_exact(p).probabilities[1] == pytest.approx(0.3)


def test_dense_and_sparse_agree():
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 7)
    a = stationary_exact(p, method="dense")
    b = stationary_exact(p, method="sparse")
    assert a.total_variation(b) < 1e-12
    assert a.residual < 1e-13


def test_generator_rows_sum_to_zero():
    Q = generator_matrix(AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 5), sparse=False)
    assert np.abs(Q.sum(axis=1)).max() < 1e-14


def test_particle_hole():
    p = AsepParams(0.4, 0.7, 0.3, 0.2, 0.05, 5)
    lhs = stationary_exact(particle_hole(p))
    rhs = particle_hole_table(stationary_exact(p))
    assert lhs.total_variation(rhs) < 1e-12


def test_currents():
    p = bern(2)
    t = stationary_exact(p)
    assert stationary_current(t, p) == pytest.approx(0.24, abs=1e-12)
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 6)
    bc = bond_currents(stationary_exact(p), p)
    assert np.ptp(bc) < 1e-10
    for N in (1, 3, 7):
        pp = liggett_params(0.6, 0.5, 0.5, N)
        assert stationary_current(stationary_exact(pp), pp) == pytest.approx(0.25, abs=1e-12)


def test_generating_function():
    t = stationary_exact(bern(2))
    assert generating_function_exact(t, [1.0, 1.0]) == pytest.approx(1.0)
    assert generating_function_exact(t, [2.0, 3.0]) == pytest.approx(2.52, abs=1e-12)
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 4)
    tab = stationary_exact(p)
    assert generating_function_exact(tab, [1.7, 1, 1, 1]) == pytest.approx(
        1 + 0.7 * tab.occupation_means()[0], rel=1e-13)
    with pytest.raises(DomainError):
        generating_function_exact(tab, [1.0, 1.0])


def test_liggett():
    p = liggett_params(0.5, 0.4, 0.4, 3)
    assert (p.alpha, p.gamma, p.beta, p.delta) == pytest.approx((0.4, 0.3, 0.6, 0.2))
    assert check_liggett(p) == pytest.approx((0.0, 0.0), abs=1e-15)
    assert check_liggett(AsepParams(0.5, 0.5, 0.5, 0.5, 0.25, 3))[0] == pytest.approx(0.5)
    # equal densities under Liggett boundaries give a product measure
    p = liggett_params(0.3, 0.35, 0.35, 5)
    assert stationary_exact(p).total_variation(product_bernoulli(5, 0.35)) < 1e-12


def test_weak_asymmetry():
    p = weak_asymmetry_params(4, 0, 0)
    assert p.q == pytest.approx(math.exp(-1))
    assert (p.alpha, p.beta) == pytest.approx((0.5, 0.5))
    assert p.gamma == pytest.approx(p.q / 2) and p.delta == pytest.approx(p.q / 2)
    p = weak_asymmetry_params(4, 1, 0)
    assert p.alpha == pytest.approx(0.75) and 1 - p.beta == pytest.approx(0.5)
    r = roots_bijection(weak_asymmetry_params(16, 1.0, 0.5))
    assert r.A * r.C < 1
    with pytest.raises(DomainError):
        weak_asymmetry_params(4, 2.0, 0.0)
