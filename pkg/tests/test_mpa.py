import numpy as np
import pytest

from openkpz.asep_model import AsepParams, liggett_params, stationary_exact, weak_asymmetry_params
from openkpz.askey_wilson import AwProcessSpec, aw_polynomials
from openkpz.errors import ConditionFailed, DomainError
from openkpz.mpa import (
    DehpRep, dehp_residuals, jacobi_at, mpa_measure, mpa_sample, mpa_weight,
    scalar_condition_residual, scalar_dehp_rep, scalar_rep, usw_rep,
)

BERN = AsepParams(0.5, 0.4, 0.6, 0.3, 0.2, 2)


def test_scalar_worked_example():
    assert scalar_condition_residual(BERN) == pytest.approx(0.0, abs=1e-15)
    d, e = scalar_rep(BERN)
    assert d == pytest.approx(10 / 3) and e == pytest.approx(5.0)
    assert d * e * 0.5 == pytest.approx(d + e)


def test_scalar_tasep():
    d, e = scalar_rep(AsepParams(0.0, 0.3, 0.7, 0.0, 0.0, 3))
    assert d == pytest.approx(1 / 0.7) and e == pytest.approx(1 / 0.3)


def test_scalar_condition_fails_off_manifold():
    p = AsepParams(0.5, 0.41, 0.6, 0.3, 0.2, 2)
    with pytest.raises(ConditionFailed) as exc:
        scalar_rep(p)
    assert exc.value.residual != 0


def test_residuals():
    assert dehp_residuals(scalar_dehp_rep(BERN)).max < 1e-12
    eye = np.eye(3)
    bad = DehpRep("tridiagonal", eye, eye, np.eye(3)[0], np.eye(3)[0], 0.5, BERN)
    assert dehp_residuals(bad).bulk == pytest.approx(1.5)


def test_scalar_measure():
    rep = scalar_dehp_rep(BERN)
    assert mpa_weight(rep, [1, 0]) == pytest.approx(50 / 3)
    tab = mpa_measure(rep, 2)
    assert tab.probabilities[0b10] == pytest.approx(0.24, abs=1e-12)
    assert mpa_measure(rep, 0) == 1.0


@pytest.mark.parametrize("M", [6, 12])
def test_usw_residuals(M):
    rep = usw_rep(liggett_params(0.5, 0.4, 0.4, 4), M)
    assert dehp_residuals(rep).max < 1e-10
    rep = usw_rep(AsepParams(0.5, 0.7, 0.7, 0.15, 0.15, 4), M)
    assert dehp_residuals(rep).max < 1e-10


def test_usw_matches_exact():
    p = liggett_params(0.5, 0.7, 0.3, 6)  # alpha=0.7, beta=0.7, gamma=delta=0.15
    assert (p.gamma, p.delta) == pytest.approx((0.15, 0.15))
    rep = usw_rep(p, 10)
    for N in range(1, 7):
        assert mpa_measure(rep, N).total_variation(stationary_exact(p.with_sites(N))) < 1e-8


def test_truncation_guard():
    rep = usw_rep(liggett_params(0.5, 0.7, 0.3, 6), 5)
    with pytest.raises(DomainError):
        mpa_measure(rep, 4)


def test_sampler_matches_exact():
    p = liggett_params(0.5, 0.7, 0.3, 5)
    rep = usw_rep(p, 8)
    draws = mpa_sample(rep, 5, 40000, seed=3)
    idx = draws @ (1 << np.arange(4, -1, -1))
    emp = np.bincount(idx, minlength=32) / draws.shape[0]
    exact = stationary_exact(p).probabilities
    assert 0.5 * np.abs(emp - exact).sum() < 0.03
    assert np.array_equal(draws, mpa_sample(rep, 5, 40000, seed=3))


def test_jacobi_cross_check():
    """Stieltjes coefficients of the marginal law against the matrices t x + y."""
    p = weak_asymmetry_params(16, 1.0, 1.0)
    M = 12
    rep = usw_rep(p, M)
    spec = AwProcessSpec.from_asep(p)
    n = M - 3
    for t in (0.8, 1.25):
        J = jacobi_at(rep, t)
        sysm = aw_polynomials(spec, t, n)
        # diagonal and off-diagonal products do not depend on the gauge
        assert np.allclose(sysm.diag[:n], np.diag(J)[:n], atol=1e-8)
        offp = np.diag(J, 1)[:n - 1] * np.diag(J, -1)[:n - 1]
        assert np.allclose(sysm.prod[1:n], offp, atol=1e-8)
