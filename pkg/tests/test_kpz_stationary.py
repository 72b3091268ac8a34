import math

import numpy as np
import pytest

from openkpz.errors import DomainError
from openkpz.kpz_stationary import (
    BesselPair, BesselSingle, ExpIdentity, LiouvilleEigen, PathGrid, analytic_identity_suite,
    convergence_diag, laplace_height_total, multipoint_laplace_mc, sample_stationary, sandwich_check,
)
from openkpz.stats import weighted_ks

# E[exp(-s h(1))] at (u, v) = (1, 1); mpmath quadrature at 30 digits
LAPLACE_REF = {0.25: 1.0278480228523514, 0.5: 1.1161419514369691, 1.0: 1.5521672618094331}


@pytest.fixture(scope="module")
def ens11():
    return sample_stationary(1.0, 1.0, n_paths=20000, seed=21)


def test_path_grid():
    assert PathGrid(64, 16).x.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(DomainError):
        PathGrid(64, 10)


@pytest.mark.parametrize("s", sorted(LAPLACE_REF))
def test_laplace_reference(s):
    r = laplace_height_total(1.0, 1.0, s)
    assert r.value == pytest.approx(LAPLACE_REF[s], rel=1e-12)
    assert r.quadrature_error_estimate < 1e-9


def test_laplace_limits_and_domain():
    assert laplace_height_total(1.0, 1.0, 1e-6).value == pytest.approx(1.0, abs=1e-5)
    s = np.linspace(0.2, 1.0, 9)
    lv = np.log([laplace_height_total(1.0, 1.0, x).value for x in s])
    assert np.all(np.diff(lv, 2) > 0)
    with pytest.raises(DomainError):
        laplace_height_total(1.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        laplace_height_total(-1.0, 2.0, 0.5)


def test_sampler_laplace(ens11):
    m, se = ens11.laplace(0.5)
    assert abs(m - LAPLACE_REF[0.5]) < 3 * se


def test_sampler_reproducible():
    a = sample_stationary(1.0, 0.5, n_paths=500, seed=4)
    b = sample_stationary(1.0, 0.5, n_paths=5000, seed=4)
    # chunked substreams: the first paths do not depend on n_paths
    assert np.array_equal(a.composed_h, b.composed_h[:500])
    with pytest.raises(DomainError):
        sample_stationary(1.0, -2.0, n_paths=10)
    with pytest.raises(DomainError):
        sample_stationary(1.0, -1.0, n_paths=10, description="BBKW")


def test_zero_sum_boundary_is_brownian():
    ens = sample_stationary(0.7, -0.7, n_paths=20000, seed=2)
    assert np.allclose(ens.weights, 1.0 / ens.n_paths)
    h = ens.h_at(1.0)
    se_m = h.std() / math.sqrt(h.size)
    assert abs(h.mean() - 0.7) < 3 * se_m
    se_v = h.var() * math.sqrt(2.0 / h.size)
    assert abs(h.var() - 1.0) < 3 * se_v


def test_bld_bbkw_agree(ens11):
    other = sample_stationary(1.0, 1.0, n_paths=20000, seed=22, description="BBKW")
    D, crit, ok = weighted_ks(ens11.h_at(1.0), ens11.weights, other.h_at(1.0), other.weights)
    assert ok, (D, crit)


def test_identities():
    r = analytic_identity_suite(ExpIdentity(1.0, 1.0))
    assert r.lhs == pytest.approx(0.5, abs=1e-13) and r.abs_diff < 1e-13
    r = analytic_identity_suite(BesselSingle(0.0, 1.0))
    assert r.lhs == pytest.approx(math.pi / 2, abs=1e-6) and r.abs_diff < 1e-6
    r = analytic_identity_suite(BesselPair(1.0, 1.0, 1.0))
    assert r.rhs == pytest.approx(0.21285464508235188, rel=1e-13)
    assert r.abs_diff < 1e-9
    r = analytic_identity_suite(LiouvilleEigen(1.0, -3.0, 1.0, 1e-3))
    assert r.lhs < 1e-4
    with pytest.raises(DomainError):
        analytic_identity_suite(object())


def test_sandwich(ens11):
    rep = sandwich_check(1.0, 1.0, ensemble=ens11)
    assert rep.passed
    m, _ = ens11.mean(ens11.h_at(1.0))
    assert -1.0 <= m <= 1.0
    flat = sandwich_check(0.5, -0.5, n_paths=5000, seed=1)
    assert flat.passed


def test_convergence_triple_point():
    rows = convergence_diag(0.0, 0.0, N_list=(16, 64, 256))
    ks = [r.ks for r in rows]
    assert ks[0] > ks[1] > ks[2]
    assert [r.source for r in rows] == ["binomial"] * 3


def test_convergence_fan(ens11):
    rows = convergence_diag(1.0, 1.0, N_list=(16, 64, 256), n_paths=20000, ensemble=ens11)
    ks = [r.ks for r in rows]
    assert ks[0] > ks[1] > ks[2]
    for r in rows:
        assert abs(r.asep_mean - r.kpz_mean) < 3 * math.hypot(r.asep_se, r.kpz_se)


def test_multipoint(ens11):
    val, se = multipoint_laplace_mc(1.0, 1.0, [0.5, 1.0], [0.0, 0.0], ens11)
    assert val == pytest.approx(1.0) and se == pytest.approx(0.0, abs=1e-15)
    val, se = multipoint_laplace_mc(1.0, 1.0, [1.0], [0.5], ens11)
    assert abs(val - LAPLACE_REF[0.5]) < 3 * se
    val, se = multipoint_laplace_mc(1.0, 1.0, [0.5, 1.0], [0.2, 0.2], ens11)
    assert val > 0 and se > 0
    with pytest.raises(DomainError):
        multipoint_laplace_mc(2.0, 1.0, [1.0], [0.5], ens11)
