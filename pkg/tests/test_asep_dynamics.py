import math

import numpy as np
import pytest

from openkpz.asep_dynamics import (
    coupled_simulate, empirical_current, height_from_occupation, hopf_cole_field,
    robin_coefficients, scaled_height_stats, she_martingale_residual, simulate,
    stationary_snapshots,
)
from openkpz.asep_model import (
    AsepParams, liggett_params, product_bernoulli, stationary_current, stationary_exact,
)
from openkpz.errors import CouplingViolation, DomainError


def test_height_from_occupation():
    assert height_from_occupation([1, 1, 1]).tolist() == [0, 1, 2, 3]
    assert height_from_occupation([0, 0, 0]).tolist() == [0, -1, -2, -3]
    assert height_from_occupation([1, 0, 1], -2).tolist() == [-2, -1, -2, -1]


def test_no_sources_stays_empty():
    # alpha must be positive, so take it far below 1/horizon
    p = AsepParams(0.5, 1e-300, 1.0, 0.0, 0.0, 4)
    tr = simulate(p, 100.0, seed=1)
    assert tr.final.sum() == 0 and tr.n_events == 0


def test_deterministic_seed():
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 5)
    a = simulate(p, 200.0, seed=9)
    b = simulate(p, 200.0, seed=9)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.final, b.final)
    c = simulate(p, 200.0, seed=10)
    assert not np.array_equal(a.times[:20], c.times[:20])


def test_event_log_replays_final_state():
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 5)
    tr = simulate(p, 300.0, seed=2, snapshot_times=[50.0, 120.0])
    assert np.array_equal(tr.occupation_at(tr.horizon), tr.final)
    assert np.array_equal(tr.occupation_at(120.0), tr.snapshots[1])
    h = tr.height_at(tr.horizon)
    assert h[0] == -2 * tr.final_net_current


def test_empirical_occupation_matches_exact():
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 4)
    tr = simulate(p, 1e5, seed=4, record_events=False, track_states=True)
    emp = tr.state_time / tr.state_time.sum()
    assert stationary_exact(p).total_variation(emp) < 0.02


def test_empirical_current():
    p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 4)
    J = stationary_current(stationary_exact(p), p)
    m, se = empirical_current(p, 20000.0, seed=6, burn_in=50.0)
    assert abs(m - J) < 3 * se


def test_hopf_cole_constants():
    p = liggett_params(0.25, 0.4, 0.5, 3)
    tr = simulate(p, 1.0, seed=0)
    f = hopf_cole_field(tr, 0.5)
    assert f.lam == pytest.approx(-math.log(2))
    assert f.nu == pytest.approx(0.25)
    assert f.mu_left == pytest.approx(1.4)
    p1 = liggett_params(0.25, 0.999999999999, 0.5, 3)
    assert robin_coefficients(p1)[0] == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(DomainError):
        hopf_cole_field(simulate(AsepParams(0.25, 0.4, 0.5, 0.0, 0.0, 3), 1.0, 0), 0.5)


def test_she_martingale_time_zero():
    r = she_martingale_residual(liggett_params(0.5, 0.5, 0.5, 4), 200, 0.0, seed=1)
    assert np.all(r.mean == 0)


def test_she_martingale_mean_zero():
    p = liggett_params(math.exp(-1), 0.5, 0.5, 4)
    r = she_martingale_residual(p, 10000, 1.0, seed=3)
    assert np.all(np.abs(r.z_scores) < 3)
    r2 = she_martingale_residual(p, 20000, 1.0, seed=4)
    ratio = r.stderr / r2.stderr
    assert np.all((ratio > 1.2) & (ratio < 1.7))


def test_she_coefficient_is_sqrt_q():
    # at small q the candidate 1/2 leaves a visible drift while sqrt(q) does not
    p = liggett_params(0.1, 0.5, 0.5, 4)
    good = she_martingale_residual(p, 20000, 1.0, seed=5)
    bad = she_martingale_residual(p, 20000, 1.0, seed=5, coeff=0.5)
    assert np.max(np.abs(good.z_scores)) < 3.5
    assert np.max(np.abs(bad.z_scores)) > 6


def test_coupling_identical_systems():
    p = AsepParams(0.4, 0.6, 0.5, 0.2, 0.1, 5)
    c = coupled_simulate(p, p, 200.0, seed=2)
    assert np.array_equal(c.final[0], c.final[1])
    assert c.violations == 0


def test_coupling_order_and_density():
    p = liggett_params(0.5, 0.3, 0.4, 6)
    pp = liggett_params(0.5, 0.6, 0.5, 6)
    c = coupled_simulate(p, pp, 20000.0, seed=7)
    assert c.violations == 0 and c.n_events > 50000
    assert np.all(c.occupation_time[1] >= c.occupation_time[0])
    with pytest.raises(DomainError):
        coupled_simulate(pp, p, 10.0, seed=1)
    with pytest.raises(DomainError):
        coupled_simulate(p, pp, 10.0, seed=1, initials=([1] * 6, [0] * 6))
    assert issubclass(CouplingViolation, AssertionError)


def test_snapshots_near_stationary():
    p = liggett_params(0.5, 0.5, 0.5, 6)
    snaps = stationary_snapshots(p, 2000, seed=3, burn_in=20.0, spacing=2.0)
    assert snaps.shape == (2000, 6)
    assert abs(snaps.mean() - 0.5) < 0.03


def test_scaled_height_stats():
    zero = scaled_height_stats(np.tile([1, 0], 32)[None, :], 64, min_steps=2)
    assert np.allclose(zero.diff_norms, 0.0)
    rng = np.random.default_rng(0)
    for N in (64, 256):
        samples = (rng.random((4000, N)) < 0.5).astype(np.int8)
        s2 = scaled_height_stats(samples, N, 2)
        s4 = scaled_height_stats(samples, N, 4)
        assert 0.35 <= s2.exponent <= 0.5
        assert np.all(s4.norms >= s2.norms - 1e-12)
    exact = scaled_height_stats(product_bernoulli(8, 0.5), 8, min_steps=1)
    assert np.isfinite(exact.exponent)
