import math

import numpy as np
import pytest
from scipy.special import ndtr

from openkpz.stats import (
    ess, ks_critical, ks_distance, normalize_log_weights, weighted_ecdf, weighted_ks,
    weighted_mean, weighted_var,
)


def test_normalize_and_ess():
    w = normalize_log_weights([0.0, 0.0, 0.0, 0.0])
    assert np.allclose(w, 0.25) and ess(w) == pytest.approx(4.0)
    w = normalize_log_weights([1000.0, 1000.0 + math.log(3)])
    assert w == pytest.approx([0.25, 0.75])
    assert ess(np.array([1.0, 0.0])) == 1.0
    with pytest.raises(FloatingPointError):
        normalize_log_weights([0.0, np.nan])


def test_equal_weight_reductions():
    x = np.array([1.0, 2.0, 4.0, 7.0])
    w = np.full(4, 0.25)
    m, se = weighted_mean(x, w)
    assert m == pytest.approx(3.5)
    assert se == pytest.approx(x.std() / 2)
    v, _ = weighted_var(x, w)
    assert v == pytest.approx(x.var())


def test_ecdf():
    x = np.array([0.0, 1.0, 1.0, 3.0])
    w = np.array([0.1, 0.2, 0.3, 0.4])
    F, se = weighted_ecdf(x, w, [-1.0, 0.0, 1.0, 2.0, 3.0])
    assert np.allclose(F, [0.0, 0.1, 0.6, 0.6, 1.0])
    assert se[0] == 0.0 and se[-1] == 0.0


def test_ks_critical_value():
    assert ks_critical(100, 100) == pytest.approx(1.628 * math.sqrt(0.02))


def test_ks_same_and_shifted():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(5000), rng.standard_normal(5000)
    w = np.full(5000, 1 / 5000)
    assert weighted_ks(a, w, b, w)[2]
    assert not weighted_ks(a, w, b + 0.3, w)[2]


def test_ks_distance_atoms():
    # a point mass at 0 against N(0,1): the jump gives distance 1/2
    assert ks_distance(np.zeros(3), np.full(3, 1 / 3), cdf=ndtr) == pytest.approx(0.5)
    d = ks_distance(np.array([0.0]), np.array([1.0]), np.array([1.0]), np.array([1.0]))
    assert d == pytest.approx(1.0)
