"""Gauss-Legendre rules: fixed, composite and globally adaptive."""
from functools import lru_cache
import heapq

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Nodes and weights of the n-point rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(breaks, order=16):
    """Composite Gauss-Legendre nodes/weights over consecutive ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    left, right = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (right - left)
    nodes = (left + right) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def _panel(f, a, b, order):
    x, w = gauss_legendre(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * np.dot(w, f(mid + half * x))


def adaptive_quad(f, a, b, tol=1e-12, order=16, max_panels=20000, initial_panels=8):
    """Globally adaptive Gauss-Legendre quadrature of a vectorized ``f`` over [a, b].

    Each panel is compared with its two halves; the panel with the largest
    discrepancy is split until the summed discrepancy falls below ``tol``.
    Returns ``(value, error_estimate)``. Works for complex-valued ``f``.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    heap = []
    total = 0.0
    err_total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        coarse = _panel(f, lo, hi, order)
        mid = 0.5 * (lo + hi)
        fine = _panel(f, lo, mid, order) + _panel(f, mid, hi, order)
        err = abs(fine - coarse)
        heapq.heappush(heap, (-err, lo, hi, fine))
        total += fine
        err_total += err
    n_panels = initial_panels
    while err_total > tol and n_panels < max_panels:
        neg_err, lo, hi, fine = heapq.heappop(heap)
        total -= fine
        err_total += neg_err
        mid = 0.5 * (lo + hi)
        for l2, h2 in ((lo, mid), (mid, hi)):
            coarse = _panel(f, l2, h2, order)
            m2 = 0.5 * (l2 + h2)
            fine2 = _panel(f, l2, m2, order) + _panel(f, m2, h2, order)
            err = abs(fine2 - coarse)
            heapq.heappush(heap, (-err, l2, h2, fine2))
            total += fine2
            err_total += err
        n_panels += 1
    # recompute the sums to shed accumulated cancellation from the running totals
    total = sum(item[3] for item in heap)
    err_total = sum(-item[0] for item in heap)
    return total, err_total
