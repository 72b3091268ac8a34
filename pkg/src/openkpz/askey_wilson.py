"""Askey-Wilson measures, their orthogonal polynomials, the Askey-Wilson
Markov process and the generating-function identity for the open ASEP.

Only the absolutely continuous regime (all four parameter moduli below one) is
implemented. Integrals over x in (-1, 1) are taken in the angle variable
x = cos(theta), where the density in theta carries no endpoint singularity.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from . import _kernels
from .asep_model import (AsepParams, generating_function_exact, roots_bijection, roots_inverse,
                         stationary_exact, BoundaryRoots)
from .errors import AtomicRegimeError, DomainError, StieltjesBreakdown
from .mpa import usw_rep
from .quadrature import composite_rule
from .qspecial import pochhammer_terms, log_q_pochhammer
from .streams import substream

__all__ = [
    "AwParams", "AwMeasureEval", "AwProcessSpec", "AwPolynomialSystem", "IdentityCheck",
    "LaplaceCheck", "aw_density", "aw_density_theta", "aw_measure", "aw_marginal",
    "aw_transition", "stieltjes", "aw_polynomials", "martingale_check",
    "multitime_expectation", "asep_aw_identity_check", "height_laplace_aw",
    "identity_refinement", "DEFAULT_PANELS", "DEFAULT_ORDER",
]

DEFAULT_PANELS = 48
DEFAULT_ORDER = 20
POCH_TOL = 1e-14


@dataclass(frozen=True)
class AwParams:
    a: complex
    b: complex
    c: complex
    d: complex
    q: float

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise DomainError(f"q must lie in [0,1), got {self.q}")
        vals = [complex(v) for v in (self.a, self.b, self.c, self.d)]
        for v in vals:
            if abs(v) >= 1.0:
                raise AtomicRegimeError(f"parameter {v} has modulus >= 1; atomic part not supported")
        a, b, c, d = vals
        for u, w in ((a, b), (c, d)):
            if abs(u.imag) > 0 or abs(w.imag) > 0:
                if abs(u - w.conjugate()) > 1e-12 * max(1.0, abs(u)):
                    raise DomainError("complex parameters must come in conjugate pairs (a,b) or (c,d)")

    @property
    def values(self):
        return np.array([self.a, self.b, self.c, self.d], dtype=complex)

    def log_prefactor(self):
        """log of (q, ab, ac, ad, bc, bd, cd; q)_inf / (2 pi (abcd; q)_inf)."""
        a, b, c, d = self.values
        q = self.q
        terms = [q, a * b, a * c, a * d, b * c, b * d, c * d]
        lg = sum(log_q_pochhammer(v, q, 1e-17) for v in terms) - log_q_pochhammer(a * b * c * d, q, 1e-17)
        return float(lg.real) - math.log(2 * math.pi)


def _qk(q, amax=1.0):
    if q == 0.0:
        return np.ones(1)
    K = pochhammer_terms(amax, q, POCH_TOL)
    return q ** np.arange(K, dtype=float)


def aw_density_theta(theta, params):
    """Density with respect to d(theta) on (0, pi)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    lg = _kernels.aw_log_theta_factor(theta, params.values, _qk(params.q))
    return np.exp(params.log_prefactor() + lg)


def aw_density(x, params):
    """Askey-Wilson density on (-1, 1) with respect to dx."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) >= 1.0):
        raise DomainError("x must lie in (-1, 1)")
    th = np.arccos(x)
    out = aw_density_theta(th, params) / np.sin(th)
    return float(out[0]) if scalar else out


def _peak_angles(values):
    out = []
    for p in values:
        r = abs(p)
        if r > 0.5:
            out.append((abs(math.atan2(-p.imag, p.real)) if p.imag else (0.0 if p.real > 0 else math.pi), 1.0 - r))
    return out


def theta_breaks(values, panels=DEFAULT_PANELS):
    """Panel edges on [0, pi], uniform plus geometric grading toward near-singular angles."""
    edges = list(np.linspace(0.0, math.pi, panels + 1))
    for phi, w in _peak_angles(values):
        w = max(w, 1e-12)
        h = w
        while h < math.pi / panels:
            edges.extend([phi - h, phi + h])
            h *= 2.0
    e = np.unique(np.clip(edges, 0.0, math.pi))
    keep = np.concatenate([[True], np.diff(e) > 1e-14])
    return e[keep]


@dataclass
class AwMeasureEval:
    params: AwParams
    theta: np.ndarray
    nodes: np.ndarray  # x = cos(theta)
    weights: np.ndarray  # normalized probability weights at the nodes
    density: np.ndarray  # f(x) at the nodes
    mass: float  # raw quadrature mass before normalization

    def expect(self, f):
        vals = f(self.nodes) if callable(f) else np.asarray(f)
        return float(self.weights @ vals)

    def moments(self, k=2):
        return np.array([self.weights @ self.nodes ** j for j in range(k + 1)])

    def cdf_table(self):
        """Node angles (ascending) and midpoint CDF values in theta for inverse sampling."""
        c = np.cumsum(self.weights) - 0.5 * self.weights
        return self.theta, c


def aw_measure(params, panels=DEFAULT_PANELS, order=DEFAULT_ORDER):
    theta, w = composite_rule(theta_breaks(params.values, panels), order)
    f_theta = aw_density_theta(theta, params)
    raw = f_theta * w
    mass = float(raw.sum())
    return AwMeasureEval(params, theta, np.cos(theta), raw / mass, f_theta / np.sin(theta), mass)


# --------------------------------------------------------------------------
# the process

@dataclass(frozen=True)
class AwProcessSpec:
    A: float
    B: float
    C: float
    D: float
    q: float
    params: AsepParams | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.A * self.C >= 1.0:
            raise DomainError("AC < 1 (fan region) required")
        lo, hi = self.validity_window
        if not lo < hi:
            raise DomainError(f"empty validity window ({lo:.4g}, {hi:.4g})")

    @classmethod
    def from_asep(cls, params):
        r = roots_bijection(params)
        return cls(r.A, r.B, r.C, r.D, params.q, params)

    @property
    def validity_window(self):
        lo = max(self.C ** 2, self.D ** 2)
        hi = min(math.inf if self.A == 0 else self.A ** -2, math.inf if self.B == 0 else self.B ** -2)
        return lo, hi

    def check_time(self, t):
        lo, hi = self.validity_window
        if not lo < t < hi:
            raise DomainError(f"time {t} outside the absolutely continuous window ({lo:.6g}, {hi:.6g})")

    def marginal_params(self, t):
        self.check_time(t)
        r = math.sqrt(t)
        return AwParams(self.A * r, self.B * r, self.C / r, self.D / r, self.q)

    def transition_params(self, s, t, x):
        if not s < t:
            raise DomainError("transition needs s < t")
        self.check_time(s)
        self.check_time(t)
        if not -1.0 < x < 1.0:
            raise DomainError("x must lie in (-1, 1)")
        rho = math.sqrt(s / t)
        th = math.acos(x)
        r = math.sqrt(t)
        return AwParams(self.A * r, self.B * r, rho * complex(math.cos(th), math.sin(th)),
                        rho * complex(math.cos(th), -math.sin(th)), self.q)

    def asep_params(self, N=1):
        if self.params is not None:
            return self.params
        return roots_inverse(BoundaryRoots(self.A, self.B, self.C, self.D), self.q, N)

    def z_scale(self, t):
        """Z_t = k Y_t with k = 2 sqrt(t) / sqrt(1-q)."""
        return 2.0 * math.sqrt(t) / math.sqrt(1.0 - self.q)


@lru_cache(maxsize=256)
def _marginal_cached(spec, t, panels, order):
    return aw_measure(spec.marginal_params(t), panels, order)


def aw_marginal(spec, t, panels=DEFAULT_PANELS, order=DEFAULT_ORDER):
    return _marginal_cached(spec, float(t), int(panels), int(order))


def aw_transition(spec, s, t, x, panels=DEFAULT_PANELS, order=DEFAULT_ORDER):
    return aw_measure(spec.transition_params(s, t, x), panels, order)


def _transition_rows(spec, s, t, ys, theta, w):
    """Normalized transition weights P_{s,t}(y_i, .) on a common theta grid (rows)."""
    r = math.sqrt(t)
    qk = _qk(spec.q)
    ab = np.array([spec.A * r, spec.B * r, 0.0, 0.0], dtype=complex)
    base = _kernels.aw_log_theta_factor(theta, ab, qk)
    rho = math.sqrt(s / t)
    phis = np.arccos(np.clip(ys, -1.0, 1.0))
    lg = _kernels.aw_log_pair_factor(theta, rho, phis, qk) * -1.0 + base[None, :]
    lg -= lg.max(axis=1, keepdims=True)
    rows = np.exp(lg) * w[None, :]
    rows /= rows.sum(axis=1, keepdims=True)
    return rows


# --------------------------------------------------------------------------
# orthogonal polynomials

def stieltjes(nodes, weights, n):
    """Recurrence coefficients of the discrete measure sum w_i delta_{x_i}.

    Returns (diag, prod): monic p_{k+1} = (x - diag_k) p_k - prod_k p_{k-1},
    with prod_0 = total mass. Orthonormalized internally for stability.
    """
    w = np.asarray(weights, dtype=float)
    x = np.asarray(nodes, dtype=float)
    diag = np.zeros(n)
    prod = np.zeros(n)
    mass = w.sum()
    prod[0] = mass
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(mass))
    b_prev = 0.0
    for k in range(n):
        diag[k] = np.sum(w * x * p * p)
        if k + 1 == n:
            break
        nxt = (x - diag[k]) * p - b_prev * p_prev
        nn = np.sum(w * nxt * nxt)
        if not nn > 0 or not math.isfinite(nn):
            raise StieltjesBreakdown(f"lost positivity at degree {k + 1}; refine the quadrature")
        b = math.sqrt(nn)
        prod[k + 1] = nn
        p_prev, p, b_prev = p, nxt / b, b
    return diag, prod


@dataclass
class AwPolynomialSystem:
    t: float
    max_n: int
    diag: np.ndarray  # Stieltjes diagonal, Z variable
    prod: np.ndarray  # Stieltjes products J_{n-1,n} J_{n,n-1}, Z variable (prod[0] = 1)
    lower: np.ndarray  # J_{n+1,n} fixing the normalization
    J: np.ndarray | None = field(default=None, repr=False)  # t x + y from the tridiagonal representation
    measure: AwMeasureEval | None = field(default=None, repr=False)
    z_scale: float = 1.0

    def evaluate(self, z):
        """Array r[n, i] = r_n(z_i; t) for n = 0..max_n."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.zeros((self.max_n + 1, z.size))
        out[0] = 1.0
        if self.max_n >= 1:
            out[1] = (z - self.diag[0]) / self.lower[0]
        for n in range(1, self.max_n):
            upper_prev = self.prod[n] / self.lower[n - 1]
            out[n + 1] = ((z - self.diag[n]) * out[n] - upper_prev * out[n - 1]) / self.lower[n]
        return out

    def jacobi_mismatch(self):
        """Max deviation of Stieltjes diagonal/products from t x + y, relative to scale."""
        if self.J is None:
            return math.nan
        n = self.max_n + 1
        jd = np.diag(self.J)[:n]
        jp = np.concatenate([[1.0], np.diag(self.J, 1)[:n - 1] * np.diag(self.J, -1)[:n - 1]])
        return float(max(np.max(np.abs(jd - self.diag)), np.max(np.abs(jp[1:] - self.prod[1:]))))


def aw_polynomials(spec, t, max_n, panels=DEFAULT_PANELS, order=DEFAULT_ORDER):
    """Polynomials r_n(z; t) orthogonal for Z_t, with r_0 = 1.

    The recurrence coefficients come from the Stieltjes procedure on the
    quadrature rule of pi_t, mapped to Z = 2 sqrt(t) Y / sqrt(1-q). The free
    normalization of r_n is taken from the lower diagonal of t x + y of the
    tridiagonal representation when ``spec`` carries ASEP rates, so that the
    family is the martingale family; otherwise r_n is orthonormal.
    """
    meas = aw_marginal(spec, t, panels, order)
    k = spec.z_scale(t)
    diag, prod = stieltjes(k * meas.nodes, meas.weights, max_n + 1)
    prod = prod.copy()
    prod[0] = 1.0
    J = None
    if spec.params is not None and 0.0 < spec.q < 1.0:
        rep = usw_rep(spec.params, max_n + 4)
        J = t * rep.x + rep.y
        lower = np.diag(J, -1)[:max_n + 1].copy()
    else:
        lower = np.sqrt(np.append(prod[1:], prod[-1]))
    return AwPolynomialSystem(t, max_n, diag, prod, lower, J, meas, k)


def martingale_check(spec, s, t, n, y_grid=None, panels=DEFAULT_PANELS, order=DEFAULT_ORDER):
    """sup_z |E[r_n(Z_t; t) | Z_s = z] - r_n(z; s)| over a grid of z."""
    if n == 0:
        return 0.0
    ps = aw_polynomials(spec, s, n, panels, order)
    pt = aw_polynomials(spec, t, n, panels, order)
    ys = np.linspace(-0.95, 0.95, 21) if y_grid is None else np.asarray(y_grid)
    worst = 0.0
    for y in ys:
        tr = aw_transition(spec, s, t, float(y), panels, order)
        cond = tr.weights @ pt.evaluate(pt.z_scale * tr.nodes)[n]
        here = ps.evaluate(ps.z_scale * y)[n, 0]
        worst = max(worst, abs(cond - here))
    return worst


# --------------------------------------------------------------------------
# multi-time expectations and the ASEP identity

def _default_factor(t, y):
    return 1.0 + t + 2.0 * math.sqrt(t) * y


def _group_times(times):
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("times must be non-decreasing")
    groups = []
    for t in times:
        if groups and groups[-1][0] == t:
            groups[-1][1] += 1
        else:
            groups.append([t, 1])
    return groups


def multitime_expectation(spec, times, mode="quadrature", n_samples=100000, seed=0,
                          factor=None, constant=False, panels=DEFAULT_PANELS, order=DEFAULT_ORDER,
                          return_se=False):
    """E[prod_j factor(t_j, Y_{t_j})] over the Askey-Wilson process.

    The default factor 1 + t + 2 sqrt(t) y equals 1 + t + sqrt(1-q) Z_t.
    ``constant=True`` replaces every factor by 1. In ``markov_mc`` mode the
    chain is sampled by inverse CDF on the quadrature grids; with
    ``return_se`` the Monte Carlo standard error is returned as well.
    """
    groups = _group_times(times)
    for t, _ in groups:
        spec.check_time(t)
    fac = (lambda t, y: np.ones_like(y)) if constant else (factor or _default_factor)
    if mode == "quadrature":
        if len(groups) > 3:
            raise DomainError("quadrature mode supports at most 3 distinct times")
        val = _multitime_quadrature(spec, groups, fac, panels, order)
        return (val, 0.0) if return_se else val
    if mode == "markov_mc":
        val, se = _multitime_mc(spec, groups, fac, n_samples, seed, panels, order)
        return (val, se) if return_se else val
    raise DomainError(f"unknown mode {mode!r}")


def _grid_for(spec, t, panels, order):
    meas = aw_marginal(spec, t, panels, order)
    theta, w = composite_rule(theta_breaks(meas.params.values, panels), order)
    return theta, w


def _multitime_quadrature(spec, groups, fac, panels, order):
    # backward recursion: g_k = F_k, g_j(y) = F_j(y) * int P(y, dy') g_{j+1}(y')
    t_last, m_last = groups[-1]
    th, w = _grid_for(spec, t_last, panels, order)
    y = np.cos(th)
    g = fac(t_last, y) ** m_last
    for (t, m), (t_next, _) in zip(groups[-2::-1], groups[:0:-1]):
        th_src, w_src = _grid_for(spec, t, panels, order)
        y_src = np.cos(th_src)
        rows = _transition_rows(spec, t, t_next, y_src, th, w)
        g = fac(t, y_src) ** m * (rows @ g)
        th, w, y = th_src, w_src, y_src
    meas = aw_marginal(spec, groups[0][0], panels, order)
    if not np.allclose(meas.theta, th):
        raise AssertionError("grid mismatch")
    return float(meas.weights @ g)


def _inverse_cdf(theta, weights, u):
    c = np.cumsum(weights, axis=-1) - 0.5 * weights
    if weights.ndim == 1:
        return np.interp(u, c, theta)
    out = np.empty(u.shape)
    for i in range(u.size):
        out[i] = np.interp(u[i], c[i], theta)
    return out


def _multitime_mc(spec, groups, fac, n_samples, seed, panels, order):
    rng = substream(seed, "askey_wilson.markov_mc", 0)
    t0 = groups[0][0]
    meas = aw_marginal(spec, t0, panels, order)
    th_cur = _inverse_cdf(meas.theta, meas.weights, rng.random(n_samples))
    y = np.cos(th_cur)
    prodv = fac(t0, y) ** groups[0][1]
    t_prev = t0
    for t, m in groups[1:]:
        th, w = _grid_for(spec, t, panels, order)
        u = rng.random(n_samples)
        new = np.empty(n_samples)
        step = 2048
        for i in range(0, n_samples, step):
            rows = _transition_rows(spec, t_prev, t, y[i:i + step], th, w)
            new[i:i + step] = _inverse_cdf(th, rows, u[i:i + step])
        y = np.cos(new)
        prodv = prodv * fac(t, y) ** m
        t_prev = t
    return float(prodv.mean()), float(prodv.std(ddof=1) / math.sqrt(n_samples))


@dataclass
class IdentityCheck:
    lhs: float
    rhs: float
    abs_diff: float
    params: AsepParams
    times: tuple

    @property
    def rel_diff(self):
        return self.abs_diff / abs(self.lhs)


@dataclass
class LaplaceCheck:
    s: float
    exact: float
    aw: float
    abs_diff: float
    rel_diff: float


def _spec_for(params):
    spec = AwProcessSpec.from_asep(params)
    spec.check_time(1.0)
    return spec


def asep_aw_identity_check(params, times, panels=DEFAULT_PANELS, order=DEFAULT_ORDER, table=None):
    """Exact <prod t_j^{tau_j}> against E[prod (1+t_j+2 sqrt(t_j) Y_{t_j})] / E[(2+2Y_1)^N]."""
    N = params.n_sites
    times = tuple(float(t) for t in times)
    if len(times) != N:
        raise DomainError("need one time per site")
    spec = _spec_for(params)
    table = table if table is not None else stationary_exact(params)
    lhs = generating_function_exact(table, np.array(times))
    num = multitime_expectation(spec, times, panels=panels, order=order)
    den = multitime_expectation(spec, (1.0,) * N, panels=panels, order=order)
    rhs = num / den
    return IdentityCheck(lhs, rhs, abs(lhs - rhs), params, times)


def height_laplace_aw(params, s, panels=DEFAULT_PANELS, order=DEFAULT_ORDER, table=None):
    """<exp(s h_N(N))> exactly and as exp(-sN) E[(1+t+2 sqrt(t) Y_t)^N] / E[(2+2Y_1)^N], t = e^{2s}."""
    N = params.n_sites
    spec = _spec_for(params)
    t = math.exp(2.0 * s)
    table = table if table is not None else stationary_exact(params)
    k = table.states.sum(axis=1)
    exact = float(table.probabilities @ np.exp(s * (2 * k - N)))
    if s == 0:
        aw = 1.0
    else:
        num = multitime_expectation(spec, (t,) * N, panels=panels, order=order)
        den = multitime_expectation(spec, (1.0,) * N, panels=panels, order=order)
        aw = math.exp(-s * N) * num / den
    diff = abs(exact - aw)
    return LaplaceCheck(s, exact, aw, diff, diff / abs(exact))


def identity_refinement(params, times, panel_counts=(2, 4, 8, 16, 32), order=4):
    """Identity-check error for a sequence of quadrature refinements."""
    table = stationary_exact(params)
    return [asep_aw_identity_check(params, times, panels=p, order=order, table=table).abs_diff
            for p in panel_counts]
