"""Stationary measures of the open KPZ equation on [0, 1].

Two reweighted-Brownian-path samplers are provided. Both compose
h = B + Y with B a Brownian motion of variance 1/2 at time 1:

* ``BLD``: Y has drift -v and weight (int_0^1 exp(-2Y))^{-(u+v)}.
* ``BBKW``: Y is driftless and the free starting point has been integrated
  out in closed form, leaving weight (int_0^1 exp(-2Y))^{-(u+v)} exp(-2v Y(1)).

The one-point Laplace transform of h(1) is computed independently by
quadrature of a ratio of gamma-function integrals.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.special import ndtr
from scipy.stats import binom

from . import _kernels
from .asep_model import check_liggett, stationary_exact, weak_asymmetry_params
from .errors import DomainError, QualityWarning
from .mpa import mpa_sample, usw_rep
from .qspecial import bessel_k_iu, complex_log_gamma
from .quadrature import adaptive_quad
from .stats import ess, ks_distance, normalize_log_weights, weighted_ecdf, weighted_mean, weighted_var
from .streams import substream

__all__ = [
    "KpzBoundary", "PathGrid", "WeightedPathEnsemble", "LaplaceResult", "laplace_height_total",
    "sample_stationary", "ExpIdentity", "BesselSingle", "BesselPair", "LiouvilleEigen",
    "IdentityResult", "analytic_identity_suite", "SandwichReport", "sandwich_check",
    "ConvergenceRow", "convergence_diag", "multipoint_laplace_mc", "CHUNK",
]

CHUNK = 4096  # paths per random substream; fixed so results do not depend on n_paths splits


@dataclass(frozen=True)
class KpzBoundary:
    u: float
    v: float

    def require_sampler(self, allow_zero=False):
        if self.u + self.v < 0 or (self.u + self.v == 0 and not allow_zero):
            raise DomainError(f"u + v must be > 0, got {self.u + self.v}")

    def require_laplace(self):
        if not (self.u > 0 and self.v > 0):
            raise DomainError("Laplace quadrature requires u, v > 0")


@dataclass(frozen=True)
class PathGrid:
    n_steps: int = 1024
    record_every: int = 16

    def __post_init__(self):
        if self.n_steps < 2:
            raise DomainError("n_steps must be >= 2")
        if self.record_every < 1 or self.n_steps % self.record_every:
            raise DomainError("record_every must divide n_steps")

    @property
    def x(self):
        return np.arange(0, self.n_steps + 1, self.record_every) / self.n_steps


# --------------------------------------------------------------------------
# Laplace transform of h(1)

@dataclass
class LaplaceResult:
    s: float
    value: float
    quadrature_error_estimate: float
    r: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)  # mu_s(r) samples on r


def _log_mu(r, s, u, v):
    r = np.asarray(r, dtype=float)
    out = np.full(r.shape, -np.inf)
    pos = r > 0
    rp = r[pos]
    lg = (2 * complex_log_gamma(s / 2 + u + 1j * rp).real + 2 * complex_log_gamma(-s / 2 + v + 1j * rp).real
          - 2 * complex_log_gamma(2j * rp).real)
    out[pos] = lg
    return out


def _laplace_integral(s, u, v, r_max, tol):
    f = lambda r: np.exp(_log_mu(r, s, u, v) - r * r)
    while True:
        val, err = adaptive_quad(f, 0.0, r_max, tol=tol)
        # integrand is eventually e^{-r^2} times a polynomial; bound the tail by f(r_max)/r_max
        tail = float(f(np.array([r_max]))[0]) / r_max
        if tail <= tol * max(abs(val), 1e-300) or r_max > 200:
            return val, err + tail, r_max
        r_max *= 1.5


def laplace_height_total(u, v, s, r_max=12.0, tol=1e-12):
    """E[exp(-s h(1))] for u, v > 0 and s in (0, 2v)."""
    KpzBoundary(u, v).require_laplace()
    if not 0.0 < s < 2.0 * v:
        raise DomainError(f"s must lie in (0, 2v) = (0, {2 * v:g})")
    num, e_num, r1 = _laplace_integral(s, u, v, r_max, tol)
    den, e_den, r0 = _laplace_integral(0.0, u, v, r_max, tol)
    ratio = num / den
    value = math.exp(s * s / 4.0) * ratio
    err = value * (e_num / abs(num) + e_den / abs(den))
    rr = np.linspace(0.0, max(r1, r0), 241)
    return LaplaceResult(s, value, err, rr, np.exp(_log_mu(rr, s, u, v)))


# --------------------------------------------------------------------------
# samplers

@dataclass
class WeightedPathEnsemble:
    x: np.ndarray
    paths: np.ndarray  # Y on the recorded grid, (n_paths, len(x))
    log_weights: np.ndarray
    weights: np.ndarray  # self-normalized
    composed_h: np.ndarray  # B + Y on the recorded grid
    ess: float
    description: str
    seed: int
    u: float
    v: float
    n_steps: int

    @property
    def n_paths(self):
        return self.paths.shape[0]

    def column(self, x):
        j = int(np.argmin(np.abs(self.x - x)))
        if abs(self.x[j] - x) > 1e-12:
            raise DomainError(f"x={x} is not on the recorded grid")
        return j

    def h_at(self, x):
        return self.composed_h[:, self.column(x)]

    def mean(self, values):
        return weighted_mean(values, self.weights)

    def laplace(self, s, x=1.0):
        return weighted_mean(np.exp(-s * self.h_at(x)), self.weights)

    def csv_rows(self):
        header = ["path_id", "weight"] + [f"x{j}" for j in range(self.x.size)]
        rows = [[i, float(self.weights[i])] + list(map(float, self.composed_h[i])) for i in range(self.n_paths)]
        return header, rows


def sample_stationary(u, v, grid=None, n_paths=10000, seed=0, description="BLD", ess_floor=0.01):
    """Weighted ensemble of stationary height profiles h on [0, 1].

    Paths are generated in fixed-size chunks, chunk k drawing from its own
    substream, so the first n paths do not depend on ``n_paths``. A
    ``QualityWarning`` is issued when ESS < ess_floor * n_paths.
    """
    grid = grid or PathGrid()
    b = KpzBoundary(u, v)
    description = description.upper()
    if description == "BLD":
        b.require_sampler(allow_zero=True)
    elif description == "BBKW":
        b.require_sampler()
    else:
        raise DomainError(f"unknown description {description!r}")
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    n, stride = grid.n_steps, grid.record_every
    n_rec = n // stride
    sigma = math.sqrt(0.5 / n)
    drift = -v / n if description == "BLD" else 0.0
    Y = np.empty((n_paths, n_rec + 1))
    H = np.empty((n_paths, n_rec + 1))
    logw = np.empty(n_paths)
    for k, start in enumerate(range(0, n_paths, CHUNK)):
        rng = substream(seed, f"kpz_stationary.{description}", k)
        m = min(CHUNK, n_paths - start)
        normals = rng.standard_normal((CHUNK, n))[:m]
        rec, log_int, end = _kernels.path_functionals(normals, sigma, drift, stride)
        bsteps = rng.standard_normal((CHUNK, n_rec))[:m] * math.sqrt(0.5 / n_rec)
        B = np.concatenate([np.zeros((m, 1)), np.cumsum(bsteps, axis=1)], axis=1)
        lw = -(u + v) * log_int
        if description == "BBKW":
            lw = lw - 2.0 * v * end
        Y[start:start + m] = rec
        H[start:start + m] = B + rec
        logw[start:start + m] = lw
    w = normalize_log_weights(logw)
    e = ess(w)
    if e < ess_floor * n_paths:
        warnings.warn(f"effective sample size {e:.1f} of {n_paths} paths", QualityWarning, stacklevel=2)
    return WeightedPathEnsemble(grid.x, Y, logw, w, H, e, description, seed, u, v, n)


# --------------------------------------------------------------------------
# analytic identities

@dataclass(frozen=True)
class ExpIdentity:
    """int exp(2 a x - b e^{2x}) dx = b^{-a} Gamma(a) / 2."""
    a: complex = 1.0
    b: complex = 1.0


@dataclass(frozen=True)
class BesselSingle:
    """int e^{tx} K_{iu}(e^x) dx = 2^{t-2} |Gamma((t+iu)/2)|^2."""
    u: float = 0.0
    t: float = 1.0


@dataclass(frozen=True)
class BesselPair:
    """int e^{tx} K_{iu}(e^x) K_{iv}(e^x) dx = 2^{t-3}/Gamma(t) |Gamma((t+i(u+v))/2) Gamma((t+i(u-v))/2)|^2."""
    u: float = 1.0
    v: float = 1.0
    t: float = 1.0


@dataclass(frozen=True)
class LiouvilleEigen:
    """f'' - e^{2x} f = -u^2 f for f = K_{iu}(e^x), checked by central differences."""
    u: float = 1.0
    x_lo: float = -3.0
    x_hi: float = 1.0
    h: float = 1e-3
    n_points: int = 81


@dataclass
class IdentityResult:
    case: object
    lhs: float
    rhs: float
    abs_diff: float


def _exp_identity(c):
    a, b = complex(c.a), complex(c.b)
    if a.real <= 0 or b.real <= 0:
        raise DomainError("ExpIdentity needs Re a > 0 and Re b > 0")
    # tails: exp(2 Re(a) x) on the left, exp(-Re(b) e^{2x}) on the right
    lo = math.log(1e-18) / (2 * a.real)
    hi = 0.5 * math.log(45.0 / b.real)
    f = lambda x: np.exp(2 * a * x - b * np.exp(2 * x))
    lhs, _ = adaptive_quad(f, lo, hi, tol=1e-15)
    rhs = 0.5 * np.exp(-a * np.log(b) + complex_log_gamma(a))
    lhs, rhs = complex(lhs), complex(rhs)
    if abs(lhs.imag) < 1e-15 and abs(rhs.imag) < 1e-15:
        lhs, rhs = lhs.real, rhs.real
    return lhs, rhs


def _bessel_range(t):
    # K_{iu}(y) ~ -log(y) near 0 and ~ sqrt(pi/2y) e^{-y} at infinity
    lo = -40.0 / t
    return lo, math.log(45.0)


def _bessel_single(c):
    if c.t <= 0:
        raise DomainError("BesselSingle needs t > 0")
    lo, hi = _bessel_range(c.t)
    f = lambda x: np.exp(c.t * x) * bessel_k_iu(c.u, np.exp(x))
    lhs, _ = adaptive_quad(f, lo, hi, tol=1e-12)
    rhs = 2.0 ** (c.t - 2) * math.exp(2 * complex_log_gamma((c.t + 1j * c.u) / 2).real)
    return float(lhs), rhs


def _bessel_pair(c):
    if c.t <= 0:
        raise DomainError("BesselPair needs t > 0")
    lo, hi = _bessel_range(c.t)
    f = lambda x: np.exp(c.t * x) * bessel_k_iu(c.u, np.exp(x)) * bessel_k_iu(c.v, np.exp(x))
    lhs, _ = adaptive_quad(f, lo, hi, tol=1e-12)
    lg = (complex_log_gamma((c.t + 1j * (c.u + c.v)) / 2).real + complex_log_gamma((c.t + 1j * (c.u - c.v)) / 2).real)
    rhs = 2.0 ** (c.t - 3) / math.gamma(c.t) * math.exp(2 * lg)
    return float(lhs), rhs


def _liouville(c):
    if c.h <= 0:
        raise DomainError("finite-difference step must be positive")
    x = np.linspace(c.x_lo, c.x_hi, c.n_points)
    f0 = bessel_k_iu(c.u, np.exp(x))
    fp = bessel_k_iu(c.u, np.exp(x + c.h))
    fm = bessel_k_iu(c.u, np.exp(x - c.h))
    res = (fp - 2 * f0 + fm) / c.h ** 2 - np.exp(2 * x) * f0 + c.u ** 2 * f0
    return float(np.max(np.abs(res))), 0.0


def analytic_identity_suite(case):
    """Evaluate one identity; returns lhs, rhs and |lhs - rhs| (the residual for LiouvilleEigen)."""
    impl = {ExpIdentity: _exp_identity, BesselSingle: _bessel_single, BesselPair: _bessel_pair,
            LiouvilleEigen: _liouville}.get(type(case))
    if impl is None:
        raise DomainError(f"unknown identity case {case!r}")
    lhs, rhs = impl(case)
    return IdentityResult(case, lhs, rhs, float(abs(lhs - rhs)))


# --------------------------------------------------------------------------
# sandwiching

@dataclass
class SandwichReport:
    u: float
    v: float
    pairs: list
    max_violation: float  # largest signed violation of the CDF ordering (negative = strict)
    max_z: float  # largest violation in units of its standard error
    ess: float

    @property
    def passed(self):
        return self.max_z < 3.0


def sandwich_check(u, v, grid=None, n_paths=100000, seed=0, pairs=((0.0, 1.0), (0.0, 0.5), (0.5, 1.0)),
                   n_z=41, ensemble=None):
    """CDF ordering of h(y)-h(x) between the drift -v and drift u Brownian increment laws.

    For each pair, F_up <= F_mid <= F_low is checked on a z grid, where the
    bounds are N(u d, d) and N(-v d, d) CDFs with d = y - x.
    """
    ens = ensemble if ensemble is not None else sample_stationary(u, v, grid, n_paths, seed)
    out = []
    worst, worst_z = -math.inf, -math.inf
    for x, y in pairs:
        d = y - x
        inc = ens.h_at(y) - ens.h_at(x)
        sd = math.sqrt(d)
        z = np.linspace(-v * d - 3 * sd, u * d + 3 * sd, n_z)
        F, se = weighted_ecdf(inc, ens.weights, z)
        f_low = ndtr((z + v * d) / sd)
        f_up = ndtr((z - u * d) / sd)
        viol_low, viol_up = F - f_low, f_up - F
        # where the empirical CDF is 0 or 1 its own SE vanishes; fall back to the binomial SE at the bound
        floor = lambda p: np.sqrt(np.maximum(p * (1 - p), 1.0 / ens.ess) / ens.ess)
        zs = np.maximum(viol_low / np.maximum(se, floor(f_low)), viol_up / np.maximum(se, floor(f_up)))
        viol = np.maximum(viol_low, viol_up)
        out.append({"x": x, "y": y, "max_violation": float(viol.max()), "max_z": float(zs.max())})
        worst = max(worst, float(viol.max()))
        worst_z = max(worst_z, float(zs.max()))
    return SandwichReport(u, v, out, worst, worst_z, ens.ess)


# --------------------------------------------------------------------------
# ASEP to KPZ

@dataclass
class ConvergenceRow:
    N: int
    ks: float
    asep_mean: float
    asep_se: float
    kpz_mean: float
    kpz_se: float
    source: str


def _asep_scaled_increment(params, n_paths, seed, method):
    """Values and weights of h_N(N)/sqrt(N) under the stationary measure, plus a label."""
    N = params.n_sites
    rN = math.sqrt(N)
    if N <= 10 and method == "auto":
        table = stationary_exact(params)
        k = table.states.sum(axis=1)
        return (2 * k - N) / rN, table.probabilities, "exact"
    lig = check_liggett(params)
    if method == "auto" and max(map(abs, lig)) < 1e-12 and abs(params.alpha - (1 - params.beta)) < 1e-12:
        # Liggett boundaries with equal densities: product measure, exact binomial law
        rho = params.alpha
        k = np.arange(N + 1)
        return (2 * k - N) / rN, binom.pmf(k, N, rho), "binomial"
    if method in ("auto", "mpa"):
        tau = mpa_sample(usw_rep(params, N + 2), N, n_paths, seed, module="kpz_stationary.convergence")
        return (2 * tau.sum(axis=1) - N) / rN, np.full(n_paths, 1.0 / n_paths), "mpa"
    if method == "simulate":
        from .asep_dynamics import stationary_snapshots
        tau = stationary_snapshots(params, n_paths, seed, burn_in=4.0 * N * N, spacing=float(N))
        return (2 * tau.sum(axis=1) - N) / rN, np.full(n_paths, 1.0 / n_paths), "simulate"
    raise DomainError(f"unknown method {method!r}")


def convergence_diag(u, v, N_list=(16, 64, 256), grid=None, n_paths=20000, seed=0, method="auto", ensemble=None):
    """KS distance between the scaled ASEP increment h_N(N)/sqrt(N) and h(1).

    The KPZ side is the exact N(u, 1) law when u + v = 0 and the weighted BLD
    ensemble otherwise.
    """
    if u + v == 0:
        kpz_vals, kpz_w = None, None
        kpz_mean, kpz_se = float(u), 0.0
        ref = lambda z: ndtr(z - u)
    else:
        ens = ensemble if ensemble is not None else sample_stationary(u, v, grid, n_paths, seed)
        kpz_vals, kpz_w = ens.h_at(1.0), ens.weights
        kpz_mean, kpz_se = weighted_mean(kpz_vals, kpz_w)
        ref = None
    rows = []
    for N in N_list:
        params = weak_asymmetry_params(int(N), u, v)
        vals, w, src = _asep_scaled_increment(params, n_paths, seed, method)
        if ref is not None:
            ks = ks_distance(vals, w, cdf=ref)
        else:
            ks = ks_distance(vals, w, kpz_vals, kpz_w)
        m = float(w @ vals)
        se = 0.0 if src in ("exact", "binomial") else math.sqrt(float(np.sum(w * w * (vals - m) ** 2)))
        rows.append(ConvergenceRow(int(N), ks, m, se, kpz_mean, kpz_se, src))
    return rows


def multipoint_laplace_mc(u, v, x_points, c_coeffs, ensemble):
    """Weighted estimate (value, se) of E[exp(-sum_k c_k h(x_k))]."""
    x_points = np.atleast_1d(np.asarray(x_points, dtype=float))
    c = np.atleast_1d(np.asarray(c_coeffs, dtype=float))
    if x_points.shape != c.shape or x_points.size < 1:
        raise DomainError("x_points and c_coeffs must have the same nonzero length")
    if (ensemble.u, ensemble.v) != (u, v):
        raise DomainError("ensemble was drawn for different boundary parameters")
    expo = np.zeros(ensemble.n_paths)
    for xk, ck in zip(x_points, c):
        expo -= ck * ensemble.h_at(xk)
    return weighted_mean(np.exp(expo), ensemble.weights)
