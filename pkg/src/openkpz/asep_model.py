"""Static theory of the open ASEP: rates, boundary roots, phases, the exact
generator and stationary measure, currents and generating functions.

State convention: an occupation vector tau = (tau_1, ..., tau_N) is stored as
the integer sum_i tau_i 2^{N-i}, so tau_1 is the most significant bit and the
printed bit string reads left to right.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import DomainError

__all__ = [
    "AsepParams", "BoundaryRoots", "Phase", "Region", "PhaseClassification",
    "StationaryTable", "kappa_roots", "roots_bijection", "roots_inverse",
    "classify_phase", "state_matrix", "generator_matrix", "stationary_exact",
    "product_bernoulli", "stationary_current", "bond_currents",
    "generating_function_exact", "liggett_params", "check_liggett",
    "weak_asymmetry_params", "particle_hole", "particle_hole_table", "DEFAULT_CAP",
]

DEFAULT_CAP = 14


@dataclass(frozen=True)
class AsepParams:
    q: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    n_sites: int

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise DomainError(f"q must lie in [0,1), got {self.q}")
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")
        if self.gamma < 0 or self.delta < 0:
            raise DomainError("gamma and delta must be non-negative")
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise DomainError("n_sites must be an integer >= 1")
        for name in ("q", "alpha", "beta", "gamma", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def N(self):
        return self.n_sites

    def with_sites(self, n):
        return replace(self, n_sites=n)

    def as_dict(self):
        return {"q": self.q, "alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "delta": self.delta, "n_sites": self.n_sites}


@dataclass(frozen=True)
class BoundaryRoots:
    A: float
    B: float
    C: float
    D: float

    def __post_init__(self):
        # A (resp. C) is exactly 0 when delta = 0 and beta >= 1-q (resp. gamma, alpha)
        if self.A < 0 or self.C < 0:
            raise DomainError("roots A, C must be non-negative")
        if not (-1 < self.B <= 0 and -1 < self.D <= 0):
            raise DomainError("roots B, D must lie in (-1, 0]")

    @property
    def rho_left(self):
        return 1.0 / (1.0 + self.C)

    @property
    def rho_right(self):
        return self.A / (1.0 + self.A)


class Phase(str, Enum):
    MAXIMAL_CURRENT = "MaximalCurrent"
    LOW_DENSITY = "LowDensity"
    HIGH_DENSITY = "HighDensity"
    COEXISTENCE_LINE = "CoexistenceLine"
    TRIPLE_POINT = "TriplePoint"


class Region(str, Enum):
    FAN = "Fan"
    SHOCK = "Shock"
    LINE = "FanShockLine"


@dataclass(frozen=True)
class PhaseClassification:
    rho_left: float
    rho_right: float
    phase: Phase
    region: Region
    current_limit_J: float


@dataclass
class StationaryTable:
    n_sites: int
    probabilities: np.ndarray
    residual: float
    params: AsepParams | None = field(default=None, repr=False)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.probabilities.shape != (2 ** self.n_sites,):
            raise DomainError("probability vector must have length 2^N")

    @property
    def states(self):
        return state_matrix(self.n_sites)

    def expectation(self, values):
        return float(np.dot(self.probabilities, values))

    def occupation_means(self):
        return self.probabilities @ self.states

    def state_bits(self):
        return ["".join(map(str, row)) for row in self.states]

    def total_variation(self, other):
        o = other.probabilities if isinstance(other, StationaryTable) else np.asarray(other)
        return 0.5 * float(np.abs(self.probabilities - o).sum())


# --------------------------------------------------------------------------
# roots and phases

def kappa_roots(q, x, y):
    """Roots of x k^2 - (1-q-x+y) k - y = 0, larger first.

    The smaller-magnitude root is recovered from Vieta (k+ k- = -y/x) to avoid
    cancellation.
    """
    if x <= 0:
        raise DomainError("kappa_roots needs x > 0")
    if y < 0 or not 0.0 <= q < 1.0:
        raise DomainError("kappa_roots needs y >= 0 and q in [0,1)")
    b = 1.0 - q - x + y
    disc = math.sqrt(b * b + 4.0 * x * y)
    if b >= 0:
        kp = (b + disc) / (2.0 * x)
        km = -y / (x * kp) if kp > 0 else 0.0
    else:
        km = (b - disc) / (2.0 * x)
        kp = -y / (x * km)
    return kp, km + 0.0


def roots_bijection(params):
    A, B = kappa_roots(params.q, params.beta, params.delta)
    C, D = kappa_roots(params.q, params.alpha, params.gamma)
    return BoundaryRoots(A, B, C, D)


def roots_inverse(roots, q, N):
    """Rates with the given roots: alpha = (1-q)/((1+C)(1+D)), gamma = -alpha C D, etc."""
    if not isinstance(roots, BoundaryRoots):
        roots = BoundaryRoots(*roots)
    A, B, C, D = roots.A, roots.B, roots.C, roots.D
    alpha = (1.0 - q) / ((1.0 + C) * (1.0 + D))
    gamma = -alpha * C * D + 0.0
    beta = (1.0 - q) / ((1.0 + A) * (1.0 + B))
    delta = -beta * A * B + 0.0
    return AsepParams(q, alpha, beta, gamma, delta, N)


def classify_phase(rho_left, rho_right, tol=1e-9):
    if not (0 < rho_left < 1 and 0 < rho_right < 1):
        raise DomainError("densities must lie in (0,1)")
    rl, rr = float(rho_left), float(rho_right)
    if abs(rl - 0.5) <= tol and abs(rr - 0.5) <= tol:
        phase, J = Phase.TRIPLE_POINT, 0.25
    elif rl > 0.5 and rr < 0.5:
        phase, J = Phase.MAXIMAL_CURRENT, 0.25
    elif abs(rl + rr - 1.0) <= tol and rl < 0.5:
        phase, J = Phase.COEXISTENCE_LINE, rl * (1 - rl)
    elif rl < 0.5 and rl + rr < 1.0:
        phase, J = Phase.LOW_DENSITY, rl * (1 - rl)
    elif rr > 0.5 and rl + rr > 1.0:
        phase, J = Phase.HIGH_DENSITY, rr * (1 - rr)
    else:
        # remaining boundary slivers: exactly one density at 1/2 within tol
        phase, J = (Phase.MAXIMAL_CURRENT, 0.25)
    if abs(rl - rr) <= tol:
        region = Region.LINE
    elif rl > rr:
        region = Region.FAN
    else:
        region = Region.SHOCK
    return PhaseClassification(rl, rr, phase, region, J)


# --------------------------------------------------------------------------
# generator and stationary measure

def state_matrix(N):
    """(2^N, N) array of occupations; row s holds the bits of s, tau_1 first."""
    s = np.arange(2 ** N, dtype=np.int64)
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    return ((s[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def _transitions(params):
    """Source, target and rate arrays for every allowed move."""
    N = params.n_sites
    states = np.arange(2 ** N, dtype=np.int64)
    tau = state_matrix(N)
    src, dst, rate = [], [], []

    def add(mask, flip, r):
        if r == 0:
            return
        s = states[mask]
        src.append(s)
        dst.append(s ^ flip)
        rate.append(np.full(s.size, r, dtype=float))

    b1 = 1 << (N - 1)  # bit of site 1
    add(tau[:, 0] == 0, b1, params.alpha)
    add(tau[:, 0] == 1, b1, params.gamma)
    bN = 1  # bit of site N
    add(tau[:, N - 1] == 0, bN, params.delta)
    add(tau[:, N - 1] == 1, bN, params.beta)
    for i in range(N - 1):
        flip = (1 << (N - 1 - i)) | (1 << (N - 2 - i))
        add((tau[:, i] == 1) & (tau[:, i + 1] == 0), flip, 1.0)
        add((tau[:, i] == 0) & (tau[:, i + 1] == 1), flip, params.q)
    return np.concatenate(src), np.concatenate(dst), np.concatenate(rate)


def generator_matrix(params, sparse=True):
    """Rate matrix Q with Q[s, s'] the jump rate s -> s' and zero row sums."""
    n = 2 ** params.n_sites
    src, dst, rate = _transitions(params)
    out = np.bincount(src, weights=rate, minlength=n)
    rows = np.concatenate([src, np.arange(n)])
    cols = np.concatenate([dst, np.arange(n)])
    vals = np.concatenate([rate, -out])
    Q = sps.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return Q if sparse else Q.toarray()


def _residual(Q, pi):
    return float(np.max(np.abs(Q.T @ pi)))


def stationary_exact(params, cap=DEFAULT_CAP, method="auto"):
    """Stationary law of the finite chain, with residual ||pi Q||_inf.

    Dense solve for N <= 10, shifted inverse iteration on the sparse matrix
    above that.
    """
    N = params.n_sites
    if N > cap:
        raise DomainError(f"N={N} exceeds the exact-solver cap {cap}")
    Q = generator_matrix(params, sparse=True)
    n = 2 ** N
    if method == "auto":
        method = "dense" if N <= 10 else "sparse"
    if method == "dense":
        M = Q.T.toarray()
        M[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        pi = sla.solve(M, rhs)
    elif method == "sparse":
        scale = float(abs(Q.diagonal()).max())
        shift = 1e-10 * scale
        lu = spla.splu((Q.T - shift * sps.identity(n, format="csr")).tocsc())
        pi = np.full(n, 1.0 / n)
        for _ in range(50):
            new = lu.solve(pi)
            new /= new.sum()
            done = np.max(np.abs(new - pi)) < 1e-16
            pi = new
            if done:
                break
    else:
        raise DomainError(f"unknown method {method!r}")
    pi = np.where(pi < 0, 0.0, pi)  # roundoff-level negatives only
    pi /= pi.sum()
    return StationaryTable(N, pi, _residual(Q, pi), params)


def product_bernoulli(N, rho):
    tau = state_matrix(N)
    p = np.prod(np.where(tau == 1, rho, 1.0 - rho), axis=1)
    return StationaryTable(N, p, 0.0)


def bond_currents(table, params):
    """Net rightward particle flux across each bond, left boundary first.

    Length N+1: entry, the N-1 bulk bonds, exit. In stationarity all entries
    are equal and equal (1-q) J_N.
    """
    tau = table.states.astype(float)
    p = table.probabilities
    out = [p @ (params.alpha * (1 - tau[:, 0]) - params.gamma * tau[:, 0])]
    for i in range(params.n_sites - 1):
        a, b = tau[:, i], tau[:, i + 1]
        out.append(p @ (a * (1 - b)) - params.q * (p @ (b * (1 - a))))
    last = tau[:, -1]
    out.append(p @ (params.beta * last - params.delta * (1 - last)))
    return np.array(out)


def stationary_current(table, params):
    """J_N = <alpha(1-tau_1) - gamma tau_1> / (1-q)."""
    if params.q >= 1.0:
        raise DomainError("current normalization needs q < 1")
    return float(bond_currents(table, params)[0] / (1.0 - params.q))


def generating_function_exact(table, t):
    t = np.asarray(t, dtype=float)
    if t.shape != (table.n_sites,):
        raise DomainError("need one t value per site")
    if np.any(t <= 0):
        raise DomainError("t values must be positive")
    tau = table.states
    vals = np.prod(np.where(tau == 1, t[None, :], 1.0), axis=1)
    return float(table.probabilities @ vals)


# --------------------------------------------------------------------------
# parametrizations

def liggett_params(q, rho_left, rho_right, N):
    if not (0 < rho_left < 1 and 0 < rho_right < 1):
        raise DomainError("densities must lie in (0,1)")
    return AsepParams(q, rho_left, 1.0 - rho_right, q * (1.0 - rho_left), q * rho_right, N)


def check_liggett(params):
    """Residuals (alpha + gamma/q - 1, beta + delta/q - 1)."""
    q = params.q
    if q == 0.0:
        if params.gamma != 0 or params.delta != 0:
            raise DomainError("Liggett check with q = 0 requires gamma = delta = 0")
        return params.alpha - 1.0, params.beta - 1.0
    return params.alpha + params.gamma / q - 1.0, params.beta + params.delta / q - 1.0


def weak_asymmetry_params(N, u, v):
    """Triple-point scaling q = exp(-2/sqrt N), rho_l = 1/2 + u/(2 sqrt N), rho_r = 1/2 - v/(2 sqrt N)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    rN = math.sqrt(N)
    q = math.exp(-2.0 / rN)
    rl = 0.5 + u / (2 * rN)
    rr = 0.5 - v / (2 * rN)
    if not (0 < rl < 1 and 0 < rr < 1):
        raise DomainError(f"(u, v)=({u}, {v}) gives densities ({rl:.4g}, {rr:.4g}) outside (0,1) at N={N}")
    return liggett_params(q, rl, rr, N)


def particle_hole(params):
    """Rates of the hole process read right to left: alpha <-> beta, gamma <-> delta."""
    return AsepParams(params.q, params.beta, params.alpha, params.delta, params.gamma, params.n_sites)


def particle_hole_table(table):
    """Table of the hole process (complement occupations, reversed sites)."""
    N = table.n_sites
    tau = table.states
    img = 1 - tau[:, ::-1]
    idx = img @ (1 << np.arange(N - 1, -1, -1))
    p = np.empty_like(table.probabilities)
    p[idx] = table.probabilities
    return StationaryTable(N, p, table.residual)
