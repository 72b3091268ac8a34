"""Matrix product ansatz for the open ASEP stationary measure.

Two representations of the algebra

    DE - qED = D + E,  <W|(alpha E - gamma D) = <W|,  (beta D - delta E)|V> = |V>

are built here: the one-dimensional (scalar) one, which exists on a
codimension-one set of rates and gives product Bernoulli measures, and a
truncated tridiagonal one of the form D = I/(1-q) + x/sqrt(1-q),
E = I/(1-q) + y/sqrt(1-q) with xy - qyx = I and W = V = e_0.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .asep_model import AsepParams, StationaryTable, state_matrix, generator_matrix
from .errors import ConditionFailed, DomainError, RepresentationBreakdown
from .streams import substream

__all__ = [
    "DehpRep", "RelationResidual", "scalar_rep", "scalar_condition_residual",
    "scalar_dehp_rep", "usw_rep", "dehp_residuals", "mpa_weight", "mpa_log_weight",
    "mpa_measure", "mpa_sample", "jacobi_at",
]


@dataclass(frozen=True)
class DehpRep:
    kind: str  # "scalar" or "tridiagonal"
    D: np.ndarray
    E: np.ndarray
    W: np.ndarray
    V: np.ndarray
    q: float
    source_params: AsepParams | None = field(default=None, repr=False)
    x: np.ndarray | None = field(default=None, repr=False)
    y: np.ndarray | None = field(default=None, repr=False)
    # index m at which the (m, m+1) couplings vanish, if the recursion terminated
    terminated_at: int | None = None

    @property
    def M(self):
        return self.D.shape[0]

    @property
    def d(self):
        return float(self.D[0, 0])

    @property
    def e(self):
        return float(self.E[0, 0])


@dataclass(frozen=True)
class RelationResidual:
    bulk: float
    left: float
    right: float
    x0: float = -1.0
    x1: float = 1.0

    @property
    def max(self):
        return max(self.bulk, self.left, self.right)


def scalar_condition_residual(params):
    p = params
    return (1 - p.q) * (p.alpha + p.delta) * (p.beta + p.gamma) \
        - (p.alpha + p.beta + p.gamma + p.delta) * (p.alpha * p.beta - p.gamma * p.delta)


def scalar_rep(params, tol=1e-10):
    """Scalars (d, e) with alpha e - gamma d = 1 and beta d - delta e = 1 solving the algebra."""
    res = scalar_condition_residual(params)
    scale = max(1.0, (params.alpha + params.beta + params.gamma + params.delta) ** 3)
    if abs(res) > tol * scale:
        raise ConditionFailed("no one-dimensional representation for these rates", res)
    p = params
    det = p.alpha * p.beta - p.gamma * p.delta
    if det == 0:
        raise ConditionFailed("degenerate boundary system", 0.0)
    d = (p.alpha + p.delta) / det
    e = (p.beta + p.gamma) / det
    return d, e


def scalar_dehp_rep(params, tol=1e-10):
    d, e = scalar_rep(params, tol)
    one = np.ones(1)
    return DehpRep("scalar", np.array([[d]]), np.array([[e]]), one, one.copy(), params.q, params)


def usw_rep(params, M):
    """Truncated M x M tridiagonal representation with W = V = e_0.

    The entries of x, y are generated row by row. Boundary relations fix
    (x_00, y_00); the bulk relation fixes the ratios
    y_{m,m+1}/x_{m,m+1} = q^m gamma/alpha and x_{m+1,m}/y_{m+1,m} = q^m delta/beta,
    the product x_{m,m+1} y_{m+1,m}, and the next diagonal pair. The one free
    scale per index is a diagonal similarity; it is fixed by making t x + y
    symmetric at t = 1.
    """
    q = params.q
    if not 0.0 < q < 1.0:
        raise DomainError("tridiagonal representation needs 0 < q < 1")
    if M < 4:
        raise DomainError("truncation M must be >= 4")
    a, b, g, d = params.alpha, params.beta, params.gamma, params.delta
    s = math.sqrt(1.0 - q)
    x = np.zeros((M, M))
    y = np.zeros((M, M))
    det = g * d - a * b
    if abs(det) < 1e-300:
        raise RepresentationBreakdown("boundary system is singular", 0)
    r1 = 1.0 - (a - g) / (1.0 - q)
    r2 = 1.0 - (b - d) / (1.0 - q)
    # [[-g, a], [b, -d]] @ (x00, y00) = s * (r1, r2)
    x[0, 0] = s * (-d * r1 - a * r2) / det
    y[0, 0] = s * (-b * r1 - g * r2) / det
    terminated = None
    scale = 1.0 / (1.0 - q)
    for m in range(M - 1):
        n = m - 1
        if m > 0:
            if terminated is not None:
                x[m, m] = y[m, m] = 0.0
            else:
                xr, yr, xl, yl = x[n, m], y[n, m], x[m, n], y[m, n]
                det2 = q * q * yr * xl - xr * yl
                if abs(det2) < 1e-14 * max(1.0, abs(xr * yl)):
                    raise RepresentationBreakdown("vanishing pivot in diagonal solve", m)
                r_a = q * y[n, n] * xr - x[n, n] * yr
                r_b = q * yl * x[n, n] - xl * y[n, n]
                # [[-q yr, xr], [yl, -q xl]] @ (X, Y) = (r_a, r_b)
                x[m, m] = (-q * xl * r_a - xr * r_b) / det2
                y[m, m] = (-yl * r_a - q * yr * r_b) / det2
        if terminated is not None:
            # free q-oscillator block, unreachable from e_0
            k = m - terminated - 1
            amp = math.sqrt((1.0 - q ** (k + 1)) / (1.0 - q))
            x[m, m + 1] = amp
            y[m + 1, m] = amp
            continue
        rg = q ** m * g / a
        rd = q ** m * d / b
        rhs = 1.0 - (1.0 - q) * x[m, m] * y[m, m]
        if m > 0:
            rhs -= x[m, n] * y[n, m] - q * y[m, n] * x[n, m]
        den = 1.0 - q * rg * rd
        if abs(den) < 1e-14:
            raise RepresentationBreakdown("vanishing product denominator", m)
        P = rhs / den
        if abs(P) <= 1e-12 * scale:
            terminated = m
            x[m, m + 1] = y[m, m + 1] = x[m + 1, m] = y[m + 1, m] = 0.0
            continue
        xu = math.sqrt(abs(P) * (1.0 + rd) / (1.0 + rg))
        yl_ = P / xu
        x[m, m + 1] = xu
        y[m, m + 1] = rg * xu
        y[m + 1, m] = yl_
        x[m + 1, m] = rd * yl_
    I = np.eye(M)
    D = I / (1.0 - q) + x / s
    E = I / (1.0 - q) + y / s
    e0 = np.zeros(M)
    e0[0] = 1.0
    return DehpRep("tridiagonal", D, E, e0, e0.copy(), q, params, x, y, terminated)


def dehp_residuals(rep, params=None):
    """Max-norm residuals of the three relations, last two indices excluded."""
    p = params if params is not None else rep.source_params
    D, E, q = rep.D, rep.E, rep.q
    Mdim = D.shape[0]
    w = Mdim if Mdim <= 2 else Mdim - 2
    R = D @ E - q * (E @ D) - D - E
    bulk = float(np.max(np.abs(R[:w, :w])))
    left_vec = rep.W @ (p.alpha * E - p.gamma * D) - rep.W
    right_vec = (p.beta * D - p.delta * E) @ rep.V - rep.V
    return RelationResidual(bulk, float(np.max(np.abs(left_vec[:w]))), float(np.max(np.abs(right_vec[:w]))))


def _check_M(rep, N):
    if rep.kind == "tridiagonal" and rep.M < N + 2:
        raise DomainError(f"truncation M={rep.M} too small for N={N}; need M >= N+2")


def mpa_log_weight(rep, tau):
    """(sign, log|f_N(tau)|) with per-step rescaling."""
    tau = np.asarray(tau)
    _check_M(rep, tau.size)
    v = rep.W.astype(float).copy()
    log_scale = 0.0
    for t in tau:
        v = v @ (rep.D if t else rep.E)
        nrm = np.max(np.abs(v))
        if nrm == 0:
            return 0.0, -math.inf
        v /= nrm
        log_scale += math.log(nrm)
    val = float(v @ rep.V)
    if val == 0:
        return 0.0, -math.inf
    return math.copysign(1.0, val), log_scale + math.log(abs(val))


def mpa_weight(rep, tau):
    sign, lw = mpa_log_weight(rep, tau)
    return sign * math.exp(lw) if sign else 0.0


def mpa_measure(rep, N):
    """Normalized stationary weights f_N(tau)/Z_N over all 2^N states."""
    if N == 0:
        return float(rep.W @ rep.V)
    _check_M(rep, N)
    vecs = rep.W[None, :].astype(float)
    for _ in range(N):
        # prefix tree: appending site i doubles the set; bit 1 -> D, 0 -> E
        vecs = np.stack([vecs @ rep.E, vecs @ rep.D], axis=1).reshape(-1, rep.M)
        vecs /= np.max(np.abs(vecs))
    f = vecs @ rep.V
    probs = f / f.sum()
    params = rep.source_params.with_sites(N) if rep.source_params is not None else None
    residual = np.nan
    if params is not None:
        Q = generator_matrix(params)
        residual = float(np.max(np.abs(Q.T @ probs)))
    return StationaryTable(N, probs, residual, params)


def _bands(Mat):
    return (np.ascontiguousarray(np.append(0.0, np.diag(Mat, -1))),
            np.ascontiguousarray(np.diag(Mat).copy()),
            np.ascontiguousarray(np.append(np.diag(Mat, 1), 0.0)))


def mpa_sample(rep, N, n_samples, seed, module="mpa_sample"):
    """Exact i.i.d. draws from the stationary measure by sequential conditioning.

    Returns an (n_samples, N) int8 array of occupations.
    """
    _check_M(rep, N)
    rng = substream(seed, module, 0)
    if rep.kind == "scalar":
        p = rep.d / (rep.d + rep.e)
        return (rng.random((n_samples, N)) < p).astype(np.int8)
    Mdim = min(rep.M, N + 2)
    D = rep.D[:Mdim, :Mdim]
    E = rep.E[:Mdim, :Mdim]
    S = D + E
    # R[j] = (D+E)^j e_0, rescaled
    R = np.zeros((N + 1, Mdim))
    R[0, 0] = 1.0
    for j in range(1, N + 1):
        r = S @ R[j - 1]
        R[j] = r / np.max(np.abs(r))
    dl, dd, du = _bands(D)
    el, ed, eu = _bands(E)
    out = np.zeros((n_samples, N), dtype=np.int8)
    _kernels.mpa_sample_kernel(dl, dd, du, el, ed, eu, R, out, rng)
    return out


def jacobi_at(rep, t):
    """Jacobi matrix t x + y of the tridiagonal representation."""
    if rep.kind != "tridiagonal":
        raise DomainError("jacobi_at needs a tridiagonal representation")
    return t * rep.x + rep.y
