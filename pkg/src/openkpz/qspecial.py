"""Special functions: q-Pochhammer, q-gamma, Bernoulli polynomials, the
small-epsilon expansion of log (q^z; q)_inf with its error envelope, complex
log-gamma and the imaginary-order Bessel function K_{iu}.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
import cmath
import math

import numpy as np

from .errors import DomainError, PoleError
from .quadrature import gauss_legendre

__all__ = [
    "QSeriesPoint", "ExpansionResult", "EnvelopeParams",
    "q_pochhammer", "log_q_pochhammer", "pochhammer_terms", "q_gamma",
    "bernoulli_number", "bernoulli_polynomial", "log_poch_expansion",
    "envelope_check", "fit_envelope", "complex_log_gamma", "abs_gamma_sq",
    "bessel_k_iu",
]


@dataclass(frozen=True)
class QSeriesPoint:
    a: complex
    q: float
    z: complex = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise DomainError(f"q must lie in [0,1), got {self.q}")
        if self.epsilon is not None:
            if self.epsilon <= 0:
                raise DomainError("epsilon must be positive")
            if abs(math.exp(-self.epsilon) - self.q) > 4e-16 * max(1.0, self.q):
                raise DomainError("q and epsilon disagree: q != exp(-epsilon)")


@dataclass
class ExpansionResult:
    order_m: int
    value: complex
    residual: float
    bernoulli_terms: list
    direct_value: complex
    error: complex  # direct - expansion, signed
    z: complex
    epsilon: float


@dataclass
class EnvelopeParams:
    delta: float
    b: float
    C_fit: float
    epsilon_0: float
    order_m: int = 1
    ratios: np.ndarray = field(default=None, repr=False)
    monotone_violations: list = field(default_factory=list)


# --------------------------------------------------------------------------
# q-Pochhammer and q-gamma

def pochhammer_terms(a_abs, q, tol=1e-16):
    """Number of factors K so that the neglected tail of (a;q)_inf is below ``tol``.

    Uses |log(1 - q^k a)| <= 2|a| q^k once |a| q^k < 1/2, so the tail past K
    is bounded by 2|a| q^K / (1 - q).
    """
    if q == 0.0 or a_abs == 0.0:
        return 1
    k_half = max(0.0, math.log(0.5 / a_abs) / math.log(q)) if a_abs >= 0.5 else 0.0
    k_tail = math.log(tol * (1.0 - q) / (2.0 * a_abs)) / math.log(q)
    return max(1, int(math.ceil(max(k_half, k_tail))) + 1)


def _check_q(q):
    if not 0.0 <= q < 1.0:
        raise DomainError(f"q must lie in [0,1), got {q}")


def q_pochhammer(a, q, tol=1e-16):
    """(a; q)_inf = prod_{k>=0} (1 - a q^k). ``a`` may be a complex array."""
    _check_q(q)
    if tol <= 0:
        raise DomainError("tol must be positive")
    arr = np.asarray(a, dtype=complex)
    if q == 0.0:
        out = 1.0 - arr
    else:
        amax = float(np.max(np.abs(arr))) if arr.size else 0.0
        K = pochhammer_terms(amax, q, tol)
        qk = q ** np.arange(K, dtype=float)
        out = np.prod(1.0 - arr[..., None] * qk, axis=-1)
    if np.ndim(a) == 0:
        out = complex(out)
        if np.isrealobj(a):
            return out.real
    return out


def log_q_pochhammer(a, q, tol=1e-16):
    """sum_k log1p(-a q^k), the continuous branch of log (a; q)_inf."""
    _check_q(q)
    arr = np.asarray(a, dtype=complex)
    amax = float(np.max(np.abs(arr))) if arr.size else 0.0
    K = 1 if q == 0.0 else pochhammer_terms(amax, q, tol)
    qk = q ** np.arange(K, dtype=float)
    out = np.sum(np.log1p(-arr[..., None] * qk), axis=-1)
    return complex(out) if np.ndim(a) == 0 else out


def q_gamma(z, q):
    """Gamma_q(z) = (1-q)^{1-z} (q;q)_inf / (q^z;q)_inf."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q_gamma needs 0 < q < 1, got {q}")
    z = complex(z)
    lq = math.log(q)
    n = round(-z.real)
    if n >= 0 and abs(z.real + n) < 1e-12:
        k = z.imag * lq / (2 * math.pi)
        if abs(k - round(k)) < 1e-12:
            raise PoleError(f"q_gamma has a pole at z={z}")
    qz = cmath.exp(z * lq)
    # log space: (q;q)_inf underflows double precision once q is close to 1
    log_val = (1.0 - z) * math.log1p(-q) + log_q_pochhammer(q, q) - log_q_pochhammer(qz, q)
    return cmath.exp(log_val)


# --------------------------------------------------------------------------
# Bernoulli numbers and polynomials

@lru_cache(maxsize=None)
def _bernoulli_fractions(n):
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, k) * B[k] for k in range(m)) / Fraction(m + 1))
    return tuple(B)


def bernoulli_number(n):
    """B_n with the B_1 = -1/2 convention, as an exact Fraction."""
    if n < 0:
        raise DomainError("Bernoulli index must be non-negative")
    return _bernoulli_fractions(n)[n]


def _bernoulli_coeffs(n):
    B = _bernoulli_fractions(n)
    # B_n(z) = sum_k C(n,k) B_k z^{n-k}; returned highest power first
    return [comb(n, k) * B[k] for k in range(n + 1)]


def bernoulli_polynomial(n, z):
    """B_n(z) by Horner evaluation of the exact coefficients."""
    if n < 0:
        raise DomainError("Bernoulli index must be non-negative")
    acc = 0
    for c in _bernoulli_coeffs(n):
        acc = acc * z + float(c)
    return acc


# --------------------------------------------------------------------------
# complex log-gamma (Lanczos, g = 7)

_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _lanczos_log(z):
    # valid for Re z >= 1/2
    z = z - 1.0
    acc = np.full(z.shape, _LANCZOS[0], dtype=complex)
    for k in range(1, 9):
        acc = acc + _LANCZOS[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def complex_log_gamma(z):
    """log Gamma(z) on the branch continuous in the plane cut along the negative axis.

    Lanczos approximation for Re z >= 1/2 and reflection otherwise. Agrees
    with the convention of ``scipy.special.loggamma``.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    bad = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(bad):
        raise PoleError(f"log-gamma pole at {z[bad][0].real:g}")
    out = np.empty_like(z)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_log(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        flip = zl.imag < 0
        w = np.where(flip, np.conj(zl), zl)
        # log sin(pi w) for Im w >= 0, written to avoid overflow
        log_sin = -1j * np.pi * w + np.log1p(-np.exp(2j * np.pi * w)) + 1j * np.pi / 2 - math.log(2)
        val = math.log(math.pi) - log_sin - _lanczos_log(1.0 - w)
        out[left] = np.where(flip, np.conj(val), val)
    return complex(out[0]) if scalar else out


def abs_gamma_sq(z):
    """|Gamma(z)|^2 as exp(2 Re log Gamma(z))."""
    return np.exp(2.0 * np.real(complex_log_gamma(z)))


# --------------------------------------------------------------------------
# small-epsilon expansion of log (q^z; q)_inf

def _direct_log_poch_float(z, eps):
    K = pochhammer_terms(math.exp(-eps * z.real), math.exp(-eps), 1e-17)
    k = np.arange(K, dtype=float)
    # 1 - q^{z+k} computed as -expm1(-eps (z+k)) keeps relative accuracy near k=0
    return complex(np.sum(np.log(-np.expm1(-eps * (z + k)))))


def _direct_log_poch_mp(z, eps, dps):
    import mpmath as mp
    with mp.workdps(dps):
        z_mp = mp.mpc(z.real, z.imag) if z.imag else mp.mpf(z.real)
        e = mp.mpf(eps)
        q = mp.exp(-e)
        term = mp.exp(-e * z_mp)
        cutoff = mp.mpf(10) ** (-dps - 5)
        total = mp.mpf(0)
        while abs(term) > cutoff:
            total += mp.log(1 - term)
            term *= q
        return total


def _expansion_terms(z, eps, m, dps):
    if dps is None:
        lead = -(math.pi ** 2) / (6 * eps) - (z - 0.5) * math.log(eps) \
            - (complex_log_gamma(z) - _HALF_LOG_2PI)
        terms = [bernoulli_polynomial(n + 1, z) * float(bernoulli_number(n))
                 / (n * math.factorial(n + 1)) * eps ** n for n in range(1, m + 1)]
        return lead, terms
    import mpmath as mp
    with mp.workdps(dps):
        z_mp = mp.mpc(z.real, z.imag) if z.imag else mp.mpf(z.real)
        e = mp.mpf(eps)
        lead = -mp.pi ** 2 / (6 * e) - (z_mp - mp.mpf(1) / 2) * mp.log(e) \
            - (mp.loggamma(z_mp) - mp.log(2 * mp.pi) / 2)
        terms = []
        for n in range(1, m + 1):
            bp = mp.mpf(0)
            for c in _bernoulli_coeffs(n + 1):
                bp = bp * z_mp + mp.mpf(c.numerator) / c.denominator
            bn = bernoulli_number(n)
            terms.append(bp * (mp.mpf(bn.numerator) / bn.denominator) / (n * mp.factorial(n + 1)) * e ** n)
        return lead, terms


def log_poch_expansion(z, epsilon, m, dps=None):
    """Order-m small-epsilon expansion of log (q^z; q)_inf with q = exp(-epsilon).

    The residual is measured against the direct product. With ``dps=None`` both
    sides are evaluated in double precision, which floors the residual near
    1e-14. Passing an integer ``dps`` evaluates both in mpmath at that many
    digits, which resolves the exponentially small true error.
    """
    z = complex(z)
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0,1)")
    if m < 1:
        raise DomainError("expansion order m must be >= 1")
    if z.real <= 0:
        raise DomainError("expansion validated only for Re(z) > 0")
    lead, terms = _expansion_terms(z, epsilon, m, dps)
    if dps is None:
        value = lead - sum(terms)
        direct = _direct_log_poch_float(z, epsilon)
        err = direct - value
        term_vals = [complex(t) for t in terms]
        value = complex(value)
    else:
        import mpmath as mp
        with mp.workdps(dps):
            value_mp = lead - mp.fsum(terms)
            direct_mp = _direct_log_poch_mp(z, epsilon, dps)
            err_mp = direct_mp - value_mp
            err = complex(err_mp)
            value = complex(value_mp)
            direct = complex(direct_mp)
            term_vals = [complex(t) for t in terms]
    return ExpansionResult(order_m=m, value=value, residual=abs(err), bernoulli_terms=term_vals,
                           direct_value=direct, error=err, z=z, epsilon=epsilon)


def _envelope(z, eps, b, delta):
    az = abs(z)
    return eps * (1 + az) ** 2 + eps ** b * (1 + az) ** (1 + 2 * b + delta)


def fit_envelope(points, residuals, m, delta, b, epsilon_0=None):
    """Smallest C with residual <= C * envelope at every (z, eps) point."""
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if not m - 1 < b < m:
        raise DomainError(f"b must lie strictly inside ({m - 1}, {m})")
    pts = [(complex(z), float(e)) for z, e in points]
    if not pts:
        raise DomainError("empty grid")
    eps0 = epsilon_0 if epsilon_0 is not None else max(e for _, e in pts) * (1 + 1e-12)
    for z, e in pts:
        if abs(z.imag) >= 5.0 / e:
            raise DomainError(f"grid point z={z} violates |Im z| < 5/eps at eps={e}")
        if e >= eps0:
            raise DomainError(f"grid point eps={e} not below epsilon_0={eps0}")
    res = np.abs(np.asarray(residuals, dtype=float))
    env = np.array([_envelope(z, e, b, delta) for z, e in pts])
    ratios = res / env
    # residual should shrink as eps shrinks at fixed z
    violations = []
    by_z = {}
    for (z, e), r in zip(pts, res):
        by_z.setdefault(z, []).append((e, r))
    for z, lst in by_z.items():
        lst.sort(reverse=True)
        for (e1, r1), (e2, r2) in zip(lst, lst[1:]):
            if r2 > r1:
                violations.append((z, e2))
    return EnvelopeParams(delta=delta, b=b, C_fit=float(ratios.max()), epsilon_0=eps0,
                          order_m=m, ratios=ratios, monotone_violations=violations)


def envelope_check(grid, m, delta, b, epsilon_0=None, dps=None):
    """Fit the envelope constant C_fit on a grid of (z, epsilon) points."""
    pts = [(complex(z), float(e)) for z, e in grid]
    for z, e in pts:
        if abs(z.imag) >= 5.0 / e:
            raise DomainError(f"grid point z={z} violates |Im z| < 5/eps at eps={e}")
    res = [log_poch_expansion(z, e, m, dps=dps).residual for z, e in pts]
    return fit_envelope(pts, res, m, delta, b, epsilon_0)


def resolving_dps(epsilon, digits_margin=30):
    """Working precision that resolves the exp(-4 pi^2 / eps) error at z in {1/2, 1}."""
    return int(4 * math.pi ** 2 / (epsilon * math.log(10))) + digits_margin


# --------------------------------------------------------------------------
# K_{iu}(x) = int_0^inf exp(-x cosh w) cos(u w) dw

def bessel_k_iu(u, x, tol=1e-13):
    """Imaginary-order modified Bessel function K_{iu}(x) for x > 0.

    The integrand is factored as exp(-x) * exp(-x (cosh w - 1)) cos(u w) and
    truncated where the second factor drops below ``tol``. The composite rule
    is doubled until two successive estimates agree, for all x jointly.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DomainError("bessel_k_iu requires x > 0")
    u = abs(float(u))
    L = -math.log(tol) + 5.0
    W = np.arccosh(1.0 + L / x)
    gx, gw = gauss_legendre(20)
    panels = max(8, int(math.ceil(u * W.max() / math.pi)) + 8)
    prev = None
    for _ in range(12):
        s_edges = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 * np.diff(s_edges)
        s = ((s_edges[:-1] + s_edges[1:]) * 0.5)[:, None] + half[:, None] * gx[None, :]
        ws = (half[:, None] * gw[None, :]).ravel()
        s = s.ravel()
        w = W[:, None] * s[None, :]
        f = np.exp(-x[:, None] * (np.cosh(w) - 1.0)) * np.cos(u * w)
        cur = W * (f @ ws)
        if prev is not None and np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            break
        prev = cur
        panels *= 2
    out = np.exp(-x) * cur
    return float(out[0]) if scalar else out
