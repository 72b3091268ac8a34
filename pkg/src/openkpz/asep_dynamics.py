"""Continuous-time dynamics of the open ASEP.

Exact event-driven simulation, height functions, the microscopic Hopf-Cole
field and its martingale diagnostic, the monotone boundary coupling, and
Hoelder statistics of the scaled height.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .asep_model import AsepParams, StationaryTable, check_liggett, stationary_exact
from .errors import CouplingViolation, DomainError
from .streams import substream

__all__ = [
    "MOVE_NAMES", "Trajectory", "HeightPath", "HopfColeField", "MartingaleReport",
    "CoupledTrajectory", "HolderStats", "simulate", "height_from_occupation",
    "robin_coefficients", "hopf_cole_field", "she_martingale_residual",
    "coupled_simulate", "scaled_height_stats", "empirical_current",
    "stationary_snapshots", "sample_from_table",
]

MOVE_NAMES = ("enter_left", "exit_left", "jump_right", "jump_left", "enter_right", "exit_right")
CLOCK_NAMES = ("bulk_right", "bulk_left", "enter_left_shared", "enter_left_primed",
               "exit_left_shared", "exit_left_unprimed", "enter_right_shared",
               "enter_right_primed", "exit_right_shared", "exit_right_unprimed")
_CHUNK = 1 << 16


def _rates(p):
    return np.array([p.q, p.alpha, p.beta, p.gamma, p.delta], dtype=float)


def _as_initial(initial, N):
    if initial is None:
        return np.zeros(N, dtype=np.int8)
    tau = np.asarray(initial, dtype=np.int8).copy()
    if tau.shape != (N,) or np.any((tau != 0) & (tau != 1)):
        raise DomainError(f"initial occupation must be a 0/1 vector of length {N}")
    return tau


def height_from_occupation(tau, offset=0.0):
    """h(0) = offset, h(x) = offset + sum_{i<=x} (2 tau_i - 1); length N+1 (or rows of it)."""
    tau = np.asarray(tau)
    steps = 2 * tau.astype(np.int64) - 1
    lead = np.zeros(tau.shape[:-1] + (1,), dtype=np.int64)
    return offset + np.concatenate([lead, np.cumsum(steps, axis=-1)], axis=-1)


@dataclass
class HeightPath:
    times: np.ndarray
    values: np.ndarray  # (len(times), N+1)

    @property
    def positions(self):
        return np.arange(self.values.shape[1])

    def at(self, i, x):
        """Height at snapshot i, linearly interpolated in x in [0, N]."""
        return float(np.interp(x, self.positions, self.values[i]))


@dataclass
class Trajectory:
    params: AsepParams
    seed: int
    horizon: float
    initial: np.ndarray
    final: np.ndarray
    times: np.ndarray
    sites: np.ndarray  # bond index 0..N of each event
    moves: np.ndarray
    net_current: np.ndarray  # N_N after each event
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    occupation_time: np.ndarray  # per-site time occupied over [0, horizon]
    state_time: np.ndarray | None = None
    final_net_current: int = 0
    events_recorded: bool = True

    @property
    def n_events(self):
        return self.times.size

    def net_current_at(self, t):
        i = np.searchsorted(self.times, t, side="right")
        return int(self.net_current[i - 1]) if i > 0 else 0

    def occupation_at(self, t):
        if not self.events_recorded:
            raise DomainError("event log was not recorded; occupations available only at snapshots")
        i = np.searchsorted(self.times, t, side="right")
        N = self.params.n_sites
        s = self.sites[:i].astype(np.int64)
        # bond k in 1..N-1 flips sites k-1 and k; bond 0 flips site 0; bond N flips site N-1
        first = np.where(s == 0, 0, s - 1)
        flips = np.bincount(first, minlength=N)
        bulk = s[(s > 0) & (s < N)]
        flips += np.bincount(bulk, minlength=N)[:N]
        return (self.initial ^ (flips % 2)).astype(np.int8)

    def height_at(self, t):
        return height_from_occupation(self.occupation_at(t), -2 * self.net_current_at(t))

    def height_path(self, times):
        times = np.asarray(times, dtype=float)
        return HeightPath(times, np.array([self.height_at(t) for t in times]))

    def event_rows(self):
        for t, k, m in zip(self.times, self.sites, self.moves):
            yield float(t), int(k), MOVE_NAMES[m]


def simulate(params, horizon, seed, initial=None, snapshot_times=None,
             record_events=True, track_states=False, replica=0, module="asep_dynamics.simulate"):
    """Exact continuous-time simulation with competing exponential clocks."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    N = params.n_sites
    tau = _as_initial(initial, N)
    init = tau.copy()
    rng = substream(seed, module, replica)
    rates = _rates(params)
    if track_states and N > 16:
        raise DomainError("state tracking limited to N <= 16")
    state_time = np.zeros(2 ** N if track_states else 1)
    state = int(init @ (1 << np.arange(N - 1, -1, -1))) if track_states else 0
    snaps_t = np.array(sorted(snapshot_times), dtype=float) if snapshot_times is not None else np.zeros(0)
    if snaps_t.size and (snaps_t[0] < 0 or snaps_t[-1] > horizon):
        raise DomainError("snapshot times must lie in [0, horizon]")
    stops = list(snaps_t) + [horizon]
    occ = np.zeros(N)
    last = np.zeros(N)
    buf_t = np.empty(_CHUNK)
    buf_s = np.empty(_CHUNK, dtype=np.int16)
    buf_m = np.empty(_CHUNK, dtype=np.int8)
    times, sites, moves, nets = [], [], [], []
    snapshots = []
    t = 0.0
    net_total = 0
    for stop in stops:
        while True:
            n, t, net, finished, state = _kernels.asep_events(
                tau, rates, t, stop, rng, buf_t, buf_s, buf_m, state_time, state, track_states, occ, last)
            if record_events and n:
                times.append(buf_t[:n].copy())
                sites.append(buf_s[:n].copy())
                moves.append(buf_m[:n].copy())
                d = np.zeros(n, dtype=np.int64)
                d[buf_m[:n] == _kernels.ENTER_LEFT] = 1
                d[buf_m[:n] == _kernels.EXIT_LEFT] = -1
                nets.append(net_total + np.cumsum(d))
            net_total += net
            if finished:
                break
        snapshots.append(tau.copy())
    occ += (horizon - last) * tau
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
    return Trajectory(
        params=params, seed=seed, horizon=horizon, initial=init, final=tau.copy(),
        times=cat(times, float), sites=cat(sites, np.int16), moves=cat(moves, np.int8),
        net_current=cat(nets, np.int64), snapshot_times=snaps_t,
        snapshots=np.array(snapshots[:-1], dtype=np.int8).reshape(len(snaps_t), N),
        occupation_time=occ, state_time=state_time if track_states else None,
        final_net_current=net_total, events_recorded=record_events)


def empirical_current(params, horizon, seed, n_batches=20, initial=None, burn_in=0.0):
    """Batch-means estimate of N_N(t)/((1-q) t): returns (mean, standard error)."""
    if n_batches < 2:
        raise DomainError("need at least two batches")
    edges = burn_in + np.linspace(0.0, horizon, n_batches + 1)
    traj = simulate(params, burn_in + horizon, seed, initial=initial, snapshot_times=edges[:-1],
                    record_events=True)
    counts = np.array([traj.net_current_at(b) - traj.net_current_at(a) for a, b in zip(edges[:-1], edges[1:])])
    rates = counts / ((1.0 - params.q) * (horizon / n_batches))
    return float(rates.mean()), float(rates.std(ddof=1) / math.sqrt(n_batches))


def sample_from_table(table, n_samples, rng):
    idx = rng.choice(table.probabilities.size, size=n_samples, p=table.probabilities)
    return table.states[idx]


def stationary_snapshots(params, n_samples, seed, burn_in, spacing, initial=None):
    """Occupation snapshots of one long run, taken every ``spacing`` after ``burn_in``."""
    times = burn_in + spacing * np.arange(n_samples)
    traj = simulate(params, times[-1], seed, initial=initial, snapshot_times=times,
                    record_events=False, module="asep_dynamics.snapshots")
    return traj.snapshots


# --------------------------------------------------------------------------
# microscopic Hopf-Cole transform

@dataclass
class HopfColeField:
    lam: float
    nu: float
    t: float
    values: np.ndarray
    mu_left: float
    mu_right: float

    @property
    def robin(self):
        return self.mu_left, self.mu_right


def robin_coefficients(params):
    rq = math.sqrt(params.q)
    return 1.0 / rq - params.alpha * (1.0 / rq - rq), 1.0 / rq - params.beta * (1.0 / rq - rq)


def _require_liggett(params, tol=1e-9):
    if not 0.0 < params.q < 1.0:
        raise DomainError("Hopf-Cole transform needs 0 < q < 1")
    rl, rr = check_liggett(params)
    if abs(rl) > tol or abs(rr) > tol:
        raise DomainError(f"Liggett condition violated (residuals {rl:.3g}, {rr:.3g})")


def hopf_cole_field(trajectory, t):
    p = trajectory.params
    _require_liggett(p)
    lam = 0.5 * math.log(p.q)
    nu = 1.0 + p.q - 2.0 * math.sqrt(p.q)
    h = trajectory.height_at(t)
    mu_l, mu_r = robin_coefficients(p)
    return HopfColeField(lam, nu, t, np.exp(-lam * h + nu * t), mu_l, mu_r)


@dataclass
class MartingaleReport:
    mean: np.ndarray
    stderr: np.ndarray
    z_scores: np.ndarray
    n_runs: int
    t: float
    coeff: float


def she_martingale_residual(params, n_runs, t, seed, initial="stationary", coeff=None):
    """Mean of M_t(x) = Z_t(x) - Z_0(x) - coeff * int_0^t Delta Z_s(x) ds over replicas.

    Delta uses the Robin substitutions Z(-1) = mu_l Z(0), Z(N+1) = mu_r Z(N).
    ``coeff`` defaults to sqrt(q), the value produced by the generator of the
    dynamics (see README). Initial heights start at h(0) = 0.
    """
    _require_liggett(params)
    if n_runs < 100:
        raise DomainError("n_runs must be >= 100")
    if t < 0:
        raise DomainError("t must be non-negative")
    N = params.n_sites
    q = params.q
    lam = 0.5 * math.log(q)
    nu = 1.0 + q - 2.0 * math.sqrt(q)
    mu_l, mu_r = robin_coefficients(params)
    coeff = math.sqrt(q) if coeff is None else float(coeff)
    if isinstance(initial, str):
        if initial != "stationary":
            raise DomainError(f"unknown initial mode {initial!r}")
        table = stationary_exact(params)
        inits = sample_from_table(table, n_runs, substream(seed, "she.initial", 0))
    else:
        inits = np.broadcast_to(_as_initial(initial, N), (n_runs, N))
    vals = np.empty((n_runs, N + 1))
    if t == 0:
        vals[:] = 0.0
    else:
        rates = _rates(params)
        out = np.empty(N + 1)
        for r in range(n_runs):
            tau = inits[r].astype(np.int8).copy()
            h = height_from_occupation(tau).astype(np.int64)
            _kernels.she_replica(tau, h, rates, lam, nu, mu_l, mu_r, coeff, float(t),
                                 substream(seed, "she.replica", r), out)
            vals[r] = out
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(n_runs)
    z = np.divide(mean, se, out=np.zeros_like(mean), where=se > 0)
    return MartingaleReport(mean, se, z, n_runs, float(t), coeff)


# --------------------------------------------------------------------------
# monotone coupling

@dataclass
class CoupledTrajectory:
    params: AsepParams
    params_prime: AsepParams
    seed: int
    horizon: float
    initial: tuple
    final: tuple
    times: np.ndarray
    clocks: np.ndarray
    sites: np.ndarray
    masks: np.ndarray
    violations: int
    n_events: int
    occupation_time: np.ndarray  # (2, N)

    def event_rows(self):
        for t, c, s, m in zip(self.times, self.clocks, self.sites, self.masks):
            yield float(t), CLOCK_NAMES[c], int(s), int(m)


def _check_order(p, pp):
    if p.q != pp.q or p.n_sites != pp.n_sites:
        raise DomainError("coupled systems must share q and N")
    if not (p.alpha <= pp.alpha and p.beta >= pp.beta and p.gamma >= pp.gamma and p.delta <= pp.delta):
        raise DomainError("rate ordering alpha<=alpha', beta>=beta', gamma>=gamma', delta<=delta' violated")


def coupled_simulate(params, params_prime, horizon, seed, initials=None, strict=True,
                     record_events=True, replica=0):
    """Run (tau, tau') under shared clocks; the primed system dominates."""
    _check_order(params, params_prime)
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    N = params.n_sites
    if initials is None:
        tau, taup = np.zeros(N, np.int8), np.zeros(N, np.int8)
    else:
        tau, taup = _as_initial(initials[0], N), _as_initial(initials[1], N)
    if np.any(tau > taup):
        raise DomainError("initial configurations must satisfy tau <= tau'")
    init = (tau.copy(), taup.copy())
    p, pp = params, params_prime
    rates = np.array([p.q, p.alpha, p.beta, p.gamma, p.delta, pp.alpha, pp.beta, pp.gamma, pp.delta])
    rng = substream(seed, "asep_dynamics.couple", replica)
    occ = np.zeros((2, N))
    last = np.zeros(N)
    buf = (np.empty(_CHUNK), np.empty(_CHUNK, np.int8), np.empty(_CHUNK, np.int16), np.empty(_CHUNK, np.int8))
    parts = ([], [], [], [])
    t = 0.0
    viol = 0
    n_total = 0
    while True:
        n, t, v, finished = _kernels.coupled_events(tau, taup, rates, t, float(horizon), rng, *buf, occ, last)
        viol += v
        n_total += n
        if record_events:
            for lst, b in zip(parts, buf):
                lst.append(b[:n].copy())
        if finished:
            break
    occ[0] += (horizon - last) * tau
    occ[1] += (horizon - last) * taup
    viol += int(np.sum(tau > taup))
    if strict and viol:
        raise CouplingViolation(f"order tau <= tau' broken {viol} times")
    arrays = [np.concatenate(lst) if lst else np.zeros(0) for lst in parts]
    return CoupledTrajectory(params, params_prime, seed, horizon, init, (tau.copy(), taup.copy()),
                             arrays[0], arrays[1].astype(np.int8), arrays[2].astype(np.int16),
                             arrays[3].astype(np.int8), viol, n_total, occ)


# --------------------------------------------------------------------------
# scaled height statistics

@dataclass
class HolderStats:
    x: np.ndarray
    norms: np.ndarray  # ||Z(x)||_n
    d: np.ndarray  # pair separations
    diff_norms: np.ndarray  # max_x ||Z(x+d) - Z(x)||_n
    exponent: float
    n_order: int
    N: int


def scaled_height_stats(table_or_samples, N, n_order=2, levels=None, min_steps=4):
    """Moments of Z(x) = exp(N^{-1/2} h(Nx)) on a dyadic grid and a Hoelder fit.

    Accepts an exact ``StationaryTable`` (moments are exact sums) or an array
    of occupation samples (equal weights). The exponent is the least-squares
    slope of log max_x ||Z(x+d) - Z(x)||_n against log d over dyadic d with
    N d >= ``min_steps``.
    """
    if N < 4:
        raise DomainError("N must be >= 4")
    if isinstance(table_or_samples, StationaryTable):
        if table_or_samples.n_sites != N:
            raise DomainError("table size does not match N")
        tau = table_or_samples.states
        w = table_or_samples.probabilities
    else:
        tau = np.atleast_2d(np.asarray(table_or_samples))
        if tau.shape[1] != N:
            raise DomainError("sample width does not match N")
        w = np.full(tau.shape[0], 1.0 / tau.shape[0])
    L = levels if levels is not None else int(math.floor(math.log2(N)))
    grid = np.arange(2 ** L + 1) / 2 ** L
    pos = np.rint(grid * N).astype(int)
    h = height_from_occupation(tau)[:, pos].astype(float)
    Z = np.exp(h / math.sqrt(N))
    norms = (w @ np.abs(Z) ** n_order) ** (1.0 / n_order)
    ds, diffs = [], []
    for j in range(1, L + 1):
        step = 2 ** (L - j)
        if N * step / 2 ** L < min_steps:
            break
        dz = np.abs(Z[:, step:] - Z[:, :-step]) ** n_order
        diffs.append(float(np.max(w @ dz) ** (1.0 / n_order)))
        ds.append(step / 2 ** L)
    ds, diffs = np.array(ds), np.array(diffs)
    ok = diffs > 0
    if ok.sum() >= 2:
        exponent = float(np.polyfit(np.log(ds[ok]), np.log(diffs[ok]), 1)[0])
    else:
        exponent = math.nan
    return HolderStats(grid, norms, ds, diffs, exponent, n_order, N)
