"""Hot loops. Each function compiles with numba when enabled (see ``_jit``)
and otherwise runs as ordinary Python; the vectorizable ones also have a
numpy twin used on the fallback path.

Random numbers always come from a ``numpy.random.Generator`` passed in by the
caller, so the compiled and interpreted paths consume identical streams.
"""
import math

import numpy as np

from ._jit import NUMBA_ENABLED, jit

# move codes shared with asep_dynamics
ENTER_LEFT, EXIT_LEFT, JUMP_RIGHT, JUMP_LEFT, ENTER_RIGHT, EXIT_RIGHT = 0, 1, 2, 3, 4, 5


# --------------------------------------------------------------------------
# single-system open ASEP

@jit
def _bond_rate(tau, i, N, q, alpha, beta, gamma, delta):
    if i == 0:
        return gamma if tau[0] == 1 else alpha
    if i == N:
        return beta if tau[N - 1] == 1 else delta
    a = tau[i - 1]
    b = tau[i]
    if a == 1 and b == 0:
        return 1.0
    if a == 0 and b == 1:
        return q
    return 0.0


@jit
def asep_events(tau, rates, t0, horizon, rng, ev_t, ev_site, ev_move,
                state_time, state, track_states, occ, last):
    """Event-driven run from time t0 until ``horizon`` or the buffers fill.

    Bonds are indexed 0 (left reservoir) .. N (right reservoir); bond i in
    1..N-1 joins sites i-1 and i (0-based). ``occ[i]`` accumulates the time
    site i spends occupied, lazily: it is brought up to ``last[i]`` whenever
    the site flips, and the caller flushes the remainder. Returns
    (n_events, time, net_left_current, finished, state).
    """
    q, alpha, beta, gamma, delta = rates[0], rates[1], rates[2], rates[3], rates[4]
    N = tau.shape[0]
    r = np.empty(N + 1)
    for i in range(N + 1):
        r[i] = _bond_rate(tau, i, N, q, alpha, beta, gamma, delta)
    total = r.sum()
    t = t0
    n = 0
    net = 0
    cap = ev_t.shape[0]
    while True:
        if total <= 0.0:
            if track_states:
                state_time[state] += horizon - t
            return n, horizon, net, True, state
        dt = -math.log(1.0 - rng.random()) / total
        if t + dt > horizon:
            if track_states:
                state_time[state] += horizon - t
            return n, horizon, net, True, state
        if n >= cap:
            return n, t, net, False, state
        if track_states:
            state_time[state] += dt
        t += dt
        u = rng.random() * total
        k = 0
        acc = r[0]
        while acc <= u and k < N:
            k += 1
            acc += r[k]
        while r[k] == 0.0:  # guard against roundoff landing on a closed bond
            k -= 1
        lo_site = k - 1 if k > 0 else 0
        hi_site = k if k < N else N - 1
        for i in range(lo_site, hi_site + 1):
            occ[i] += (t - last[i]) * tau[i]
            last[i] = t
        if k == 0:
            if tau[0] == 0:
                tau[0] = 1
                move = ENTER_LEFT
                net += 1
            else:
                tau[0] = 0
                move = EXIT_LEFT
                net -= 1
            state ^= 1 << (N - 1)
        elif k == N:
            if tau[N - 1] == 0:
                tau[N - 1] = 1
                move = ENTER_RIGHT
            else:
                tau[N - 1] = 0
                move = EXIT_RIGHT
            state ^= 1
        else:
            if tau[k - 1] == 1:
                move = JUMP_RIGHT
            else:
                move = JUMP_LEFT
            tau[k - 1] = 1 - tau[k - 1]
            tau[k] = 1 - tau[k]
            state ^= (1 << (N - k)) | (1 << (N - 1 - k))
        ev_t[n] = t
        ev_site[n] = k
        ev_move[n] = move
        n += 1
        lo = k - 1 if k > 0 else 0
        hi = k + 1 if k < N else N
        for i in range(lo, hi + 1):
            new = _bond_rate(tau, i, N, q, alpha, beta, gamma, delta)
            total += new - r[i]
            r[i] = new
        if (n & 1023) == 0:
            total = r.sum()


# --------------------------------------------------------------------------
# coupled pair (basic coupling in the bulk, split boundary clocks)

@jit
def coupled_events(tau, taup, rates, t0, horizon, rng, ev_t, ev_clock, ev_site, ev_mask, occ, last):
    """Two systems driven by shared constant-rate clocks.

    ``rates`` = (q, alpha, beta, gamma, delta, alpha', beta', gamma', delta')
    with alpha <= alpha', beta >= beta', gamma >= gamma', delta <= delta'.
    Clock ids: 0 bulk right jump, 1 bulk left jump, 2 shared left entry (alpha),
    3 primed-only left entry (alpha'-alpha), 4 shared left exit (gamma'),
    5 unprimed-only left exit (gamma-gamma'), 6 shared right entry (delta),
    7 primed-only right entry (delta'-delta), 8 shared right exit (beta'),
    9 unprimed-only right exit (beta-beta').
    Only clock rings that change at least one system are recorded. Occupation
    times accumulate lazily in ``occ`` (row 0 unprimed, row 1 primed).
    Returns (n_events, time, violations, finished).
    """
    q = rates[0]
    N = tau.shape[0]
    c = np.empty(10)
    c[0] = N - 1.0
    c[1] = q * (N - 1.0)
    c[2] = rates[1]
    c[3] = rates[5] - rates[1]
    c[4] = rates[7]
    c[5] = rates[3] - rates[7]
    c[6] = rates[4]
    c[7] = rates[8] - rates[4]
    c[8] = rates[6]
    c[9] = rates[2] - rates[6]
    total = c.sum()
    t = t0
    n = 0
    viol = 0
    cap = ev_t.shape[0]
    while True:
        dt = -math.log(1.0 - rng.random()) / total
        if t + dt > horizon:
            return n, horizon, viol, True
        if n >= cap:
            return n, t, viol, False
        t += dt
        u = rng.random() * total
        clock = 0
        acc = c[0]
        while acc <= u and clock < 9:
            clock += 1
            acc += c[clock]
        while c[clock] == 0.0:
            clock -= 1
        mask = 0
        site = 0
        if clock <= 1:
            if clock == 0:
                b = int((u / c[0]) * (N - 1))
            else:
                b = int(((u - c[0]) / c[1]) * (N - 1))
            if b > N - 2:
                b = N - 2
            site = b
            for i in range(b, b + 2):
                occ[0, i] += (t - last[i]) * tau[i]
                occ[1, i] += (t - last[i]) * taup[i]
                last[i] = t
            if clock == 0:
                if tau[b] == 1 and tau[b + 1] == 0:
                    tau[b] = 0
                    tau[b + 1] = 1
                    mask |= 1
                if taup[b] == 1 and taup[b + 1] == 0:
                    taup[b] = 0
                    taup[b + 1] = 1
                    mask |= 2
            else:
                if tau[b] == 0 and tau[b + 1] == 1:
                    tau[b] = 1
                    tau[b + 1] = 0
                    mask |= 1
                if taup[b] == 0 and taup[b + 1] == 1:
                    taup[b] = 1
                    taup[b + 1] = 0
                    mask |= 2
        else:
            left = clock <= 5
            site = 0 if left else N - 1
            entry = clock == 2 or clock == 3 or clock == 6 or clock == 7
            hit_u = clock != 3 and clock != 7
            hit_p = clock != 5 and clock != 9
            target = 1 if entry else 0
            occ[0, site] += (t - last[site]) * tau[site]
            occ[1, site] += (t - last[site]) * taup[site]
            last[site] = t
            if hit_u and tau[site] != target:
                tau[site] = target
                mask |= 1
            if hit_p and taup[site] != target:
                taup[site] = target
                mask |= 2
        if mask == 0:
            continue
        if tau[site] > taup[site]:
            viol += 1
        if clock <= 1 and tau[site + 1] > taup[site + 1]:
            viol += 1
        ev_t[n] = t
        ev_clock[n] = clock
        ev_site[n] = site
        ev_mask[n] = mask
        n += 1


# --------------------------------------------------------------------------
# discrete SHE martingale, one replica

@jit
def she_replica(tau, h, rates, lam, nu, mu_l, mu_r, coeff, horizon, rng, out):
    """Run one replica to ``horizon``; write M_t(x), x = 0..N, into ``out``.

    Between events h is frozen, so Z_s(x) = exp(-lam h(x)) exp(nu s) and the
    drift integral over [t_a, t_b] equals Delta exp(-lam h) times
    (exp(nu t_b) - exp(nu t_a)) / nu exactly.
    """
    q, alpha, beta, gamma, delta = rates[0], rates[1], rates[2], rates[3], rates[4]
    N = tau.shape[0]
    r = np.empty(N + 1)
    for i in range(N + 1):
        r[i] = _bond_rate(tau, i, N, q, alpha, beta, gamma, delta)
    total = r.sum()
    g = np.empty(N + 1)
    lap_int = np.zeros(N + 1)
    for x in range(N + 1):
        out[x] = math.exp(-lam * h[x])  # Z_0
    t = 0.0
    while True:
        dt = -math.log(1.0 - rng.random()) / total if total > 0 else np.inf
        t_next = t + dt
        t_b = t_next if t_next < horizon else horizon
        for x in range(N + 1):
            g[x] = math.exp(-lam * h[x])
        if nu > 0:
            w = (math.exp(nu * t_b) - math.exp(nu * t)) / nu
        else:
            w = t_b - t
        for x in range(N + 1):
            left = g[x - 1] if x > 0 else mu_l * g[0]
            right = g[x + 1] if x < N else mu_r * g[N]
            lap_int[x] += (left - 2.0 * g[x] + right) * w
        if t_next >= horizon:
            break
        t = t_next
        u = rng.random() * total
        k = 0
        acc = r[0]
        while acc <= u and k < N:
            k += 1
            acc += r[k]
        while r[k] == 0.0:
            k -= 1
        if k == 0:
            if tau[0] == 0:
                tau[0] = 1
                h[0] -= 2
            else:
                tau[0] = 0
                h[0] += 2
        elif k == N:
            if tau[N - 1] == 0:
                tau[N - 1] = 1
                h[N] += 2
            else:
                tau[N - 1] = 0
                h[N] -= 2
        else:
            if tau[k - 1] == 1:
                h[k] -= 2
            else:
                h[k] += 2
            tau[k - 1] = 1 - tau[k - 1]
            tau[k] = 1 - tau[k]
        lo = k - 1 if k > 0 else 0
        hi = k + 1 if k < N else N
        for i in range(lo, hi + 1):
            new = _bond_rate(tau, i, N, q, alpha, beta, gamma, delta)
            total += new - r[i]
            r[i] = new
    ent = math.exp(nu * horizon)
    for x in range(N + 1):
        out[x] = math.exp(-lam * h[x]) * ent - out[x] - coeff * lap_int[x]


# --------------------------------------------------------------------------
# sequential sampling from a tridiagonal matrix product state

@jit
def mpa_sample_kernel(dl, dd, du, el, ed, eu, R, out, rng):
    n_samples, N = out.shape
    M = dd.shape[0]
    L = np.zeros(M)
    LD = np.zeros(M)
    LE = np.zeros(M)
    for s in range(n_samples):
        L[:] = 0.0
        L[0] = 1.0
        for i in range(N):
            top = i + 2 if i + 2 < M else M
            a = 0.0
            b = 0.0
            Rv = R[N - 1 - i]
            for j in range(top):
                vd = L[j] * dd[j]
                ve = L[j] * ed[j]
                if j > 0:
                    vd += L[j - 1] * du[j - 1]
                    ve += L[j - 1] * eu[j - 1]
                if j + 1 < M:
                    vd += L[j + 1] * dl[j + 1]
                    ve += L[j + 1] * el[j + 1]
                LD[j] = vd
                LE[j] = ve
                a += vd * Rv[j]
                b += ve * Rv[j]
            p = a / (a + b)
            if rng.random() < p:
                out[s, i] = 1
                src = LD
            else:
                out[s, i] = 0
                src = LE
            nrm = 0.0
            for j in range(top):
                v = abs(src[j])
                if v > nrm:
                    nrm = v
            for j in range(top):
                L[j] = src[j] / nrm


# --------------------------------------------------------------------------
# Brownian path functionals

@jit
def _path_functionals_loop(normals, sigma, drift, stride, rec, log_int, end):
    n_paths, n_steps = normals.shape
    inv_n = 1.0 / n_steps
    for p in range(n_paths):
        y = 0.0
        acc = 0.5  # trapezoid endpoint weight of exp(-2 y(0)) = 1
        rec[p, 0] = 0.0
        j = 1
        for i in range(n_steps):
            y += drift + sigma * normals[p, i]
            e = math.exp(-2.0 * y)
            acc += 0.5 * e if i == n_steps - 1 else e
            if (i + 1) % stride == 0:
                rec[p, j] = y
                j += 1
        log_int[p] = math.log(acc * inv_n)
        end[p] = y


def _path_functionals_numpy(normals, sigma, drift, stride, rec, log_int, end):
    n_steps = normals.shape[1]
    y = np.cumsum(drift + sigma * normals, axis=1)
    e = np.exp(-2.0 * y)
    acc = 0.5 + e[:, :-1].sum(axis=1) + 0.5 * e[:, -1]
    log_int[:] = np.log(acc / n_steps)
    end[:] = y[:, -1]
    rec[:, 0] = 0.0
    rec[:, 1:] = y[:, stride - 1::stride]


def path_functionals(normals, sigma, drift, stride):
    """Cumulative paths y (recorded every ``stride`` steps, y(0) = 0 included),
    log of the trapezoid integral of exp(-2y) over [0,1], and y(1)."""
    n_paths, n_steps = normals.shape
    rec = np.empty((n_paths, n_steps // stride + 1))
    log_int = np.empty(n_paths)
    end = np.empty(n_paths)
    impl = _path_functionals_loop if NUMBA_ENABLED else _path_functionals_numpy
    impl(normals, float(sigma), float(drift), int(stride), rec, log_int, end)
    return rec, log_int, end


# --------------------------------------------------------------------------
# Askey-Wilson density in the angle variable

@jit
def _aw_theta_loop(theta, pr, pphi, qk, out):
    n = theta.shape[0]
    K = qk.shape[0]
    for i in range(n):
        th = theta[i]
        c2 = math.cos(2.0 * th)
        lg = 0.0
        for k in range(K):
            qq = qk[k]
            lg += math.log(1.0 - 2.0 * qq * c2 + qq * qq)
            for j in range(4):
                rq = pr[j] * qq
                lg -= math.log(1.0 - 2.0 * rq * math.cos(th + pphi[j]) + rq * rq)
        out[i] = lg


def _aw_theta_numpy(theta, pr, pphi, qk, out):
    th = theta[:, None]
    lg = np.log(1.0 - 2.0 * qk[None, :] * np.cos(2.0 * th) + qk[None, :] ** 2).sum(axis=1)
    for j in range(4):
        rq = pr[j] * qk[None, :]
        lg -= np.log(1.0 - 2.0 * rq * np.cos(th + pphi[j]) + rq * rq).sum(axis=1)
    out[:] = lg


def aw_log_theta_factor(theta, params, qk):
    """log |(e^{2i theta};q)_inf|^2 - sum_j log |(p_j e^{i theta};q)_inf|^2.

    |1 - p q^k e^{i theta}|^2 is written as 1 - 2 r q^k cos(theta + phi) + r^2 q^{2k}
    with p = r e^{i phi}, so all arithmetic is real.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    p = np.asarray(params, dtype=complex)
    pr = np.ascontiguousarray(np.abs(p))
    pphi = np.ascontiguousarray(np.angle(p))
    out = np.empty(theta.shape[0])
    impl = _aw_theta_loop if NUMBA_ENABLED else _aw_theta_numpy
    impl(theta, pr, pphi, np.ascontiguousarray(qk, dtype=float), out)
    return out


@jit
def _aw_pair_loop(theta, rho, phis, qk, out):
    # log of prod_k |1 - rho q^k e^{i(theta+phi)}|^2 |1 - rho q^k e^{i(theta-phi)}|^2
    m = phis.shape[0]
    n = theta.shape[0]
    K = qk.shape[0]
    for s in range(m):
        ph = phis[s]
        for i in range(n):
            th = theta[i]
            cp = math.cos(th + ph)
            cm = math.cos(th - ph)
            lg = 0.0
            for k in range(K):
                rq = rho * qk[k]
                r2 = rq * rq
                lg += math.log((1.0 - 2.0 * rq * cp + r2) * (1.0 - 2.0 * rq * cm + r2))
            out[s, i] = lg


def _aw_pair_numpy(theta, rho, phis, qk, out):
    rq = (rho * qk)[None, None, :]
    th = theta[None, :, None]
    ph = phis[:, None, None]
    val = np.log((1.0 - 2.0 * rq * np.cos(th + ph) + rq * rq) * (1.0 - 2.0 * rq * np.cos(th - ph) + rq * rq))
    out[:] = val.sum(axis=2)


def aw_log_pair_factor(theta, rho, phis, qk):
    """log |(rho e^{i phi} e^{i theta};q)(rho e^{-i phi} e^{i theta};q)|^2 for each phi (rows)."""
    theta = np.ascontiguousarray(theta, dtype=float)
    phis = np.ascontiguousarray(np.atleast_1d(phis), dtype=float)
    out = np.empty((phis.shape[0], theta.shape[0]))
    if NUMBA_ENABLED:
        _aw_pair_loop(theta, float(rho), phis, np.ascontiguousarray(qk, dtype=float), out)
    else:
        step = max(1, 2_000_000 // max(1, theta.size * qk.size))
        for i in range(0, phis.size, step):
            _aw_pair_numpy(theta, float(rho), phis[i:i + step], qk, out[i:i + step])
    return out
