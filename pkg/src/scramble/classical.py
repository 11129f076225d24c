"""Classical limit on the unit sphere: flows, kicks, chaos diagnostics.

The mean-field equations of motion for the magnetization are

    dm_x/dt =  2 J m_y m_z
    dm_y/dt =  2 h m_z - 2 J m_x m_z
    dm_z/dt = -2 h m_y

with conserved energy per spin  H0 = -(J/2) m_z^2 - h m_x  and conserved
length |m| = 1.  Canonical coordinates are Q = m_z and the azimuth
P = atan2(m_y, m_x) / 2; the chart is singular at the poles, so all
integration is done in Cartesian components and (Q, P) quantities are
obtained by pushforward.  The periodic kick rotates (m_x, m_y) about the
z axis by the angle 2 K m_z, i.e. P -> P + K Q.

Fixed-step RK4 throughout; the state arrays carry a leading batch axis so
ensembles of trajectories integrate together.
"""

from __future__ import annotations

import numba
import numpy as np

from .records import TimeSeriesRecord


def flow_rhs(m: np.ndarray, J: float, h: float) -> np.ndarray:
    """Equations of motion; ``m`` has shape (..., 3)."""
    d = np.empty_like(m)
    d[..., 0] = 2.0 * J * m[..., 1] * m[..., 2]
    d[..., 1] = 2.0 * h * m[..., 2] - 2.0 * J * m[..., 0] * m[..., 2]
    d[..., 2] = -2.0 * h * m[..., 1]
    return d


def classical_energy(m: np.ndarray, J: float, h: float) -> np.ndarray:
    return -0.5 * J * m[..., 2] ** 2 - h * m[..., 0]


def canonical_coordinates(m: np.ndarray):
    """(Q, P) with P folded to its fundamental domain (-pi/2, pi/2]."""
    Q = m[..., 2]
    P = 0.5 * np.arctan2(m[..., 1], m[..., 0])
    return Q, P


@numba.njit(cache=True)
def _flow_steps(m, vs, J, h, dt, n_steps):
    """Jitted RK4: batch of trajectories (B, 3) plus tangent columns
    (B, k, 3) evolved by the linearized flow.

    The flow conserves |m| exactly, so any per-step drift beyond 1e-12 is
    integrator roundoff and gets rescaled back to the entry norm.
    """
    B = m.shape[0]
    k_tan = vs.shape[1]
    targets = np.empty(B)
    for b in range(B):
        targets[b] = m[b, 0] ** 2 + m[b, 1] ** 2 + m[b, 2] ** 2
    for _ in range(n_steps):
        for b in range(B):
            x, y, z = m[b, 0], m[b, 1], m[b, 2]
            k1x = 2 * J * y * z
            k1y = 2 * h * z - 2 * J * x * z
            k1z = -2 * h * y
            x2, y2, z2 = x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, z + 0.5 * dt * k1z
            k2x = 2 * J * y2 * z2
            k2y = 2 * h * z2 - 2 * J * x2 * z2
            k2z = -2 * h * y2
            x3, y3, z3 = x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, z + 0.5 * dt * k2z
            k3x = 2 * J * y3 * z3
            k3y = 2 * h * z3 - 2 * J * x3 * z3
            k3z = -2 * h * y3
            x4, y4, z4 = x + dt * k3x, y + dt * k3y, z + dt * k3z
            k4x = 2 * J * y4 * z4
            k4y = 2 * h * z4 - 2 * J * x4 * z4
            k4z = -2 * h * y4
            for t in range(k_tan):
                vx, vy, vz = vs[b, t, 0], vs[b, t, 1], vs[b, t, 2]
                l1x = 2 * J * (vy * z + y * vz)
                l1y = 2 * h * vz - 2 * J * (vx * z + x * vz)
                l1z = -2 * h * vy
                wx, wy, wz = vx + 0.5 * dt * l1x, vy + 0.5 * dt * l1y, vz + 0.5 * dt * l1z
                l2x = 2 * J * (wy * z2 + y2 * wz)
                l2y = 2 * h * wz - 2 * J * (wx * z2 + x2 * wz)
                l2z = -2 * h * wy
                wx, wy, wz = vx + 0.5 * dt * l2x, vy + 0.5 * dt * l2y, vz + 0.5 * dt * l2z
                l3x = 2 * J * (wy * z3 + y3 * wz)
                l3y = 2 * h * wz - 2 * J * (wx * z3 + x3 * wz)
                l3z = -2 * h * wy
                wx, wy, wz = vx + dt * l3x, vy + dt * l3y, vz + dt * l3z
                l4x = 2 * J * (wy * z4 + y4 * wz)
                l4y = 2 * h * wz - 2 * J * (wx * z4 + x4 * wz)
                l4z = -2 * h * wy
                vs[b, t, 0] = vx + dt / 6.0 * (l1x + 2 * l2x + 2 * l3x + l4x)
                vs[b, t, 1] = vy + dt / 6.0 * (l1y + 2 * l2y + 2 * l3y + l4y)
                vs[b, t, 2] = vz + dt / 6.0 * (l1z + 2 * l2z + 2 * l3z + l4z)
            x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            y += dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            z += dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
            n2 = x * x + y * y + z * z
            if abs(n2 - targets[b]) > 1e-12:   # rescale only past drift tol
                inv = np.sqrt(targets[b] / n2)
                x, y, z = x * inv, y * inv, z * inv
            m[b, 0], m[b, 1], m[b, 2] = x, y, z


@numba.njit(cache=True)
def _flow_mean_mz(m, J, h, dt, n_steps):
    """Jitted RK4 accumulating the per-step time average of m_z."""
    acc = 0.0
    work = m.reshape(1, 3)
    empty = np.zeros((1, 0, 3))
    for _ in range(n_steps):
        _flow_steps(work, empty, J, h, dt, 1)
        acc += work[0, 2]
    return acc / n_steps


def _as_batch(m0):
    m = np.array(m0, dtype=float)
    single = m.ndim == 1
    return (m[None, :] if single else m), single


def integrate_flow(m0, J, h, t_max, dt, n_out=None, with_tangent=False):
    """Trajectory (and optional 3x3 tangent matrix) under the flow.

    Returns (times, m) with m shaped (n_out+1, ..., 3), plus the tangent
    array when requested.  ``m0`` may carry a batch axis.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    m, single = _as_batch(m0)
    B = m.shape[0]
    n_steps = int(round(t_max / dt))
    if n_out is None:
        n_out = n_steps
    out_every = max(1, n_steps // max(n_out, 1))
    if with_tangent:
        vs = np.zeros((B, 3, 3))
        for j in range(3):
            vs[:, j, j] = 1.0          # column j of the identity
    else:
        vs = np.zeros((B, 0, 3))
    times, traj, tans = [0.0], [m.copy()], [vs.copy()]
    done = 0
    while done < n_steps:
        chunk = min(out_every, n_steps - done)
        _flow_steps(m, vs, J, h, dt, chunk)
        done += chunk
        times.append(done * dt)
        traj.append(m.copy())
        tans.append(vs.copy())
    times = np.array(times)
    traj = np.array(traj)
    if single:
        traj = traj[:, 0, :]
    if with_tangent:
        # columns back to matrices: T[i, j] = vs[j, i]
        T = np.swapaxes(np.array(tans), -1, -2)
        if single:
            T = T[:, 0]
        return times, traj, T
    return times, traj


def kick_rotation(m, K, dtheta_out=False):
    """Rotate (m_x, m_y) about z by 2 K m_z."""
    ang = 2.0 * K * m[..., 2]
    c, s = np.cos(ang), np.sin(ang)
    out = np.empty_like(m)
    out[..., 0] = c * m[..., 0] - s * m[..., 1]
    out[..., 1] = s * m[..., 0] + c * m[..., 1]
    out[..., 2] = m[..., 2]
    if dtheta_out:
        return out, ang
    return out


def kick_tangent(m, tangent, K):
    """Pushforward of the kick map applied to a tangent matrix.

    Differential of the rotation about z by 2 K m_z, including the chain
    rule through the m_z-dependent angle.
    """
    ang = 2.0 * K * m[..., 2]
    c, s = np.cos(ang), np.sin(ang)
    R = np.zeros(m.shape[:-1] + (3, 3))
    R[..., 0, 0] = c
    R[..., 0, 1] = -s
    R[..., 1, 0] = s
    R[..., 1, 1] = c
    R[..., 2, 2] = 1.0
    out = np.einsum("...ab,...bc->...ac", R, tangent)
    dx = -s * m[..., 0] - c * m[..., 1]
    dy = c * m[..., 0] - s * m[..., 1]
    dang = 2.0 * K * tangent[..., 2, :]          # row of dm_z/dm0
    out[..., 0, :] += dx[..., None] * dang
    out[..., 1, :] += dy[..., None] * dang
    return out


def kicked_map(m, J, h, K, tau, dt, tangent=None):
    """One period: free flow for tau, then the kick rotation."""
    n = max(1, int(round(tau / dt)))
    step = tau / n
    mb, single = _as_batch(m)
    if tangent is None:
        vs = np.zeros((mb.shape[0], 0, 3))
    else:
        # tangent columns: vs[b, j, :] = column j of the matrix
        tb = np.asarray(tangent, dtype=float)
        if single:
            tb = tb[None, ...]
        vs = np.ascontiguousarray(np.swapaxes(tb, -1, -2))
    _flow_steps(mb, vs, J, h, step, n)
    if tangent is not None:
        tb = np.swapaxes(vs, -1, -2)
        tb = kick_tangent(mb, tb, K)
        out = kick_rotation(mb, K)
        if single:
            return out[0], tb[0]
        return out, tb
    out = kick_rotation(mb, K)
    return out[0] if single else out


def poincare_section(seeds, n_periods, J, h, K, tau, dt=0.01):
    """Stroboscopic (Q, P) clouds, one array of shape (n_periods+1, 2) per seed."""
    m = np.array(seeds, dtype=float)
    single = m.ndim == 1
    if single:
        m = m[None, :]
    clouds = [[] for _ in range(m.shape[0])]
    Q, P = canonical_coordinates(m)
    for i in range(m.shape[0]):
        clouds[i].append((Q[i], P[i]))
    for _ in range(n_periods):
        m = kicked_map(m, J, h, K, tau, dt)
        Q, P = canonical_coordinates(m)
        for i in range(m.shape[0]):
            clouds[i].append((Q[i], P[i]))
    arrays = [np.array(c) for c in clouds]
    return arrays[0:1] if single else arrays


def section_occupancy(points, bins: int = 100) -> float:
    """Fraction of occupied cells of a bins x bins grid over (Q, P)."""
    Q, P = points[:, 0], points[:, 1]
    Hg, _, _ = np.histogram2d(Q, P, bins=bins,
                              range=[[-1.0, 1.0],
                                     [-np.pi / 2, np.pi / 2]])
    return float(np.count_nonzero(Hg)) / bins**2


def lyapunov_benettin(m0, J, h, K, tau, n_periods, renorm_every=1, dt=0.01,
                      seed=0):
    """Largest Lyapunov exponent by tangent propagation with renormalization.

    For K != 0 the unit of time is the kick period; ``renorm_every``
    counts periods (or time units for the flow case K = 0).  Returns
    (lambda, running) where ``running`` is the running estimate sampled at
    every renormalization, for convergence inspection.
    """
    rng = np.random.default_rng(seed)
    m = np.array(m0, dtype=float)[None, :]
    v = rng.normal(size=3)
    v -= (v @ m[0]) * m[0] / (m[0] @ m[0])    # start in the tangent plane
    v /= np.linalg.norm(v)
    vs = v[None, None, :].copy()
    log_sum = 0.0
    running = []
    if K == 0.0:
        block = max(1, int(round(renorm_every / dt)))
        n_blocks = int(np.ceil(n_periods / renorm_every))
        total_time = 0.0
        for _ in range(n_blocks):
            _flow_steps(m, vs, J, h, dt, block)
            total_time += block * dt
            g = np.linalg.norm(vs[0, 0])
            log_sum += np.log(g)
            vs /= g
            running.append(log_sum / total_time)
    else:
        steps_per_period = max(1, int(round(tau / dt)))
        step = tau / steps_per_period
        for n in range(1, n_periods + 1):
            _flow_steps(m, vs, J, h, step, steps_per_period)
            col = kick_tangent(m, np.swapaxes(vs, -1, -2), K)
            vs = np.ascontiguousarray(np.swapaxes(col, -1, -2))
            m = kick_rotation(m, K)
            if n % renorm_every == 0:
                g = np.linalg.norm(vs[0, 0])
                log_sum += np.log(g)
                vs /= g
                running.append(log_sum / (n * tau))
    running = np.array(running)
    return float(running[-1]), running


def separatrix_exponent(h: float) -> float:
    """Instability rate 2 sqrt(h (1 - h)) of the saddle at Q = 0, P = 0."""
    if not 0.0 < h < 1.0:
        raise ValueError("requires 0 < h < 1")
    return 2.0 * np.sqrt(h * (1.0 - h))


def classical_ground_state(J: float, h0: float) -> np.ndarray:
    """Phase-space point of the pre-quench ground orbit.

    Ferromagnetic for h0 < J (polarized branch with m_z > 0 selected),
    paramagnetic along +x for h0 >= J.
    """
    mx = min(abs(h0) / J, 1.0)
    return np.array([mx, 0.0, np.sqrt(max(0.0, 1.0 - mx**2))])


def dpt_order_parameter(h0, hf, J=1.0, T_avg=1000.0, dt=5e-3):
    """Time-averaged magnetization Q-bar after the quench h0 -> hf.

    Returns (Q_bar, h_c) with the critical field h_c = (h0 + 1) / 2.
    """
    m = classical_ground_state(J, h0)
    n = int(round(T_avg / dt))
    qbar = _flow_mean_mz(m, J, hf, dt, n)
    return float(qbar), (h0 + 1.0) / 2.0


def tangent_poisson_bracket(m0, J, h, times, dt=1e-3, metadata=None):
    """{Q(t), Q(0)} along the trajectory started at m0.

    Off the poles this equals dQ(t)/dP(0); the implementation uses the
    chart-free form  2 (m_x(0) a_y - m_y(0) a_x)  with a = gradient of
    m_z(t) with respect to m(0) from the Cartesian tangent matrix, which
    extends smoothly to the poles (where it vanishes with dQ(0)).
    """
    times = np.asarray(times, dtype=float)
    m = np.array(m0, dtype=float)[None, :]
    vs = np.zeros((1, 3, 3))
    for j in range(3):
        vs[0, j, j] = 1.0
    vals = np.empty(len(times))
    mx0, my0 = m0[0], m0[1]
    done = 0
    for idx, t in enumerate(times):
        step_target = int(round(t / dt))
        if step_target > done:
            _flow_steps(m, vs, J, h, dt, step_target - done)
            done = step_target
        # a_j = dm_z(t)/dm_j(0) is the z-entry of tangent column j
        vals[idx] = 2.0 * (mx0 * vs[0, 1, 2] - my0 * vs[0, 0, 2])
    meta = dict(metadata or {})
    meta.update({"J": J, "h": h, "dt": dt})
    return TimeSeriesRecord("poisson_bracket_QQ", times, vals, meta)


def bloch_from_canonical(Q: float, P: float) -> np.ndarray:
    r = np.sqrt(max(0.0, 1.0 - Q * Q))
    return np.array([r * np.cos(2 * P), r * np.sin(2 * P), Q])


def canonical_rhs(Q: float, P: float, J: float, h: float):
    """(dQ/dt, dP/dt) obtained by pushing the Cartesian flow through the
    chart; valid away from the poles Q = +-1."""
    m = bloch_from_canonical(Q, P)
    d = flow_rhs(m, J, h)
    r2 = m[0] ** 2 + m[1] ** 2
    dP = 0.5 * (m[0] * d[1] - m[1] * d[0]) / r2
    return d[2], dP


def canonical_tangent_map(m0, T3, m_t):
    """Pushforward of the Cartesian tangent matrix to a 2x2 map on (Q, P).

    Valid away from the poles; symplecticity makes its determinant 1.
    """
    def dcanon(m):
        r2 = m[0]**2 + m[1]**2
        return np.array([[0.0, 0.0, 1.0],
                         [-0.5 * m[1] / r2, 0.5 * m[0] / r2, 0.0]])

    def dinv(m):
        # columns: dm/dQ, dm/dP at fixed |m| = 1
        r2 = 1.0 - m[2]**2
        return np.array([[-m[2] * m[0] / r2, -2.0 * m[1]],
                         [-m[2] * m[1] / r2, 2.0 * m[0]],
                         [1.0, 0.0]])

    return dcanon(m_t) @ T3 @ dinv(np.asarray(m0, float))
