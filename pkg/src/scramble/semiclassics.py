"""Phase-space Monte Carlo: continuous TWA and discrete TWA.

TWA samples the collective Bloch vector from the Gaussian Wigner function
of the polarized state (transverse variance 1/N) and evolves each sample
under the classical flow.  DTWA samples every site from the two-point
discrete Wigner table of |up> -- sigma_z = +1 and (sigma_x, sigma_y) =
+-(1, 1) with equal weight -- and evolves each site in the instantaneous
mean field of the others,

    d sigma_i/dt: x' = 2 B_i y,  y' = -2 B_i x + 2 h z,  z' = -2 h y,
    B_i = sum_j J_ij sigma_j^z,

which reduces to the collective flow when all sites coincide.  Kicks
rotate every site about z by (2K/N) sum_j sigma_j^z.

Square commutators come from tangent (variational) dynamics.  The
four-index sensitivity sum factorizes as D(t)^2 with

    D(t) = sum_j d sigma_j^z(t) pushed forward from the initial direction
           u_(i,x) = -sigma_i^y(0), u_(i,y) = +sigma_i^x(0),

so a single directional tangent per sample suffices instead of the full
(3N)^2 variational matrix.  Sampling uses counter-based per-sample Philox
streams, so draws are independent of evaluation order.

Estimator scale conventions (reported in record metadata): the TWA
estimator is hbar_eff^2 <{Q,Q}^2> with hbar_eff = 1/N and the DTWA one is
CAL_DTWA <D^2> / N^4.  Both calibration constants are fixed analytically
by matching the exact small-time growth 16 h^2 t^2 / N^3 of the quantum
square commutator, giving 1 and 4; they can be overridden per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .classical import flow_rhs, kick_rotation
from .records import TimeSeriesRecord

CAL_TWA = 1.0
CAL_DTWA = 4.0


def _sample_stream(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------- TWA ----

def twa_sample(N: int, n_samples: int, seed: int = 0) -> np.ndarray:
    """Initial Bloch vectors (n_samples, 3) from the polarized Wigner function.

    Transverse components are i.i.d. Gaussians with <m_x^2> = 1/N; the
    z component closes the unit norm.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    out = np.empty((n_samples, 3))
    sigma = 1.0 / np.sqrt(N)
    for i in range(n_samples):
        g = _sample_stream(seed, i)
        while True:
            x, y = g.normal(scale=sigma, size=2)
            r2 = x * x + y * y
            if r2 < 1.0:
                break
        out[i] = (x, y, np.sqrt(1.0 - r2))
    return out


def _twa_integrate(samples, J, h, times, K, tau, dt, tangent_dir=None,
                   observable=None):
    """Batched RK4 over TWA samples; returns per-time observable arrays."""
    times = np.asarray(times, dtype=float)
    m = np.array(samples, dtype=float)
    dm = None if tangent_dir is None else np.array(tangent_dir, dtype=float)
    steps_per_period = max(1, int(round(tau / dt))) if K != 0.0 else 0
    out = []
    t_now = 0.0
    step_index = 0

    def emit():
        if observable is not None:
            out.append(observable(m))
        else:
            out.append(dm[:, 2].copy())

    for tf in times:
        n = int(round((tf - t_now) / dt))
        for _ in range(n):
            k1 = flow_rhs(m, J, h)
            if dm is not None:
                l1 = _flow_tangent_rhs(m, dm, J, h)
                l2 = _flow_tangent_rhs(m + 0.5 * dt * k1, dm + 0.5 * dt * l1, J, h)
            k2 = flow_rhs(m + 0.5 * dt * k1, J, h)
            k3 = flow_rhs(m + 0.5 * dt * k2, J, h)
            if dm is not None:
                l3 = _flow_tangent_rhs(m + 0.5 * dt * k2, dm + 0.5 * dt * l2, J, h)
                l4 = _flow_tangent_rhs(m + dt * k3, dm + dt * l3, J, h)
                dm = dm + dt / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4)
            k4 = flow_rhs(m + dt * k3, J, h)
            m = m + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            step_index += 1
            if steps_per_period and step_index % steps_per_period == 0:
                if dm is not None:
                    dm = _kick_tangent_dir(m, dm, K)
                m = kick_rotation(m, K)
        t_now = tf
        emit()
    return np.array(out)


def _flow_tangent_rhs(m, dm, J, h):
    d = np.empty_like(dm)
    d[..., 0] = 2.0 * J * (dm[..., 1] * m[..., 2] + m[..., 1] * dm[..., 2])
    d[..., 1] = (2.0 * h * dm[..., 2]
                 - 2.0 * J * (dm[..., 0] * m[..., 2] + m[..., 0] * dm[..., 2]))
    d[..., 2] = -2.0 * h * dm[..., 1]
    return d


def _kick_tangent_dir(m, dm, K):
    ang = 2.0 * K * m[..., 2]
    c, s = np.cos(ang), np.sin(ang)
    dang = 2.0 * K * dm[..., 2]
    out = np.empty_like(dm)
    out[..., 0] = c * dm[..., 0] - s * dm[..., 1] \
        + (-s * m[..., 0] - c * m[..., 1]) * dang
    out[..., 1] = s * dm[..., 0] + c * dm[..., 1] \
        + (c * m[..., 0] - s * m[..., 1]) * dang
    out[..., 2] = dm[..., 2]
    return out


def twa_observable(samples, J, h, times, f=None, K=0.0, tau=1.0, dt=1e-3,
                   metadata=None) -> TimeSeriesRecord:
    """Ensemble average of f(m(t)); f defaults to the magnetization m_z."""
    if f is None:
        f = lambda m: m[..., 2]
    vals = _twa_integrate(samples, J, h, times, K, tau, dt,
                          observable=f).mean(axis=1)
    meta = dict(metadata or {})
    meta.update({"method": "twa", "J": J, "h": h, "K": K, "tau": tau,
                 "dt": dt, "n_samples": len(samples)})
    return TimeSeriesRecord("twa", np.asarray(times, float), vals, meta)


def twa_square_commutator(samples, N, J, h, times, K=0.0, tau=1.0, dt=1e-3,
                          calibration=CAL_TWA, metadata=None) -> TimeSeriesRecord:
    """hbar_eff^2 <{Q(t), Q(0)}^2> over the sampled Wigner distribution."""
    m0 = np.asarray(samples, dtype=float)
    u = np.zeros_like(m0)
    u[:, 0] = -2.0 * m0[:, 1]        # dm/dP at t=0
    u[:, 1] = 2.0 * m0[:, 0]
    brackets = _twa_integrate(m0, J, h, times, K, tau, dt, tangent_dir=u)
    if not np.all(np.isfinite(brackets)):
        raise FloatingPointError("tangent dynamics overflowed; reduce t_max")
    vals = calibration * (brackets**2).mean(axis=1) / N**2
    meta = dict(metadata or {})
    meta.update({"method": "twa", "observable": "square_commutator_mz",
                 "N": N, "J": J, "h": h, "K": K, "tau": tau, "dt": dt,
                 "n_samples": len(samples), "calibration": calibration})
    return TimeSeriesRecord("cqt", np.asarray(times, float), vals, meta)


# --------------------------------------------------------------- DTWA ----

@dataclass
class DiscreteSpinEnsemble:
    """Per-site classical spin components sampled from the discrete Wigner table."""

    configs: np.ndarray          # (n_samples, N, 3)
    rng_seed: int

    @property
    def n_samples(self) -> int:
        return self.configs.shape[0]

    @property
    def n_sites(self) -> int:
        return self.configs.shape[1]


@dataclass
class DtwaSnapshots:
    """Reduced per-sample data at the output times of a DTWA run.

    collective[t, s, a] = sum_i sigma_i^a ; diag[t, s, a] = sum_i (sigma_i^a)^2.
    ``configs`` holds full spin configurations when requested.
    """

    times: np.ndarray
    collective: np.ndarray
    diag: np.ndarray
    n_sites: int
    configs: np.ndarray | None = None
    metadata: dict | None = None


def dtwa_sample(N: int, n_samples: int, seed: int = 0) -> DiscreteSpinEnsemble:
    """Initial configurations: sigma_z = +1, (sigma_x, sigma_y) = +-(1,1)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    configs = np.empty((n_samples, N, 3))
    for i in range(n_samples):
        g = _sample_stream(seed, i)
        s = np.where(g.random(N) < 0.5, 1.0, -1.0)
        configs[i, :, 0] = s
        configs[i, :, 1] = s
        configs[i, :, 2] = 1.0
    return DiscreteSpinEnsemble(configs, seed)


def collective_couplings(N: int, J: float) -> np.ndarray:
    """All-to-all coupling matrix with unit row sums times J.

    Off-diagonal entries J/(N-1), so a symmetric configuration feels the
    mean field J m_z exactly and per-site trajectories reproduce the
    collective flow to machine precision.  Differs from the pair coupling
    J/N of the quantum chain at relative order 1/N, inside the accuracy
    of the method itself.
    """
    Jm = np.full((N, N), J / (N - 1))
    np.fill_diagonal(Jm, 0.0)
    return Jm


def _validate_couplings(couplings: np.ndarray):
    Jm = np.asarray(couplings, dtype=float)
    if Jm.ndim != 2 or Jm.shape[0] != Jm.shape[1]:
        raise ValueError("couplings must be a square matrix")
    if np.max(np.abs(Jm - Jm.T)) > 1e-12:
        raise ValueError("couplings must be symmetric")
    if np.max(np.abs(np.diag(Jm))) > 0:
        raise ValueError("couplings must have zero diagonal")
    return Jm


def _uniform_coupling(Jm: np.ndarray):
    """Pair strength if the matrix is uniform off-diagonal, else None."""
    N = Jm.shape[0]
    if N < 2:
        return None
    w = Jm[0, 1]
    off = Jm[~np.eye(N, dtype=bool)]
    if np.all(np.abs(off - w) <= 1e-15 * max(1.0, abs(w))):
        return float(w)
    return None


def _step_plan(times, dt, tau, K):
    """Map output times and kick times onto a common dt grid."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be strictly increasing and nonneg")
    steps = np.rint(times / dt).astype(np.int64)
    if np.max(np.abs(steps * dt - times)) > 1e-9 * max(1.0, times[-1]):
        raise ValueError("output times must be multiples of dt")
    kick_every = 0
    if K != 0.0:
        kick_every = int(round(tau / dt))
        if abs(kick_every * dt - tau) > 1e-12 * max(1.0, tau):
            raise ValueError("kick period tau must be a multiple of dt")
    return times, steps, kick_every


def dtwa_evolve(ensemble: DiscreteSpinEnsemble, couplings, h, times,
                K=0.0, tau=1.0, dt=0.01, store_configs=False,
                metadata=None) -> DtwaSnapshots:
    """Mean-field evolution of the ensemble, reduced at the output times."""
    Jm = _validate_couplings(couplings)
    times, steps, kick_every = _step_plan(times, dt, tau, K)
    ns, N = ensemble.n_samples, ensemble.n_sites
    collective = np.empty((len(times), ns, 3))
    diag = np.empty((len(times), ns, 3))
    bracket = np.empty((0, 0))
    configs_out = np.empty((len(times), ns, N, 3)) if store_configs \
        else np.empty((0, 0, 0, 0))
    w = _uniform_coupling(Jm)
    if w is not None:
        _kernel_uniform(ensemble.configs, w, h, K / N, kick_every, dt, steps,
                        False, collective, diag, bracket,
                        store_configs, configs_out)
    else:
        _kernel_general(ensemble.configs, Jm, h, K / N, kick_every, dt, steps,
                        False, collective, diag, bracket,
                        store_configs, configs_out)
    meta = dict(metadata or {})
    meta.update({"method": "dtwa", "h": h, "K": K, "tau": tau, "dt": dt,
                 "n_samples": ns, "N": N, "seed": ensemble.rng_seed})
    return DtwaSnapshots(times, collective, diag, N,
                         configs_out if store_configs else None, meta)


def dtwa_magnetization(snapshots: DtwaSnapshots) -> TimeSeriesRecord:
    vals = snapshots.collective[:, :, 2].mean(axis=1) / snapshots.n_sites
    return TimeSeriesRecord("mz", snapshots.times, vals,
                            dict(snapshots.metadata or {}))


def dtwa_qfi(snapshots: DtwaSnapshots) -> TimeSeriesRecord:
    """QFI density estimate with the flat Weyl-ordering correction.

    The sampled symbol of S_a^2 contains (sigma_i^a)^2 on the diagonal,
    which classically wanders away from the quantum value 1; replacing the
    sampled diagonal sum by its exact value N makes the t = 0 density
    exactly 1 in expectation.
    """
    N = snapshots.n_sites
    col = snapshots.collective
    dg = snapshots.diag
    # Var(S_a) = ( <col^2> - <diag> + N )/4 - (<col>/2)^2
    second = 0.25 * ((col**2).mean(axis=1) - dg.mean(axis=1) + N)
    first = 0.5 * col.mean(axis=1)
    fq = 4.0 * np.max(second - first**2, axis=1) / N
    return TimeSeriesRecord("qfi", snapshots.times, fq,
                            dict(snapshots.metadata or {}))


def dtwa_square_commutator(ensemble: DiscreteSpinEnsemble, couplings, h,
                           times, K=0.0, tau=1.0, dt=0.005,
                           calibration=CAL_DTWA,
                           metadata=None) -> TimeSeriesRecord:
    """Discrete-phase-space square commutator via directional tangents."""
    Jm = _validate_couplings(couplings)
    times, steps, kick_every = _step_plan(times, dt, tau, K)
    ns, N = ensemble.n_samples, ensemble.n_sites
    collective = np.empty((len(times), ns, 3))
    diag = np.empty((len(times), ns, 3))
    bracket = np.empty((len(times), ns))
    dummy = np.empty((0, 0, 0, 0))
    w = _uniform_coupling(Jm)
    if w is not None:
        _kernel_uniform(ensemble.configs, w, h, K / N, kick_every, dt, steps,
                        True, collective, diag, bracket, False, dummy)
    else:
        _kernel_general(ensemble.configs, Jm, h, K / N, kick_every, dt, steps,
                        True, collective, diag, bracket, False, dummy)
    if not np.all(np.isfinite(bracket)):
        raise FloatingPointError("tangent dynamics overflowed; reduce t_max")
    vals = calibration * (bracket**2).mean(axis=1) / N**4
    meta = dict(metadata or {})
    meta.update({"method": "dtwa", "observable": "square_commutator_mz",
                 "N": N, "h": h, "K": K, "tau": tau, "dt": dt,
                 "n_samples": ns, "seed": ensemble.rng_seed,
                 "calibration": calibration})
    return TimeSeriesRecord("cqt", times, vals, meta)


def dtwa_finite_difference_bracket(ensemble, couplings, h, times, dt=0.005,
                                   eps=1e-6):
    """Finite-difference cross-check of the tangent-propagated D(t)."""
    base = ensemble.configs
    u = np.zeros_like(base)
    u[..., 0] = -base[..., 1]
    u[..., 1] = base[..., 0]
    up = dtwa_evolve(DiscreteSpinEnsemble(base + eps * u, ensemble.rng_seed),
                     couplings, h, times, dt=dt)
    dn = dtwa_evolve(DiscreteSpinEnsemble(base - eps * u, ensemble.rng_seed),
                     couplings, h, times, dt=dt)
    return (up.collective[:, :, 2] - dn.collective[:, :, 2]) / (2 * eps)


# ------------------------------------------------------ numba kernels ----

@numba.njit(cache=True, inline="always")
def _site_rhs(sig, dsig, w, h, with_tan, k, l):
    """Mean-field RHS for uniform couplings; B_i = w (sum_j sz_j - sz_i)."""
    N = sig.shape[0]
    ssum = 0.0
    for i in range(N):
        ssum += sig[i, 2]
    if with_tan:
        dsum = 0.0
        for i in range(N):
            dsum += dsig[i, 2]
    for i in range(N):
        B = w * (ssum - sig[i, 2])
        k[i, 0] = 2.0 * B * sig[i, 1]
        k[i, 1] = -2.0 * B * sig[i, 0] + 2.0 * h * sig[i, 2]
        k[i, 2] = -2.0 * h * sig[i, 1]
        if with_tan:
            dB = w * (dsum - dsig[i, 2])
            l[i, 0] = 2.0 * (dB * sig[i, 1] + B * dsig[i, 1])
            l[i, 1] = -2.0 * (dB * sig[i, 0] + B * dsig[i, 0]) \
                + 2.0 * h * dsig[i, 2]
            l[i, 2] = -2.0 * h * dsig[i, 1]


@numba.njit(cache=True, inline="always")
def _site_rhs_general(sig, dsig, Jm, h, with_tan, k, l):
    N = sig.shape[0]
    for i in range(N):
        B = 0.0
        for j in range(N):
            B += Jm[i, j] * sig[j, 2]
        k[i, 0] = 2.0 * B * sig[i, 1]
        k[i, 1] = -2.0 * B * sig[i, 0] + 2.0 * h * sig[i, 2]
        k[i, 2] = -2.0 * h * sig[i, 1]
        if with_tan:
            dB = 0.0
            for j in range(N):
                dB += Jm[i, j] * dsig[j, 2]
            l[i, 0] = 2.0 * (dB * sig[i, 1] + B * dsig[i, 1])
            l[i, 1] = -2.0 * (dB * sig[i, 0] + B * dsig[i, 0]) \
                + 2.0 * h * dsig[i, 2]
            l[i, 2] = -2.0 * h * dsig[i, 1]


@numba.njit(cache=True, inline="always")
def _apply_kick(sig, dsig, kick_scale, with_tan):
    """Rotate every site about z by ang = kick_scale * sum_j sz_j."""
    N = sig.shape[0]
    ssum = 0.0
    for i in range(N):
        ssum += sig[i, 2]
    ang = kick_scale * ssum
    c, s = np.cos(ang), np.sin(ang)
    if with_tan:
        dsum = 0.0
        for i in range(N):
            dsum += dsig[i, 2]
        dang = kick_scale * dsum
    for i in range(N):
        x, y = sig[i, 0], sig[i, 1]
        if with_tan:
            dx, dy = dsig[i, 0], dsig[i, 1]
            dsig[i, 0] = c * dx - s * dy + (-s * x - c * y) * dang
            dsig[i, 1] = s * dx + c * dy + (c * x - s * y) * dang
        sig[i, 0] = c * x - s * y
        sig[i, 1] = s * x + c * y


@numba.njit(cache=True, inline="always")
def _rescue_norms(sig, targets):
    """Per-site precession conserves |sigma|; undo integrator drift."""
    for i in range(sig.shape[0]):
        n2 = sig[i, 0] ** 2 + sig[i, 1] ** 2 + sig[i, 2] ** 2
        if abs(n2 - targets[i]) > 1e-12:
            inv = np.sqrt(targets[i] / n2)
            sig[i, 0] *= inv
            sig[i, 1] *= inv
            sig[i, 2] *= inv


@numba.njit(cache=True, inline="always")
def _norm_targets(sig):
    out = np.empty(sig.shape[0])
    for i in range(sig.shape[0]):
        out[i] = sig[i, 0] ** 2 + sig[i, 1] ** 2 + sig[i, 2] ** 2
    return out


@numba.njit(cache=True, inline="always")
def _rk4_site_step(sig, dsig, w, h, dt, with_tan, k1, k2, k3, k4,
                   l1, l2, l3, l4, tmp, dtmp):
    N = sig.shape[0]
    _site_rhs(sig, dsig, w, h, with_tan, k1, l1)
    for i in range(N):
        for a in range(3):
            tmp[i, a] = sig[i, a] + 0.5 * dt * k1[i, a]
            if with_tan:
                dtmp[i, a] = dsig[i, a] + 0.5 * dt * l1[i, a]
    _site_rhs(tmp, dtmp, w, h, with_tan, k2, l2)
    for i in range(N):
        for a in range(3):
            tmp[i, a] = sig[i, a] + 0.5 * dt * k2[i, a]
            if with_tan:
                dtmp[i, a] = dsig[i, a] + 0.5 * dt * l2[i, a]
    _site_rhs(tmp, dtmp, w, h, with_tan, k3, l3)
    for i in range(N):
        for a in range(3):
            tmp[i, a] = sig[i, a] + dt * k3[i, a]
            if with_tan:
                dtmp[i, a] = dsig[i, a] + dt * l3[i, a]
    _site_rhs(tmp, dtmp, w, h, with_tan, k4, l4)
    for i in range(N):
        for a in range(3):
            sig[i, a] += dt / 6.0 * (k1[i, a] + 2 * k2[i, a]
                                     + 2 * k3[i, a] + k4[i, a])
            if with_tan:
                dsig[i, a] += dt / 6.0 * (l1[i, a] + 2 * l2[i, a]
                                          + 2 * l3[i, a] + l4[i, a])


@numba.njit(cache=True, inline="always")
def _rk4_site_step_general(sig, dsig, Jm, h, dt, with_tan, k1, k2, k3, k4,
                           l1, l2, l3, l4, tmp, dtmp):
    N = sig.shape[0]
    _site_rhs_general(sig, dsig, Jm, h, with_tan, k1, l1)
    for i in range(N):
        for a in range(3):
            tmp[i, a] = sig[i, a] + 0.5 * dt * k1[i, a]
            if with_tan:
                dtmp[i, a] = dsig[i, a] + 0.5 * dt * l1[i, a]
    _site_rhs_general(tmp, dtmp, Jm, h, with_tan, k2, l2)
    for i in range(N):
        for a in range(3):
            tmp[i, a] = sig[i, a] + 0.5 * dt * k2[i, a]
            if with_tan:
                dtmp[i, a] = dsig[i, a] + 0.5 * dt * l2[i, a]
    _site_rhs_general(tmp, dtmp, Jm, h, with_tan, k3, l3)
    for i in range(N):
        for a in range(3):
            tmp[i, a] = sig[i, a] + dt * k3[i, a]
            if with_tan:
                dtmp[i, a] = dsig[i, a] + dt * l3[i, a]
    _site_rhs_general(tmp, dtmp, Jm, h, with_tan, k4, l4)
    for i in range(N):
        for a in range(3):
            sig[i, a] += dt / 6.0 * (k1[i, a] + 2 * k2[i, a]
                                     + 2 * k3[i, a] + k4[i, a])
            if with_tan:
                dsig[i, a] += dt / 6.0 * (l1[i, a] + 2 * l2[i, a]
                                          + 2 * l3[i, a] + l4[i, a])


@numba.njit(cache=True, inline="always")
def _record(sig, dsig, with_tan, io, s, collective, diag, bracket,
            store_configs, configs_out):
    N = sig.shape[0]
    for a in range(3):
        tot = 0.0
        sq = 0.0
        for i in range(N):
            tot += sig[i, a]
            sq += sig[i, a] * sig[i, a]
        collective[io, s, a] = tot
        diag[io, s, a] = sq
    if with_tan:
        D = 0.0
        for i in range(N):
            D += dsig[i, 2]
        bracket[io, s] = D
    if store_configs:
        for i in range(N):
            for a in range(3):
                configs_out[io, s, i, a] = sig[i, a]


@numba.njit(parallel=True, cache=True)
def _kernel_uniform(configs, w, h, kick_scale, kick_every, dt, out_steps,
                    with_tan, collective, diag, bracket, store_configs,
                    configs_out):
    ns, N, _ = configs.shape
    n_total = out_steps[-1]
    for s in numba.prange(ns):
        sig = configs[s].copy()
        targets = _norm_targets(sig)
        dsig = np.zeros((N, 3))
        if with_tan:
            for i in range(N):
                dsig[i, 0] = -sig[i, 1]
                dsig[i, 1] = sig[i, 0]
        k1 = np.empty((N, 3)); k2 = np.empty((N, 3))
        k3 = np.empty((N, 3)); k4 = np.empty((N, 3))
        l1 = np.empty((N, 3)); l2 = np.empty((N, 3))
        l3 = np.empty((N, 3)); l4 = np.empty((N, 3))
        tmp = np.empty((N, 3)); dtmp = np.empty((N, 3))
        io = 0
        if out_steps[0] == 0:
            _record(sig, dsig, with_tan, 0, s, collective, diag, bracket,
                    store_configs, configs_out)
            io = 1
        for step in range(1, n_total + 1):
            _rk4_site_step(sig, dsig, w, h, dt, with_tan, k1, k2, k3, k4,
                           l1, l2, l3, l4, tmp, dtmp)
            _rescue_norms(sig, targets)
            if kick_every > 0 and step % kick_every == 0:
                _apply_kick(sig, dsig, kick_scale, with_tan)
            if io < len(out_steps) and step == out_steps[io]:
                _record(sig, dsig, with_tan, io, s, collective, diag,
                        bracket, store_configs, configs_out)
                io += 1


@numba.njit(parallel=True, cache=True)
def _kernel_general(configs, Jm, h, kick_scale, kick_every, dt, out_steps,
                    with_tan, collective, diag, bracket, store_configs,
                    configs_out):
    ns, N, _ = configs.shape
    n_total = out_steps[-1]
    for s in numba.prange(ns):
        sig = configs[s].copy()
        targets = _norm_targets(sig)
        dsig = np.zeros((N, 3))
        if with_tan:
            for i in range(N):
                dsig[i, 0] = -sig[i, 1]
                dsig[i, 1] = sig[i, 0]
        k1 = np.empty((N, 3)); k2 = np.empty((N, 3))
        k3 = np.empty((N, 3)); k4 = np.empty((N, 3))
        l1 = np.empty((N, 3)); l2 = np.empty((N, 3))
        l3 = np.empty((N, 3)); l4 = np.empty((N, 3))
        tmp = np.empty((N, 3)); dtmp = np.empty((N, 3))
        io = 0
        if out_steps[0] == 0:
            _record(sig, dsig, with_tan, 0, s, collective, diag, bracket,
                    store_configs, configs_out)
            io = 1
        for step in range(1, n_total + 1):
            _rk4_site_step_general(sig, dsig, Jm, h, dt, with_tan,
                                   k1, k2, k3, k4, l1, l2, l3, l4, tmp, dtmp)
            _rescue_norms(sig, targets)
            if kick_every > 0 and step % kick_every == 0:
                _apply_kick(sig, dsig, kick_scale, with_tan)
            if io < len(out_steps) and step == out_steps[io]:
                _record(sig, dsig, with_tan, io, s, collective, diag,
                        bracket, store_configs, configs_out)
                io += 1
