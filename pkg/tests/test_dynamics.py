import numpy as np
import pytest

from scramble.collective import (DickeState, build_floquet,
                                 build_lmg_hamiltonian, build_spin_operators,
                                 ground_state)
from scramble.dynamics import (evolve_kicked, evolve_quench,
                               magnetization_record, qfi, qfi_record,
                               revival_time, square_commutator,
                               two_time_correlator)
from scramble.fitting import fit_power_law
from scramble.records import TimeSeriesRecord


def test_eigenstate_is_stationary():
    N = 10
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    psi0 = ground_state(H)
    for psi in evolve_quench(psi0, H, [0.0, 1.3, 7.7]):
        overlap = abs(np.vdot(psi0.amplitudes, psi.amplitudes))
        assert abs(overlap - 1.0) < 1e-12


def test_norm_and_energy_conservation():
    N = 40
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    psi0 = DickeState.polarized(N)
    e0 = np.vdot(psi0.amplitudes, H.matrix @ psi0.amplitudes).real
    scale = np.max(np.abs(np.linalg.eigvalsh(H.matrix)))
    for psi in evolve_quench(psi0, H, np.linspace(0, 50, 26)):
        assert abs(psi.norm - 1.0) <= 1e-12
        e = np.vdot(psi.amplitudes, H.matrix @ psi.amplitudes).real
        assert abs(e - e0) <= 1e-10 * scale


def test_kicked_identity_and_consistency():
    N = 16
    U = build_floquet(N, 1.0, 2.0, 20.0, 1.0)
    psi0 = DickeState.polarized(N)
    states = evolve_kicked(psi0, U, 0)
    assert len(states) == 1
    assert np.array_equal(states[0].amplitudes, psi0.amplitudes)
    # K=0 stroboscopic evolution equals the quench at integer times
    U0 = build_floquet(N, 1.0, 2.0, 0.0, 1.0)
    kicked = evolve_kicked(psi0, U0, 5)
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    quenched = evolve_quench(psi0, H, np.arange(6.0))
    for a, b in zip(kicked, quenched):
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-10


def test_square_commutator_basics():
    N = 30
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    psi0 = DickeState.polarized(N)
    rec = square_commutator(psi0, H, [0.0, 0.5, 1.0, 3.0])
    assert rec.values[0] <= 1e-24
    assert np.all(rec.values >= 0.0)
    assert np.all(rec.values <= 4.0)        # ||m_z|| <= 1 bound


def test_square_commutator_dense_vs_chain_paths():
    # the two evaluation strategies are algebraically identical
    from scramble import dynamics
    N = 24
    H = build_lmg_hamiltonian(N, 1.0, 0.8)
    psi0 = DickeState.polarized(N)
    times = [0.3, 1.7, 4.0]
    dense = square_commutator(psi0, H, times)
    saved = dynamics.DENSE_LIMIT
    try:
        dynamics.DENSE_LIMIT = 0
        chains = square_commutator(psi0, H, times)
    finally:
        dynamics.DENSE_LIMIT = saved
    assert np.allclose(dense.values, chains.values, rtol=0, atol=1e-13)


def test_square_commutator_early_time_quantum_value():
    # c(t) -> 16 h^2 t^2 / N^3 as t -> 0 on the polarized state
    N, h = 60, 2.0
    H = build_lmg_hamiltonian(N, 1.0, h)
    psi0 = DickeState.polarized(N)
    t = 0.01
    rec = square_commutator(psi0, H, [t])
    assert rec.values[0] == pytest.approx(16 * h**2 * t**2 / N**3, rel=2e-3)


def test_early_growth_exponent_and_collapse():
    # N^3-scaled curves collapse and the early log-log slope is 2
    curves = {}
    times = np.linspace(0.01, 0.5, 50)
    for N in (100, 200):
        psi0 = DickeState.polarized(N)
        H = build_lmg_hamiltonian(N, 1.0, 2.0)
        rec = square_commutator(psi0, H, times)
        curves[N] = rec.values * N**3
        slope = fit_power_law(rec, (0.01, 0.1)).exponent
        assert slope == pytest.approx(2.0, abs=0.1)
    spread = np.abs(curves[100] - curves[200]) / curves[200]
    assert np.max(spread) < 0.05


def test_qfi_polarized_state():
    N = 50
    res = qfi(DickeState.polarized(N))
    assert res.f_q == pytest.approx(1.0, rel=1e-12)
    assert res.per_axis["x"] == pytest.approx(1.0, rel=1e-12)
    assert res.per_axis["y"] == pytest.approx(1.0, rel=1e-12)
    assert res.per_axis["z"] == pytest.approx(0.0, abs=1e-12)


def test_qfi_covariance_at_least_axis_value():
    N = 14
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    psi = evolve_quench(DickeState.polarized(N), H, [1.7])[0]
    res = qfi(psi, covariance=True)
    assert res.f_q_covariance >= res.f_q - 1e-12


def test_two_time_correlator():
    N = 12
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    sx, sy, sz = build_spin_operators(N)
    from scramble.collective import CollectiveOperator
    mz = CollectiveOperator(sz.matrix / (N / 2), hermitian=True)
    psi0 = DickeState.polarized(N)
    # t = 0: <m_z^2> = 1 on the polarized state
    val = two_time_correlator(psi0, mz, mz, 0.0, H)
    assert val == pytest.approx(1.0, abs=1e-12)
    # Hermitian symmetry <A B(t)>* = <B(t) A>, checked against dense algebra
    t = 0.9
    evals, evecs = np.linalg.eigh(H.matrix)
    expt = evecs @ (np.exp(-1j * evals * t)[:, None] * evecs.conj().T)
    mz_t = expt.conj().T @ mz.matrix @ expt
    v = psi0.amplitudes
    forward = two_time_correlator(psi0, mz, mz, t, H)
    assert forward == pytest.approx(np.vdot(v, mz.matrix @ mz_t @ v), abs=1e-12)
    reverse = np.vdot(v, mz_t @ mz.matrix @ v)
    assert np.conj(forward) == pytest.approx(complex(reverse), abs=1e-12)


def test_revival_time_grows_linearly():
    t_recs = []
    sizes = (50, 100, 200)
    for N in sizes:
        times = np.linspace(0.0, 3.6 * N, int(3.6 * N / 0.05))
        psi0 = DickeState.polarized(N)
        H = build_lmg_hamiltonian(N, 1.0, 2.0)
        states = evolve_quench(psi0, H, times)
        rec = magnetization_record(states, times)
        t_recs.append(revival_time(rec))
    x = np.array(sizes, dtype=float)
    y = np.array(t_recs)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    r2 = 1 - res[0] / np.sum((y - y.mean()) ** 2)
    assert r2 >= 0.95
    assert coef[0] > 0


def test_qfi_record_and_magnetization_record_roundtrip():
    N = 8
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    times = np.linspace(0, 3, 7)
    states = evolve_quench(DickeState.polarized(N), H, times)
    rec = qfi_record(states, times, {"N": N})
    back = TimeSeriesRecord.from_csv(rec.to_csv())
    assert np.array_equal(back.values, rec.values)
    assert np.array_equal(back.times, rec.times)
