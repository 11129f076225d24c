import numpy as np
import pytest

from scramble.collective import (DickeState, build_floquet,
                                 build_lmg_hamiltonian)
from scramble.dynamics import (evolve_quench, magnetization_record, qfi,
                               square_commutator)
from scramble.entanglement import BlockPartition, block_entropy, tmi
from scramble.fulled import (FullState, build_longrange_hamiltonian,
                             coupling_matrix, embed_dicke_state, full_evolve,
                             full_floquet_sector_matrix, full_magnetization,
                             full_qfi, full_square_commutator, kac_norm,
                             min_tmi, partition_tmi, subsystem_entropy,
                             symmetric_sector_isometry,
                             total_spin_squared_expectation)


def test_coupling_matrix_alpha_zero_and_large():
    N = 10
    Jm = coupling_matrix(N, 0.0, 1.0)
    off = Jm[~np.eye(N, dtype=bool)]
    assert np.allclose(off, 1.0 / N)
    # alpha -> infinity: nearest-neighbor only, kac -> 1
    Jm = coupling_matrix(N, 60.0, 1.0)
    assert Jm[0, 1] == pytest.approx(1.0)
    assert abs(Jm[0, 2]) < 1e-15
    assert kac_norm(N, 0.0) == N


def test_size_guard():
    with pytest.raises(ValueError):
        build_longrange_hamiltonian(15, 0.0, 1.0, 1.0)


@pytest.mark.parametrize("N", [6, 8, 10])
def test_sector_restriction_matches_collective_hamiltonian(N):
    H_full = build_longrange_hamiltonian(N, 0.0, 1.0, 2.0).toarray()
    W = symmetric_sector_isometry(N)
    H_res = W.T @ H_full @ W
    H_col = build_lmg_hamiltonian(N, 1.0, 2.0).matrix.real
    # constant shift J/2 between the pair sum and the collective square
    shift = (H_res - H_col)[0, 0]
    assert shift == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.abs(H_res - H_col - shift * np.eye(N + 1))) <= 1e-10


def test_full_observables_match_sector_engine():
    N, J, hf = 8, 1.0, 2.0
    times = np.linspace(0.0, 4.0, 9)
    psi0_d = DickeState.polarized(N)
    H_d = build_lmg_hamiltonian(N, J, hf)
    states_d = evolve_quench(psi0_d, H_d, times)
    mz_d = magnetization_record(states_d, times)
    c_d = square_commutator(psi0_d, H_d, times)

    psi0_f = FullState.polarized(N)
    H_f = build_longrange_hamiltonian(N, 0.0, J, hf)
    states_f = full_evolve(psi0_f, H_f, times)
    mz_f = full_magnetization(states_f, times)
    c_f = full_square_commutator(psi0_f, H_f, times)

    assert np.max(np.abs(mz_d.values - mz_f.values)) <= 1e-10
    assert np.max(np.abs(c_d.values - c_f.values)) <= 1e-10
    for sd, sf in zip(states_d, states_f):
        assert full_qfi(sf) == pytest.approx(qfi(sd).f_q, abs=1e-10)


def test_full_entropies_and_tmi_match_sector_engine():
    N = 8
    times = [0.7, 2.3]
    psi0_d = DickeState.polarized(N)
    H_d = build_lmg_hamiltonian(N, 1.0, 2.0)
    H_f = build_longrange_hamiltonian(N, 0.0, 1.0, 2.0)
    states_d = evolve_quench(psi0_d, H_d, times)
    states_f = full_evolve(FullState.polarized(N), H_f, times)
    part = BlockPartition(1, 2, 3)
    for sd, sf in zip(states_d, states_f):
        for L in (1, 2, 3):
            s_sector = block_entropy(sd, [L])
            s_full = subsystem_entropy(sf, list(range(L)))
            assert abs(s_sector - s_full) <= 1e-10
        i3_sector = tmi(sd, part)
        i3_full = partition_tmi(sf, [0], [1, 2], [3, 4, 5])
        assert abs(i3_sector - i3_full) <= 1e-10


def test_full_floquet_matches_sector_floquet():
    N, K, h, tau = 8, 20.0, 2.0, 1.0
    U_sector = build_floquet(N, 1.0, h, K, tau).matrix
    U_res = full_floquet_sector_matrix(N, 0.0, 1.0, h, K, tau)
    # constant energy shift J/2 gives a global phase exp(-i tau J/2)
    phase = np.exp(-0.5j * tau)
    assert np.max(np.abs(U_res - phase * U_sector)) <= 1e-10


def test_total_spin_conserved_at_alpha_zero():
    N = 8
    H = build_longrange_hamiltonian(N, 0.0, 1.0, 2.0)
    states = full_evolve(FullState.polarized(N), H, [0.0, 1.7, 5.0])
    vals = [total_spin_squared_expectation(s) for s in states]
    S = N / 2
    assert np.allclose(vals, S * (S + 1), atol=1e-10)


def test_total_spin_not_conserved_at_large_alpha():
    N = 8
    H = build_longrange_hamiltonian(N, 2.5, 1.0, 2.0)
    states = full_evolve(FullState.polarized(N), H, [0.0, 2.0])
    v0 = total_spin_squared_expectation(states[0])
    v1 = total_spin_squared_expectation(states[1])
    assert abs(v1 - v0) > 1e-3


def test_product_state_tmi_zero_every_partition():
    psi = FullState.polarized(7)
    assert min_tmi(psi) == pytest.approx(0.0, abs=1e-10)
    assert partition_tmi(psi, [0], [1, 3], [4, 5]) == pytest.approx(0.0, abs=1e-10)


def test_partition_validation():
    psi = FullState.polarized(6)
    with pytest.raises(ValueError):
        partition_tmi(psi, [0, 1], [1, 2], [3])       # overlap
    with pytest.raises(ValueError):
        partition_tmi(psi, [0, 1], [2, 3], [4, 5])    # no remainder


def test_embedding_preserves_dicke_amplitudes():
    rng = np.random.default_rng(5)
    amp = rng.normal(size=7) + 1j * rng.normal(size=7)
    amp /= np.linalg.norm(amp)
    full = embed_dicke_state(amp)
    W = symmetric_sector_isometry(6)
    back = W.T @ full.amplitudes
    assert np.allclose(back, amp, atol=1e-14)


def test_noncontiguous_scan_small_system():
    # non-contiguous enumeration agrees with contiguous on a product state
    psi = FullState.polarized(5)
    assert min_tmi(psi, include_noncontiguous=True) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        min_tmi(FullState.polarized(11), include_noncontiguous=True)
