import numpy as np
import pytest

from scramble.collective import (DickeState, build_floquet,
                                 build_lmg_hamiltonian, build_parity,
                                 build_spin_operators, ground_state,
                                 magnetization_values, quench_initial_state)


def test_rejects_zero_size():
    with pytest.raises(ValueError):
        build_spin_operators(0)


def test_single_spin_matrices():
    sx, sy, sz = build_spin_operators(1)
    assert np.allclose(sz.matrix, np.diag([0.5, -0.5]))
    assert np.allclose(sx.matrix, 0.5 * np.array([[0, 1], [1, 0]]))
    assert np.allclose(sy.matrix, 0.5 * np.array([[0, -1j], [1j, 0]]))


def test_spin_one_matrices():
    sx, _, sz = build_spin_operators(2)
    assert np.allclose(np.diag(sz.matrix), [1, 0, -1])
    val = np.sqrt(2) / 2
    assert np.allclose(sx.matrix, [[0, val, 0], [val, 0, val], [0, val, 0]])


@pytest.mark.parametrize("N", [1, 2, 3, 8, 41, 100])
def test_commutation_relations(N):
    sx, sy, sz = (op.matrix for op in build_spin_operators(N))
    for a, b, c in ((sx, sy, sz), (sy, sz, sx), (sz, sx, sy)):
        assert np.max(np.abs(a @ b - b @ a - 1j * c)) <= 1e-10


@pytest.mark.parametrize("N", [2, 7, 30])
def test_total_spin_casimir(N):
    sx, sy, sz = (op.matrix for op in build_spin_operators(N))
    S = N / 2
    s2 = sx @ sx + sy @ sy + sz @ sz
    assert np.max(np.abs(s2 - S * (S + 1) * np.eye(N + 1))) <= 1e-10


def test_lmg_single_spin_spectrum():
    # H = -I/2 - sigma_x has eigenvalues -3/2 and 1/2
    H = build_lmg_hamiltonian(1, 1.0, 1.0)
    assert np.allclose(np.linalg.eigvalsh(H.matrix), [-1.5, 0.5])


def test_lmg_spectrum_even_in_field():
    for N in (5, 12):
        e_plus = np.linalg.eigvalsh(build_lmg_hamiltonian(N, 1.0, 0.7).matrix)
        e_minus = np.linalg.eigvalsh(build_lmg_hamiltonian(N, 1.0, -0.7).matrix)
        assert np.allclose(e_plus, e_minus, atol=1e-10)


def test_lmg_hermitian():
    H = build_lmg_hamiltonian(17, 1.3, 0.4)
    H.check()


def test_floquet_unitary_and_kickless_limit():
    N, J, h, tau = 12, 1.0, 2.0, 0.7
    U = build_floquet(N, J, h, 20.0, tau)
    U.check()
    # K = 0 reduces to plain evolution: U^n == exp(-i H n tau) on states
    U0 = build_floquet(N, J, h, 0.0, tau)
    H = build_lmg_hamiltonian(N, J, h)
    evals, evecs = np.linalg.eigh(H.matrix)
    psi = DickeState.polarized(N).amplitudes
    target = evecs @ (np.exp(-1j * evals * 3 * tau) * (evecs.conj().T @ psi))
    stepped = psi.copy()
    for _ in range(3):
        stepped = U0.matrix @ stepped
    assert np.max(np.abs(stepped - target)) <= 1e-10


def test_floquet_requires_positive_period():
    with pytest.raises(ValueError):
        build_floquet(4, 1.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("N", [2, 5, 100])
def test_parity_commutes_with_hamiltonian(N):
    P = build_parity(N)
    P.check()
    H = build_lmg_hamiltonian(N, 1.0, 2.0).matrix
    assert np.max(np.abs(P.matrix @ H - H @ P.matrix)) <= 1e-10


def test_parity_commutes_with_floquet():
    N = 24
    P = build_parity(N).matrix
    U = build_floquet(N, 1.0, 2.0, 20.0, 1.0).matrix
    assert np.max(np.abs(P @ U - U @ P)) <= 1e-10


@pytest.mark.parametrize("N", [3, 4, 9, 10])
def test_parity_square(N):
    # rotation by 2 pi: +I for integer spin, -I for half-integer spin
    P = build_parity(N).matrix
    sign = 1.0 if N % 2 == 0 else -1.0
    assert np.max(np.abs(P @ P - sign * np.eye(N + 1))) <= 1e-9


def test_parity_eigenvalue_classes():
    for N in (6, 7):
        P = build_parity(N).matrix
        evals = np.linalg.eigvals(P)
        expected = {np.round(np.exp(1j * np.pi * m), 6)
                    for m in magnetization_values(N)}
        got = {np.round(v, 6) for v in evals}
        assert got <= expected
        # the two classes partition the space
        assert len(got) == 2


def test_ground_state_and_quench_initial():
    N = 20
    gs = ground_state(build_lmg_hamiltonian(N, 1.0, 5.0))
    assert abs(gs.norm - 1.0) < 1e-12
    # deep paramagnet: polarized along +x, so <S_x> close to +N/2 or -N/2
    sx = build_spin_operators(N)[0].matrix
    mean_sx = np.vdot(gs.amplitudes, sx @ gs.amplitudes).real
    assert abs(abs(mean_sx) - N / 2) < 0.1
    # h0 = 0 picks the fully polarized member of the doublet
    psi = quench_initial_state(N, 1.0, 0.0)
    assert psi.amplitudes[0] == 1.0
