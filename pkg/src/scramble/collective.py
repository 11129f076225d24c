"""Operators and states on the maximal-spin (Dicke) sector of N spins-1/2.

The sector has total spin S = N/2 and dimension N + 1.  Basis states are
|S, M> ordered by decreasing magnetization M = S, S-1, ..., -S, so index 0
is the fully polarized state |up...up> and index k carries k flipped spins.

The infinite-range transverse-field Ising Hamiltonian on this sector is

    H = -(2 J / N) Sz^2 - 2 h Sx,

the form obtained from the pair-coupling chain at coupling J/N (spin-1/2
Pauli convention, constant shift dropped).  Note the sign of the field
term: the rescaled per-spin energy is -(J/2) m_z^2 - h m_x, which is the
convention every classical-limit routine in this package shares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalFailure(RuntimeError):
    """A linear-algebra kernel failed to converge or produced garbage."""


@dataclass
class DickeState:
    """Pure state on the S = N/2 sector: N+1 complex amplitudes."""

    n_spins: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if len(self.amplitudes) != self.n_spins + 1:
            raise ValueError("amplitude vector must have length N + 1")

    @classmethod
    def polarized(cls, n_spins: int) -> "DickeState":
        """|up...up>, the M = S basis state."""
        amp = np.zeros(n_spins + 1, dtype=complex)
        amp[0] = 1.0
        return cls(n_spins, amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self, tol: float = 1e-12):
        if abs(self.norm - 1.0) > tol:
            raise NumericalFailure(f"state norm drifted to {self.norm}")
        return self


@dataclass
class CollectiveOperator:
    """Dense operator on the Dicke sector with its structural flag."""

    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check(self, tol_h: float = 1e-12, tol_u: float = 1e-10):
        """Verify the declared structure; raise NumericalFailure if violated."""
        if self.hermitian:
            dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
            if dev > tol_h:
                raise NumericalFailure(f"hermiticity violated by {dev}")
        if self.unitary:
            eye = np.eye(self.dim)
            dev = np.max(np.abs(self.matrix @ self.matrix.conj().T - eye))
            if dev > tol_u:
                raise NumericalFailure(f"unitarity violated by {dev}")
        return self


def magnetization_values(N: int) -> np.ndarray:
    """M values S, S-1, ..., -S in basis order."""
    return N / 2.0 - np.arange(N + 1)


def build_spin_operators(N: int):
    """Collective spin matrices (Sx, Sy, Sz) on the Dicke sector.

    Sz is diagonal with entries M; the ladder matrix elements are
    sqrt(S(S+1) - M(M+1)).  Satisfies [Sx, Sy] = i Sz.
    """
    if N < 1:
        raise ValueError("system size N must be >= 1")
    S = N / 2.0
    M = magnetization_values(N)
    sz = np.diag(M).astype(complex)
    sp = np.zeros((N + 1, N + 1), dtype=complex)
    # S+ |S,M> = sqrt(S(S+1) - M(M+1)) |S,M+1>: raises M, index k -> k-1
    for k in range(1, N + 1):
        m = M[k]
        sp[k - 1, k] = np.sqrt(S * (S + 1) - m * (m + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / 2j
    return (CollectiveOperator(sx, hermitian=True),
            CollectiveOperator(sy, hermitian=True),
            CollectiveOperator(sz, hermitian=True))


def build_lmg_hamiltonian(N: int, J: float, h: float) -> CollectiveOperator:
    """H = -(2J/N) Sz^2 - 2h Sx on the Dicke sector."""
    if N < 1:
        raise ValueError("system size N must be >= 1")
    M = magnetization_values(N)
    sx = build_spin_operators(N)[0].matrix
    H = np.diag(-(2.0 * J / N) * M**2).astype(complex) - 2.0 * h * sx
    return CollectiveOperator(H, hermitian=True)


def eig_hermitian(op: CollectiveOperator):
    """Eigendecomposition of a Hermitian collective operator."""
    try:
        evals, evecs = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolve failed: {exc}") from exc
    return evals, evecs


def hermitian_exponential(op: CollectiveOperator, scale: complex) -> np.ndarray:
    """exp(scale * A) for Hermitian A via its eigendecomposition."""
    evals, evecs = eig_hermitian(op)
    return (evecs * np.exp(scale * evals)[None, :]) @ evecs.conj().T


def kick_phases(N: int, K: float) -> np.ndarray:
    """Diagonal of exp(-i (2K/N) Sz^2) in the Dicke basis."""
    M = magnetization_values(N)
    return np.exp(-1j * (2.0 * K / N) * M**2)


def build_floquet(N: int, J: float, h: float, K: float,
                  tau: float) -> CollectiveOperator:
    """One-period evolution U = exp(-i (2K/N) Sz^2) exp(-i H tau)."""
    if tau <= 0:
        raise ValueError("kick period tau must be positive")
    H = build_lmg_hamiltonian(N, J, h)
    expH = hermitian_exponential(H, -1j * tau)
    U = kick_phases(N, K)[:, None] * expH
    return CollectiveOperator(U, unitary=True)


def build_parity(N: int) -> CollectiveOperator:
    """The spin-flip rotation exp(i pi Sx).

    Commutes with the Hamiltonian and the Floquet operator; its
    eigenvalues are exp(i pi M), i.e. two phase classes that define the
    parity sectors (for odd N the classes are +-i rather than +-1).
    """
    sx = build_spin_operators(N)[0]
    return CollectiveOperator(hermitian_exponential(sx, 1j * np.pi),
                              unitary=True)


def ground_state(H: CollectiveOperator) -> DickeState:
    """Lowest eigenvector of a Hermitian collective operator."""
    evals, evecs = eig_hermitian(H)
    return DickeState(H.dim - 1, evecs[:, 0])


def quench_initial_state(N: int, J: float, h0: float) -> DickeState:
    """Pre-quench state: ground state of H(h0).

    At h0 = 0 the ferromagnetic ground doublet is degenerate; the fully
    polarized member |up...up> is selected.
    """
    if h0 == 0.0:
        return DickeState.polarized(N)
    return ground_state(build_lmg_hamiltonian(N, J, h0))
