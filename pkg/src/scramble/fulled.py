"""Brute-force backend on the full 2^N Hilbert space (N <= 14).

Serves as the oracle for every symmetric-sector quantity at alpha = 0 and
as the engine for finite-range couplings alpha != 0.  Site 0 is the most
significant bit; bit value 0 means spin up, so basis index 0 is
|up...up>.  The chain Hamiltonian is

    H = -(1/2) sum_{i != j} J_ij sz_i sz_j - h sum_i sx_i,
    J_ij = J |i - j|^(-alpha) / kac(N, alpha),

with open-boundary distances and Kac normalization kac = sum_r r^(-alpha)
over r = 1..N (Pauli matrices; at alpha = 0 this reduces to the pair
coupling J/N of the collective model up to a constant shift).

Dense Hermitian eigendecomposition drives the evolution up to N = 12;
beyond that states are stepped with the sparse Krylov exponential.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .records import TimeSeriesRecord

MAX_SITES = 14
DENSE_SITES = 12


@dataclass
class FullState:
    """Pure state on the full 2^N space."""

    n_spins: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if len(self.amplitudes) != 2 ** self.n_spins:
            raise ValueError("amplitude vector must have length 2^N")

    @classmethod
    def polarized(cls, N: int) -> "FullState":
        amp = np.zeros(2 ** N, dtype=complex)
        amp[0] = 1.0
        return cls(N, amp)


def kac_norm(N: int, alpha: float) -> float:
    return float(np.sum(np.arange(1, N + 1, dtype=float) ** (-alpha)))


def coupling_matrix(N: int, alpha: float, J: float) -> np.ndarray:
    """Kac-normalized open-chain couplings J_ij, zero diagonal."""
    idx = np.arange(N)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        Jm = J * dist ** (-alpha) / kac_norm(N, alpha)
    np.fill_diagonal(Jm, 0.0)
    return Jm


def _check_size(N: int):
    if N > MAX_SITES:
        raise ValueError(f"full-space backend is limited to N <= {MAX_SITES}")


@lru_cache(maxsize=32)
def site_sz_values(N: int) -> np.ndarray:
    """(N, 2^N) array of sz_i eigenvalues per basis state."""
    _check_size(N)
    n = np.arange(2 ** N, dtype=np.int64)
    bits = (n[None, :] >> (N - 1 - np.arange(N))[:, None]) & 1
    return 1.0 - 2.0 * bits


def build_longrange_hamiltonian(N: int, alpha: float, J: float, h: float):
    """Sparse CSR Hamiltonian of the long-range chain."""
    _check_size(N)
    sz = site_sz_values(N)
    Jm = coupling_matrix(N, alpha, J)
    diag = -0.5 * np.einsum("ij,ik,jk->k", Jm, sz, sz)
    H = sp.diags(diag, format="csr", dtype=float)
    dim = 2 ** N
    col = np.arange(dim, dtype=np.int64)
    for i in range(N):
        row = col ^ (1 << (N - 1 - i))
        H = H + sp.csr_matrix((-h * np.ones(dim), (row, col)), shape=(dim, dim))
    return H


def total_spin_operators(N: int):
    """Sparse (Sx, Sy, Sz) on the full space, spin-1/2 convention."""
    _check_size(N)
    dim = 2 ** N
    sz = site_sz_values(N)
    Sz = sp.diags(0.5 * sz.sum(axis=0), format="csr")
    col = np.arange(dim, dtype=np.int64)
    Sx = sp.csr_matrix((dim, dim), dtype=complex)
    Sy = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(N):
        row = col ^ (1 << (N - 1 - i))
        Sx = Sx + sp.csr_matrix((0.5 * np.ones(dim), (row, col)),
                                shape=(dim, dim))
        # sigma_y |up> = i |down>, sigma_y |down> = -i |up>
        vals = 0.5j * sz[i]
        Sy = Sy + sp.csr_matrix((vals, (row, col)), shape=(dim, dim))
    return Sx, Sy, Sz


def mz_diagonal(N: int) -> np.ndarray:
    """Eigenvalues of m_z = (1/N) sum_i sz_i per basis state."""
    return site_sz_values(N).sum(axis=0) / N


@lru_cache(maxsize=8)
def symmetric_sector_isometry(N: int) -> np.ndarray:
    """(2^N, N+1) isometry W mapping Dicke amplitudes to the full space.

    Column k spreads 1/sqrt(C(N,k)) over all configurations with k
    down-spins, matching the Dicke basis ordering M = S - k.
    """
    _check_size(N)
    dim = 2 ** N
    W = np.zeros((dim, N + 1))
    pop = np.array([bin(n).count("1") for n in range(dim)])
    for k in range(N + 1):
        sel = pop == k
        W[sel, k] = 1.0 / np.sqrt(comb(N, k))
    return W


def embed_dicke_state(amplitudes: np.ndarray) -> FullState:
    N = len(amplitudes) - 1
    W = symmetric_sector_isometry(N)
    return FullState(N, W @ np.asarray(amplitudes, dtype=complex))


class FullPropagator:
    """exp(-i H t) on the full space; dense spectral up to DENSE_SITES."""

    def __init__(self, H, N: int):
        self.N = N
        self.H = H
        if N <= DENSE_SITES:
            self.evals, self.evecs = np.linalg.eigh(H.toarray())
        else:
            self.evals = self.evecs = None

    def apply(self, psi: np.ndarray, t: float) -> np.ndarray:
        if self.evecs is not None:
            c = self.evecs.T @ psi            # eigenvectors are real
            return self.evecs @ (np.exp(-1j * self.evals * t) * c)
        if t == 0.0:
            return psi.copy()
        return expm_multiply(-1j * t * self.H.tocsc(), psi)

    def apply_reverse(self, psi: np.ndarray, t: float) -> np.ndarray:
        return self.apply(psi, -t)


def full_evolve(psi0: FullState, H, times) -> list:
    prop = FullPropagator(H, psi0.n_spins)
    return [FullState(psi0.n_spins, prop.apply(psi0.amplitudes, t))
            for t in times]


def full_magnetization(states, times, metadata=None) -> TimeSeriesRecord:
    N = states[0].n_spins
    mz = mz_diagonal(N)
    vals = [float(np.sum(mz * np.abs(s.amplitudes) ** 2)) for s in states]
    return TimeSeriesRecord("mz", np.asarray(times, float), vals,
                            metadata or {})


def full_square_commutator(psi0: FullState, H, times,
                           metadata=None) -> TimeSeriesRecord:
    """c(t) = ||[m_z(t), m_z] psi0||^2 by operator-vector chains."""
    prop = FullPropagator(H, psi0.n_spins)
    mz = mz_diagonal(psi0.n_spins)
    v = psi0.amplitudes
    vals = np.empty(len(times))
    for i, t in enumerate(times):
        a = prop.apply(mz * v, t)
        b = prop.apply(v, t)
        chi = prop.apply_reverse(mz * a, t) - mz * prop.apply_reverse(mz * b, t)
        vals[i] = np.real(np.vdot(chi, chi))
    meta = dict(metadata or {})
    meta.setdefault("observable", "square_commutator_mz")
    return TimeSeriesRecord("cqt", np.asarray(times, float), vals, meta)


def full_qfi(psi: FullState) -> float:
    """QFI density 4 max_dir Var(S_dir) / N of a full-space pure state."""
    N = psi.n_spins
    v = psi.amplitudes
    best = 0.0
    for S in total_spin_operators(N):
        sv = S @ v
        var = np.real(np.vdot(sv, sv)) - np.real(np.vdot(v, sv)) ** 2
        best = max(best, var)
    return 4.0 * best / N


def full_qfi_record(states, times, metadata=None) -> TimeSeriesRecord:
    vals = [full_qfi(s) for s in states]
    return TimeSeriesRecord("qfi", np.asarray(times, float), vals,
                            metadata or {})


def full_floquet_sector_matrix(N, alpha, J, h, K, tau) -> np.ndarray:
    """The full-space Floquet operator restricted to the symmetric sector.

    Returns W^dag U W, an (N+1) x (N+1) matrix comparable to the
    collective Floquet operator at alpha = 0.
    """
    H = build_longrange_hamiltonian(N, alpha, J, h)
    prop = FullPropagator(H, N)
    W = symmetric_sector_isometry(N).astype(complex)
    cols = np.column_stack([prop.apply(W[:, k], tau) for k in range(N + 1)])
    Sz_diag = 0.5 * site_sz_values(N).sum(axis=0)
    kick = np.exp(-1j * (2.0 * K / N) * Sz_diag ** 2)
    return W.conj().T @ (kick[:, None] * cols)


# ----------------------------------------------------- partial traces ----

def reduced_density_matrix(psi: FullState, sites) -> np.ndarray:
    """RDM of the given site set (any subset, not only contiguous)."""
    N = psi.n_spins
    keep = sorted(sites)
    if len(set(keep)) != len(keep) or not all(0 <= s < N for s in keep):
        raise ValueError("invalid site subset")
    rest = [s for s in range(N) if s not in keep]
    tens = psi.amplitudes.reshape((2,) * N)
    M = np.transpose(tens, keep + rest).reshape(2 ** len(keep), 2 ** len(rest))
    return M @ M.conj().T


def subsystem_entropy(psi: FullState, sites, floor=1e-14) -> float:
    lam = np.linalg.eigvalsh(reduced_density_matrix(psi, sites))
    lam = lam[lam > floor]
    return float(-np.sum(lam * np.log(lam)))


class _EntropyCache:
    def __init__(self, psi: FullState):
        self.psi = psi
        self.cache = {}

    def __call__(self, sites) -> float:
        key = frozenset(sites)
        if key not in self.cache:
            self.cache[key] = subsystem_entropy(self.psi, list(key))
        return self.cache[key]


def partition_tmi(psi: FullState, block_a, block_b, block_c,
                  entropy=None) -> float:
    """I3(A:B:C) from explicit partial traces; D is the rest of the chain."""
    blocks = [list(block_a), list(block_b), list(block_c)]
    all_sites = sum(blocks, [])
    if len(set(all_sites)) != len(all_sites):
        raise ValueError("blocks must be disjoint")
    if len(all_sites) >= psi.n_spins:
        raise ValueError("blocks must leave a nonempty remainder")
    S = entropy or _EntropyCache(psi)
    a, b, c = blocks
    return (S(a) + S(b) + S(c) - S(a + b) - S(a + c) - S(b + c)
            + S(a + b + c))


def contiguous_partitions(N: int):
    """All splittings of the chain into four contiguous nonempty blocks."""
    for i in range(1, N - 2):
        for j in range(i + 1, N - 1):
            for k in range(j + 1, N):
                yield ([*range(0, i)], [*range(i, j)],
                       [*range(j, k)], [*range(k, N)])


def min_tmi(psi: FullState, include_noncontiguous=False) -> float:
    """Minimum of I3 over partitions A, B, C, D.

    Contiguous four-block splittings by default, with each block taking a
    turn as the traced remainder D; the exhaustive non-contiguous scan is
    exponentially large and only allowed for N <= 10.
    """
    S = _EntropyCache(psi)
    best = np.inf
    for blocks in contiguous_partitions(psi.n_spins):
        for d in range(4):
            abc = [blocks[k] for k in range(4) if k != d]
            best = min(best, partition_tmi(psi, *abc, entropy=S))
    if include_noncontiguous:
        if psi.n_spins > 10:
            raise ValueError("non-contiguous scan limited to N <= 10")
        for assignment in itertools.product(range(4), repeat=psi.n_spins):
            groups = [[], [], [], []]
            for site, g in enumerate(assignment):
                groups[g].append(site)
            if any(len(g) == 0 for g in groups):
                continue
            best = min(best, partition_tmi(psi, *groups[:3], entropy=S))
    return float(best)


def total_spin_squared_expectation(psi: FullState) -> float:
    """<S^2> = <Sx^2 + Sy^2 + Sz^2>; conserved at alpha = 0."""
    v = psi.amplitudes
    out = 0.0
    for S in total_spin_operators(psi.n_spins):
        sv = S @ v
        out += np.real(np.vdot(sv, sv))
    return float(out)
