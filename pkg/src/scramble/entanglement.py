"""Entanglement measures for permutation-symmetric pure states.

A maximal-spin state of N spins is permutation symmetric, so the reduced
state of any k disjoint blocks lives on the product of the blocks'
symmetric subspaces and depends only on the block sizes.  The splitting
amplitude of the k-excitation Dicke state over blocks of sizes L_1..L_m
plus remainder R is hypergeometric,

    sqrt( prod_i C(L_i, k_i) * C(R, k_R) / C(N, k) ),

which this module evaluates in log space so N in the hundreds is exact to
rounding.  On top of the reduced states: von Neumann entropies, mutual
information, the tripartite mutual information, and the closed-form
reference values they saturate to under ergodic dynamics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import lgamma

import numpy as np
from scipy.special import ellipe, ellipk

from .collective import DickeState


@dataclass
class BlockPartition:
    """Sizes of blocks A, B, C; the remainder D = N - nA - nB - nC."""

    n_a: int
    n_b: int
    n_c: int

    def validate(self, N: int):
        sizes = (self.n_a, self.n_b, self.n_c)
        if min(sizes) < 1:
            raise ValueError("all block sizes must be >= 1")
        if sum(sizes) >= N:
            raise ValueError("blocks must leave a nonempty remainder D")
        return self


@dataclass
class SymmetricRDM:
    """Reduced density matrix on a product of symmetric subspaces."""

    block_sizes: tuple
    matrix: np.ndarray

    def check(self, tol: float = 1e-10):
        dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if dev > 1e-12:
            raise ValueError(f"RDM not Hermitian: {dev}")
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"RDM trace {tr} != 1")
        if np.min(np.linalg.eigvalsh(self.matrix)) < -tol:
            raise ValueError("RDM has significantly negative eigenvalues")
        return self


def _ln_binom(n, k):
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


def dicke_block_rdm(psi: DickeState, block_sizes) -> SymmetricRDM:
    """Reduced state of disjoint blocks of the given sizes.

    Splits each Dicke basis state over the blocks and the traced
    remainder, then contracts the remainder index.
    """
    N = psi.n_spins
    sizes = tuple(int(s) for s in block_sizes)
    if min(sizes) < 1:
        raise ValueError("block sizes must be positive")
    R = N - sum(sizes)
    if R < 0:
        raise ValueError("block sizes exceed the system size")
    dims = [s + 1 for s in sizes]
    dim_kept = int(np.prod(dims))
    amps = psi.amplitudes
    ln_cn = np.array([_ln_binom(N, k) for k in range(N + 1)])

    # T[(k_1..k_m), k_R] = c_{k_tot} * sqrt(prod C(L_i,k_i) C(R,k_R) / C(N,k_tot))
    T = np.zeros((dim_kept, R + 1), dtype=complex)
    for flat, ks in enumerate(itertools.product(*[range(d) for d in dims])):
        base = sum(_ln_binom(L, k) for L, k in zip(sizes, ks))
        k_blocks = sum(ks)
        for kr in range(R + 1):
            k_tot = k_blocks + kr
            w = np.exp(0.5 * (base + _ln_binom(R, kr) - ln_cn[k_tot]))
            T[flat, kr] = amps[k_tot] * w
    rho = T @ T.conj().T
    return SymmetricRDM(sizes, rho)


def von_neumann_entropy(rho: SymmetricRDM, floor: float = 1e-14) -> float:
    """S = -sum lambda ln lambda over eigenvalues above ``floor``."""
    tr = np.trace(rho.matrix).real
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"RDM trace {tr} deviates from 1")
    lam = np.linalg.eigvalsh(rho.matrix)
    lam = lam[lam > floor]
    return float(-np.sum(lam * np.log(lam)))


def block_entropy(psi: DickeState, block_sizes) -> float:
    return von_neumann_entropy(dicke_block_rdm(psi, block_sizes))


def mutual_information(psi: DickeState, n_a: int, n_b: int) -> float:
    """I(A:B) = S_A + S_B - S_AB for blocks of the given sizes."""
    return (block_entropy(psi, [n_a]) + block_entropy(psi, [n_b])
            - block_entropy(psi, [n_a, n_b]))


def tmi(psi: DickeState, partition: BlockPartition) -> float:
    """I3 = S_A + S_B + S_C - S_AB - S_AC - S_BC + S_ABC.

    Block-size dependence only: the state is permutation symmetric.
    """
    partition.validate(psi.n_spins)
    a, b, c = partition.n_a, partition.n_b, partition.n_c
    return (block_entropy(psi, [a]) + block_entropy(psi, [b])
            + block_entropy(psi, [c]) - block_entropy(psi, [a, b])
            - block_entropy(psi, [a, c]) - block_entropy(psi, [b, c])
            + block_entropy(psi, [a, b, c]))


def ergodic_tmi(n_a: int, n_b: int, n_c: int) -> float:
    """Ergodic plateau of the TMI on the symmetric sector.

    ln of (nA+1)(nB+1)(nC+1)(nA+nB+nC+1) /
          [(nA+nB+1)(nA+nC+1)(nB+nC+1)].
    """
    if min(n_a, n_b, n_c) < 1:
        raise ValueError("block sizes must be >= 1")
    num = (n_a + 1) * (n_b + 1) * (n_c + 1) * (n_a + n_b + n_c + 1)
    den = (n_a + n_b + 1) * (n_a + n_c + 1) * (n_b + n_c + 1)
    return float(np.log(num / den))


def page_entropy(m: int, n: int) -> float:
    """Mean entanglement entropy of a random pure state, ln m - m/(2n).

    ``m`` and ``n`` are the subsystem dimensions with m <= n; for a block
    of L spins inside the symmetric sector of N, m = L+1 and n = N-L+1.
    """
    if not 1 <= m <= n:
        raise ValueError("requires 1 <= m <= n")
    return float(np.log(m) - m / (2.0 * n))


def qfi_plateau_z(J: float, h: float) -> float:
    """Closed-form long-time average of the z-axis QFI density per spin.

    Equals the time variance of the longitudinal magnetization along the
    classical orbit started from the pole, expressed through incomplete
    elliptic integrals evaluated at the orbit inversion point.  Defined
    for k = J/(2h) >= 1, i.e. quenches below the dynamical critical
    field; the value lies in [0, 1/2] and vanishes at the separatrix
    k -> 1+.
    """
    k = J / (2.0 * h)
    if k < 1.0:
        raise ValueError(
            "qfi_plateau_z requires k = J/(2h) >= 1 (quench below the "
            "dynamical critical field)")
    F, E = _incomplete_elliptic_at_inversion(k)
    return float((k**2 - 1.0 + E / F - (np.pi / (2.0 * F))**2) / k**2)


def _incomplete_elliptic_at_inversion(k: float):
    """F(theta_k, k), E(theta_k, k) for modulus k >= 1, theta_k = arcsin(1/k).

    Uses the reciprocal-modulus transformation: with beta defined by
    sin(beta) = k sin(phi) these reduce to complete integrals of modulus
    1/k, since k sin(theta_k) = 1.
    """
    if k == 1.0:
        return np.inf, 1.0
    m = 1.0 / k**2          # scipy parameter = modulus^2
    K_c = ellipk(m)
    E_c = ellipe(m)
    F = K_c / k
    E = k * E_c - (k**2 - 1.0) / k * K_c
    return F, E
