"""Sector-blocked spin-1/2 XXZ Hamiltonians for finite chains.

Basis states are integers whose bit ``i`` is 1 when site ``i`` points up.
Each block holds the field-free part of

    H = -sum_{i<j} J_ij (Sx Sx + Sy Sy + lam Sz Sz) - h sum_i Sz_i

for a fixed number of up spins; the field only shifts a block by ``-h M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp

from ..model_map import ModelSpec

DEFAULT_CAP = 14


class SizeError(ValueError):
    pass


def sector_basis(n: int, n_up: int) -> np.ndarray:
    """Sorted integer states of ``n`` sites with ``n_up`` up spins."""
    if not 0 <= n_up <= n:
        raise ValueError(f"n_up={n_up} outside [0, {n}]")
    states = [sum(1 << i for i in c) for c in combinations(range(n), n_up)]
    return np.array(sorted(states), dtype=np.int64)


def state_bits(states: np.ndarray, n: int) -> np.ndarray:
    return (np.asarray(states)[:, None] >> np.arange(n)[None, :]) & 1


def _block(n, n_up, couplings, lam):
    basis = sector_basis(n, n_up)
    dim = len(basis)
    spins = state_bits(basis, n) - 0.5
    # s^T J s double counts every pair
    diag = -0.5 * lam * np.einsum("ai,ij,aj->a", spins, couplings, spins)
    rows, cols, vals = [np.arange(dim)], [np.arange(dim)], [diag]
    iu, ju = np.nonzero(np.triu(couplings, 1))
    for i, j in zip(iu, ju):
        bi = (basis >> i) & 1
        bj = (basis >> j) & 1
        src = np.flatnonzero(bi != bj)
        if src.size == 0:
            continue
        dst = np.searchsorted(basis, basis[src] ^ ((1 << int(i)) | (1 << int(j))))
        rows.append(src)
        cols.append(dst)
        vals.append(np.full(src.size, -0.5 * couplings[i, j]))
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    return basis, m.tocsr()


@dataclass(eq=False)
class SpinHamiltonian:
    """Field-free XXZ blocks keyed by the number of up spins.

    ``sign=-1`` stores ``-H`` (the antiferromagnetic implementation whose
    highest state is followed instead of the ground state).
    """

    n: int
    couplings: np.ndarray
    lam: float
    h: float = 0.0
    sign: int = 1
    bases: dict = field(default_factory=dict, repr=False)
    blocks: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return 2**self.n

    def magnetization(self, n_up: int) -> float:
        """Total S^Z of a sector."""
        return n_up - self.n / 2

    def sector(self, n_up: int, h: float | None = None) -> sp.csr_matrix:
        h = self.h if h is None else h
        blk = self.blocks[n_up]
        return blk + self.sign * (-h * self.magnetization(n_up)) * sp.identity(blk.shape[0], format="csr")

    def to_sparse(self, h: float | None = None) -> sp.csr_matrix:
        """Full 2^N matrix with rows indexed by the integer state."""
        h = self.h if h is None else h
        rows, cols, vals = [], [], []
        for n_up, blk in self.blocks.items():
            coo = self.sector(n_up, h).tocoo()
            basis = self.bases[n_up]
            rows.append(basis[coo.row])
            cols.append(basis[coo.col])
            vals.append(coo.data)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.dim, self.dim))


def memory_estimate(n: int) -> str:
    largest = comb(n, n // 2)
    return f"2^{n} = {2**n} states, largest sector {largest} ({largest**2 * 8 / 2**30:.2f} GiB dense)"


def build_hamiltonian(model: ModelSpec, *, cap: int = DEFAULT_CAP, antiferro: bool = False) -> SpinHamiltonian:
    """Sector-blocked Hamiltonian of a finite spin-1/2 chain described by ``model``."""
    if model.S != 0.5:
        raise ValueError("the simulator handles spin-1/2 only")
    if model.d != 1:
        raise ValueError("the simulator handles d=1 chains only")
    couplings = model.coupling_matrix()
    n = couplings.shape[0]
    if n > cap:
        raise SizeError(f"N={n} exceeds the cap of {cap} sites: {memory_estimate(n)}")
    ham = SpinHamiltonian(n, couplings, model.lam, model.h, -1 if antiferro else 1)
    for n_up in range(n + 1):
        basis, blk = _block(n, n_up, couplings, model.lam)
        ham.bases[n_up] = basis
        ham.blocks[n_up] = ham.sign * blk
    return ham


def total_sz(n: int) -> sp.dia_matrix:
    states = np.arange(2**n)
    return sp.diags(state_bits(states, n).sum(axis=1) - n / 2)


def total_sx(n: int) -> sp.csr_matrix:
    states = np.arange(2**n)
    rows = np.repeat(states, n)
    cols = (states[:, None] ^ (1 << np.arange(n))[None, :]).ravel()
    return sp.csr_matrix((np.full(rows.size, 0.5), (rows, cols)), shape=(2**n, 2**n))
