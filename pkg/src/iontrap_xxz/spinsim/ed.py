"""Exact diagonalization: sector ground energies, magnetization curves and
finite-size saturation fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from ..model_map import ModelSpec, critical_field
from .hamiltonian import SpinHamiltonian, build_hamiltonian

DENSE_LIMIT = 4096


class EigensolverError(RuntimeError):
    pass


def sector_extremal(ham: SpinHamiltonian, n_up: int, h: float = 0.0) -> float:
    """Energy of the followed state of a sector: lowest for sign +1, highest for sign -1."""
    blk = ham.sector(n_up, h)
    dim = blk.shape[0]
    if dim <= DENSE_LIMIT:
        w = np.linalg.eigvalsh(blk.toarray())
        return float(w[0] if ham.sign > 0 else w[-1])
    try:
        w = eigsh(blk, k=1, which="SA" if ham.sign > 0 else "LA", tol=1e-12, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise EigensolverError(f"Lanczos did not converge in sector n_up={n_up} (dim {dim})") from exc
    return float(w[0])


def sector_energies(ham: SpinHamiltonian) -> dict:
    """Ferromagnetic ground energy at h=0 for every total S^Z."""
    return {ham.magnetization(k): ham.sign * sector_extremal(ham, k) for k in sorted(ham.blocks)}


def sector_crossings(energies: dict) -> list:
    """Fields at which the ground sector changes, from the lower convex hull.

    The ground sector at field h minimizes ``E(M) - h M``. Returns
    ``(h, M_below, M_above)`` triples in increasing h.
    """
    ms = sorted(energies)
    hull = []
    for m in ms:
        while len(hull) >= 2:
            m1, m2 = hull[-2], hull[-1]
            # drop m2 if it lies on or above the chord m1 -> m
            if (energies[m2] - energies[m1]) * (m - m1) >= (energies[m] - energies[m1]) * (m2 - m1):
                hull.pop()
            else:
                break
        hull.append(m)
    return [((energies[b] - energies[a]) / (b - a), a, b) for a, b in zip(hull, hull[1:])]


@dataclass(frozen=True, eq=False)
class EDResult:
    h: float
    sector_energies: dict  # total S^Z -> E0 including the field
    ground_sector: float
    m_z: float
    polarized_overlap: float


def ground_state_scan(model: ModelSpec | SpinHamiltonian, h_grid) -> list:
    """Ground sector, magnetization per site and polarized-state overlap for each h.

    Ties at an exact crossing resolve to the larger magnetization.
    """
    ham = model if isinstance(model, SpinHamiltonian) else build_hamiltonian(model)
    e0 = sector_energies(ham)
    top = ham.n / 2
    out = []
    for h in np.atleast_1d(np.asarray(h_grid, dtype=float)):
        eh = {m: e - h * m for m, e in e0.items()}
        best = min(eh.values())
        ground = max(m for m, e in eh.items() if e <= best + 1e-12 * max(1.0, abs(best)))
        out.append(EDResult(float(h), eh, ground, ground / ham.n, 1.0 if ground == top else 0.0))
    return out


def saturation_field(ham: SpinHamiltonian) -> float:
    """Field above which the fully polarized sector is the ground state."""
    crossings = sector_crossings(sector_energies(ham))
    if not crossings or crossings[-1][2] != ham.n / 2:
        return 0.0
    return max(crossings[-1][0], 0.0)


def single_magnon_field(model: ModelSpec) -> float:
    """Single-magnon instability of the polarized state: ``max eig S(J - lam diag(sum_j J))``."""
    j = model.coupling_matrix()
    m = model.S * (j - model.lam * np.diag(j.sum(axis=1)))
    return float(max(np.linalg.eigvalsh(m)[-1], 0.0))


@dataclass(frozen=True, eq=False)
class FiniteSizeReport:
    sizes: np.ndarray
    h_saturation: np.ndarray  # last sector crossing from ED
    h_single_magnon: np.ndarray
    h_mean_site: np.ndarray  # S (1 - lam) * average row sum
    h_max_site: np.ndarray
    h_infinite: float


def finite_size_hc(model: ModelSpec, sizes) -> FiniteSizeReport:
    """Saturation fields of finite chains compared with the mean-field sums."""
    if not 0 <= model.lam < 1:
        if model.lam == 1:
            z = np.zeros(len(sizes))
            return FiniteSizeReport(np.asarray(sizes), z, z, z, z, 0.0)
        raise ValueError("finite-size h_c needs 0 <= lambda <= 1")
    sat, single, mean, mx = [], [], [], []
    for n in sizes:
        m = model.with_(n_sites=int(n), couplings=None)
        sat.append(saturation_field(build_hamiltonian(m)))
        single.append(single_magnon_field(m))
        cf = critical_field(m)
        mean.append(float(cf.site_values.mean()))
        mx.append(cf.value)
    try:
        inf = critical_field(model.with_(n_sites=None, couplings=None)).value
    except (ValueError, NotImplementedError):
        inf = float("nan")
    return FiniteSizeReport(np.asarray(sizes), np.array(sat), np.array(single), np.array(mean), np.array(mx), inf)
