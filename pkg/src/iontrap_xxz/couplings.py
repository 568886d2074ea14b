"""Phonon-mediated spin-spin couplings and their power-law decay.

``J_ij = Omega^2 dk^2 hbar / (2M) * sum_l f_il f_jl / (Delta^2 - omega_l^2)``.
Below the centre-of-mass mode every denominator is negative and the couplings
are ferromagnetic-signed, ``J_ij ~ -J0 / r_ij**sigma``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import exponents
from .phonons import IonChain, PhononSpectrum, TrapSpec, equidistant_chain, longitudinal_modes, solve_equilibrium

logger = logging.getLogger(__name__)

RESONANCE_EXCLUSION = 1e-6  # minimum |Delta^2 - omega_l^2| in units of omega_z^2
DISTANCE_BIN = 1e-6
DEFAULT_COULOMB_RATIO = 0.02  # omega_c^2 / omega_z^2 for detuning sweeps
DEFAULT_SWEEP_RANGE = (1e-3, 49.0)  # dimensionless detuning


class ResonanceError(ValueError):
    def __init__(self, mode: int, gap: float):
        super().__init__(f"detuning is within the exclusion width of mode {mode} "
                         f"(|Delta^2 - omega_l^2| = {gap:.3e})")
        self.mode = mode


class PowerLawError(ValueError):
    """The couplings in the fit window are not describable by a single power law."""


@dataclass(frozen=True)
class BeamParams:
    rabi_frequency: float
    detuning: float
    wavevector: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.rabi_frequency < 0:
            raise ValueError("Rabi frequency must be non-negative")
        if self.detuning <= 0:
            raise ValueError("detuning must be positive")

    def below_com(self, axial_frequency: float = 1.0) -> bool:
        """True in the regime where the couplings decay as a power law."""
        return self.detuning < axial_frequency

    @property
    def prefactor(self) -> float:
        return self.rabi_frequency**2 * self.wavevector**2 * self.hbar / (2 * self.mass)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    values: np.ndarray
    positions: np.ndarray
    distance_unit: float = 1.0

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def distances(self) -> np.ndarray:
        u = np.asarray(self.positions, dtype=float)
        return np.abs(u[:, None] - u[None, :]) / self.distance_unit

    @classmethod
    def from_function(cls, positions, func, distance_unit: float = 1.0) -> CouplingMatrix:
        """Couplings ``func(r)`` of the scaled distance, for synthetic inputs."""
        u = np.asarray(positions, dtype=float)
        r = np.abs(u[:, None] - u[None, :]) / distance_unit
        off = ~np.eye(len(u), dtype=bool)
        vals = np.zeros_like(r)
        vals[off] = func(r[off])
        return cls(vals, u, distance_unit)


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float  # |J| at r = 1
    sigma: float
    max_relative_residual: float
    fit_window: tuple
    sign: float = -1.0
    n_distances: int = 0


def _reference_spacing(positions) -> float:
    u = np.asarray(positions)
    if len(u) < 2:
        return 1.0
    return IonChain(u, 0.0).center_spacing()


def effective_couplings(spectrum: PhononSpectrum, beam: BeamParams, *, axial_frequency: float = 1.0,
                        exclusion: float = RESONANCE_EXCLUSION) -> CouplingMatrix:
    """Exact mode sum for every ion pair; the diagonal is set to zero.

    ``beam.detuning`` is in the unit of ``axial_frequency`` (which scales the
    dimensionless mode frequencies). Distances are measured in the centre
    nearest-neighbour spacing.
    """
    w2 = (spectrum.frequencies * axial_frequency) ** 2
    gap = beam.detuning**2 - w2
    close = np.abs(gap) <= exclusion * axial_frequency**2
    if np.any(close):
        l = int(np.flatnonzero(close)[0])
        raise ResonanceError(l, abs(gap[l]))
    f = spectrum.mode_matrix
    j = beam.prefactor * (f / gap[None, :]) @ f.T
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return CouplingMatrix(j, spectrum.positions, _reference_spacing(spectrum.positions))


def fit_power_law(matrix: CouplingMatrix, window: tuple | None = None, *,
                  skip_edge_ions: int = 0) -> PowerLawFit:
    """Least-squares fit of ``log|J|`` against ``log r``.

    Pairs are binned by distance (tolerance 1e-6) and averaged before the fit.
    ``skip_edge_ions`` drops that many ions from each end of the chain.
    """
    n = matrix.n
    idx = np.arange(skip_edge_ions, n - skip_edge_ions)
    if len(idx) < 2:
        raise PowerLawError("not enough ions left after removing the edges")
    r = matrix.distances
    iu, ju = np.triu_indices(len(idx), 1)
    rr = r[idx[iu], idx[ju]]
    jj = matrix.values[idx[iu], idx[ju]]
    lo, hi = window if window is not None else (0.0, np.inf)
    keep = (rr >= lo - DISTANCE_BIN) & (rr <= hi + DISTANCE_BIN)
    rr, jj = rr[keep], jj[keep]
    if np.any(jj == 0) or (np.any(jj > 0) and np.any(jj < 0)):
        raise PowerLawError("couplings change sign or vanish inside the fit window")
    keys = np.round(rr / DISTANCE_BIN).astype(np.int64)
    uniq, inverse = np.unique(keys, return_inverse=True)
    if len(uniq) < 3:
        raise PowerLawError(f"need at least 3 distinct distances, found {len(uniq)}")
    mag = np.bincount(inverse, weights=np.abs(jj)) / np.bincount(inverse)
    dist = np.bincount(inverse, weights=rr) / np.bincount(inverse)
    x, y = np.log(dist), np.log(mag)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(np.exp(intercept + slope * x) - mag) / mag))
    return PowerLawFit(amplitude=math.exp(intercept), sigma=0.0 - float(slope),
                       max_relative_residual=resid, fit_window=(float(dist.min()), float(dist.max())),
                       sign=float(np.sign(jj[0])), n_distances=len(uniq))


def delta_tilde(detuning: float, coulomb_ratio: float, axial_frequency: float = 1.0) -> float:
    """``(omega_z^2 - Delta^2) / omega_c^2`` with ``coulomb_ratio = omega_c^2/omega_z^2``."""
    return (1.0 - (detuning / axial_frequency) ** 2) / coulomb_ratio


def detuning_for(delta_tilde_value, coulomb_ratio: float = DEFAULT_COULOMB_RATIO):
    """Inverse of :func:`delta_tilde`, in units of omega_z."""
    x = 1.0 - coulomb_ratio * np.asarray(delta_tilde_value, dtype=float)
    if np.any(x <= 0):
        raise ValueError("dimensionless detuning beyond 1/coulomb_ratio needs Delta <= 0")
    return np.sqrt(x)


def default_detuning_grid(coulomb_ratio: float = DEFAULT_COULOMB_RATIO, points: int = 200,
                          delta_tilde_range=DEFAULT_SWEEP_RANGE) -> np.ndarray:
    """Detunings (units of omega_z) giving log-spaced dimensionless detunings, ascending in Delta."""
    return np.sort(detuning_for(np.geomspace(*delta_tilde_range, points), coulomb_ratio))


@dataclass(frozen=True)
class DetuningPoint:
    delta: float
    delta_tilde: float
    sigma: float
    residual: float
    beta_z: float
    d_prefactor: float
    chain_mode: str


@dataclass
class SweepResult:
    points: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (chain_mode, delta, message)

    def series(self, chain_mode: str):
        pts = sorted((p for p in self.points if p.chain_mode == chain_mode), key=lambda p: p.delta_tilde)
        return pts


def sweep_geometry(n_ions: int, chain_mode: str) -> np.ndarray:
    """Ion positions in units of the centre spacing for the two chain models."""
    chain = solve_equilibrium(n_ions)
    u = chain.positions / chain.center_spacing()
    if chain_mode == "real":
        return u
    if chain_mode == "equidistant":
        return equidistant_chain(n_ions, 1.0).positions
    raise ValueError(f"unknown chain_mode {chain_mode!r}")


def detuning_sweep(spec: TrapSpec | int, chain_mode: str = "both", deltas=None, *,
                   coulomb_ratio: float = DEFAULT_COULOMB_RATIO, anisotropy: float = 0.5,
                   d: float = 1, spin: float = 0.5, with_prefactor: bool = True,
                   skip_edge_ions: int | None = None) -> SweepResult:
    """sigma, beta_Z and D across detunings below the centre-of-mass mode.

    The real chain keeps the uneven harmonic-trap geometry; both geometries use
    the Coulomb-to-trap ratio ``coulomb_ratio`` (omega_c^2 / omega_z^2), which
    only relabels detunings: J as a function of the dimensionless detuning is
    independent of it. Edge ions are excluded from the real-chain fit by default.
    """
    n = spec.ion_count if isinstance(spec, TrapSpec) else int(spec)
    modes = ("real", "equidistant") if chain_mode == "both" else (chain_mode,)
    deltas = default_detuning_grid(coulomb_ratio) if deltas is None else np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0) or np.any(deltas >= 1):
        raise ValueError("detunings must lie strictly inside (0, omega_z)")
    out = SweepResult()
    for mode in modes:
        u = sweep_geometry(n, mode)
        spectrum = longitudinal_modes(IonChain(u, 0.0), coulomb_strength=coulomb_ratio, check_residual=False)
        skip = (1 if mode == "real" else 0) if skip_edge_ions is None else skip_edge_ions
        for delta in deltas:
            try:
                j = effective_couplings(spectrum, BeamParams(1.0, float(delta)))
                fit = fit_power_law(j, skip_edge_ions=skip)
            except (ResonanceError, PowerLawError) as exc:
                logger.warning("sweep point %s Delta=%g failed: %s", mode, delta, exc)
                out.failures.append((mode, float(delta), str(exc)))
                continue
            beta = dpref = math.nan
            if fit.sigma > d:
                beta = exponents.exponent_set(fit.sigma, d).beta_z
                if with_prefactor:
                    dpref = exponents.prefactor_D(fit.sigma, d, anisotropy, spin)
            out.points.append(DetuningPoint(float(delta), delta_tilde(delta, coulomb_ratio), fit.sigma,
                                            fit.max_relative_residual, beta, dpref, mode))
    return out
