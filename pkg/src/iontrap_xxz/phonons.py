"""Equilibrium positions and longitudinal normal modes of a linear ion chain.

Positions are dimensionless, in units of the Coulomb length
``l = (Z^2 e^2 / (4 pi eps0 M omega_z^2))**(1/3)``, and mode frequencies are in
units of the axial trap frequency ``omega_z``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as ct
from scipy import optimize

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class EquilibriumError(RuntimeError):
    """The force-balance solver failed to converge."""


class ModeError(RuntimeError):
    """The axial Hessian is not positive definite."""


@dataclass(frozen=True)
class TrapSpec:
    """Linear Paul trap holding ``ion_count`` ions.

    In ``"dimensionless"`` mode only ``ion_count`` matters. In ``"physical"``
    mode the frequencies are angular (rad/s), the mass is in kg and the charge
    in multiples of the elementary charge.
    """

    ion_count: int
    axial_frequency: float = 1.0
    radial_frequency: float | None = None
    ion_mass: float | None = None
    ion_charge: float = 1.0
    length_scale_mode: str = "dimensionless"

    def __post_init__(self):
        if int(self.ion_count) != self.ion_count or self.ion_count < 1:
            raise ValueError(f"ion_count must be a positive integer, got {self.ion_count}")
        if self.length_scale_mode not in ("physical", "dimensionless"):
            raise ValueError(f"unknown length_scale_mode {self.length_scale_mode!r}")
        if self.axial_frequency <= 0 or self.ion_charge <= 0:
            raise ValueError("axial_frequency and ion_charge must be positive")
        if self.physical:
            if self.ion_mass is None or self.ion_mass <= 0:
                raise ValueError("physical trap needs a positive ion_mass")
            if self.radial_frequency is None or self.radial_frequency <= 0:
                raise ValueError("physical trap needs a positive radial_frequency")
            if self.radial_frequency <= self.axial_frequency:
                raise ValueError(
                    "radial_frequency must exceed axial_frequency for a linear chain "
                    f"(got {self.radial_frequency:g} <= {self.axial_frequency:g})"
                )

    @property
    def physical(self) -> bool:
        return self.length_scale_mode == "physical"

    @property
    def anisotropy(self) -> float:
        """omega_x / omega_z; nan when no radial frequency is given."""
        if self.radial_frequency is None:
            return float("nan")
        return self.radial_frequency / self.axial_frequency

    def length_scale(self) -> float:
        """Coulomb length in metres."""
        self._require_physical()
        q = self.ion_charge * ct.e
        return (q**2 / (4 * np.pi * ct.epsilon_0 * self.ion_mass * self.axial_frequency**2)) ** (1 / 3)

    def _require_physical(self):
        if not self.physical:
            raise ValueError("operation needs physical units; TrapSpec is dimensionless")


@dataclass(frozen=True, eq=False)
class IonChain:
    positions: np.ndarray
    residual: float

    @property
    def n(self) -> int:
        return len(self.positions)

    def center_spacing(self) -> float:
        """Nearest-neighbour spacing at the middle of the chain."""
        if self.n < 2:
            raise ValueError("a single ion has no spacing")
        gaps = np.diff(self.positions)
        return float(gaps[self.n // 2 - 1] if self.n % 2 == 0 else gaps[self.n // 2])


@dataclass(frozen=True, eq=False)
class PhononSpectrum:
    """Longitudinal modes: ``mode_matrix[i, l]`` is ion i's weight in mode l."""

    frequencies: np.ndarray
    mode_matrix: np.ndarray
    positions: np.ndarray = field(repr=False)
    coulomb_strength: float = 1.0

    @property
    def n(self) -> int:
        return len(self.frequencies)


def force_residual(u: np.ndarray) -> np.ndarray:
    """Dimensionless axial force on each ion (zero at equilibrium)."""
    u = np.asarray(u, dtype=float)
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def coulomb_hessian(u: np.ndarray) -> np.ndarray:
    """Coulomb part of the axial Hessian (a graph Laplacian, rows sum to zero)."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    if n == 1:
        return np.zeros((1, 1))
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    k = -2.0 / d**3
    np.fill_diagonal(k, -k.sum(axis=1))
    return k


def axial_hessian(u: np.ndarray, coulomb_strength: float = 1.0) -> np.ndarray:
    return np.eye(len(u)) + coulomb_strength * coulomb_hessian(u)


def _potential(u):
    d = np.abs(u[:, None] - u[None, :])
    iu = np.triu_indices(len(u), 1)
    return 0.5 * np.dot(u, u) + np.sum(1.0 / d[iu])


def _newton(u, max_iter):
    for _ in range(max_iter):
        f = force_residual(u)
        norm = np.max(np.abs(f))
        if norm < 1e-14:
            break
        step = np.linalg.solve(axial_hessian(u), f)
        t = 1.0
        while t > 1e-8:
            trial = u - t * step
            if np.all(np.diff(trial) > 0) and np.max(np.abs(force_residual(trial))) < norm:
                break
            t *= 0.5
        else:
            return u, False
        u = trial
    return u, True


def solve_equilibrium(spec: TrapSpec | int, max_iter: int = 200) -> IonChain:
    """Sorted equilibrium positions of the chain (units of the Coulomb length).

    Damped Newton from an evenly spaced guess of half-width ``0.8 N**0.56``;
    falls back to BFGS on the potential energy when Newton stalls.
    """
    n = spec.ion_count if isinstance(spec, TrapSpec) else int(spec)
    if n < 1:
        raise ValueError("need at least one ion")
    if n == 1:
        return IonChain(np.zeros(1), 0.0)

    u = np.linspace(-1.0, 1.0, n) * 0.8 * n**0.56
    u, ok = _newton(u, max_iter)
    if not ok:
        logger.info("Newton stalled for N=%d, falling back to potential minimization", n)
        res = optimize.minimize(
            _potential, u, jac=lambda x: force_residual(x), method="BFGS", options={"gtol": 1e-12}
        )
        u, _ = _newton(np.sort(res.x), max_iter)

    u = 0.5 * (u - u[::-1])
    residual = float(np.max(np.abs(force_residual(u))))
    if residual >= RESIDUAL_TOL:
        raise EquilibriumError(f"equilibrium for N={n} did not converge (residual {residual:.3e})")
    return IonChain(u, residual)


def equidistant_chain(n: int, spacing: float) -> IonChain:
    """Evenly spaced chain; ``residual`` reports its actual force imbalance."""
    if n < 2 or spacing <= 0:
        raise ValueError("need n >= 2 and spacing > 0")
    u = (np.arange(n) - (n - 1) / 2) * spacing
    return IonChain(u, float(np.max(np.abs(force_residual(u)))))


def longitudinal_modes(chain: IonChain, coulomb_strength: float = 1.0,
                       check_residual: bool = True) -> PhononSpectrum:
    """Normal modes of the axial Hessian ``1 + c * K(u)``.

    ``coulomb_strength`` c is 1 for a chain in its own harmonic trap. Other
    values model a chain whose geometry is fixed while the ratio
    ``omega_c**2 / omega_z**2`` is chosen freely (positions then in units of the
    spacing that defines ``omega_c``). Eigenvector signs are fixed so that the
    first ion's component is non-negative.
    """
    u = np.asarray(chain.positions, dtype=float)
    if check_residual and coulomb_strength == 1.0 and chain.residual >= RESIDUAL_TOL:
        raise ModeError(
            f"chain residual {chain.residual:.3e} is not an equilibrium; "
            "pass check_residual=False for non-equilibrium geometries"
        )
    a = axial_hessian(u, coulomb_strength)
    a = 0.5 * (a + a.T)
    w2, f = np.linalg.eigh(a)
    if w2[0] <= 0:
        raise ModeError(f"negative Hessian eigenvalue {w2[0]:.3e}; positions are not a stable equilibrium")
    signs = np.where(f[0] < 0, -1.0, 1.0)
    f = f * signs
    return PhononSpectrum(np.sqrt(w2), f, u.copy(), coulomb_strength)


def lamb_dicke_parameters(spec: TrapSpec, spectrum: PhononSpectrum, wavevector: float) -> np.ndarray:
    """``eta[i, l] = dk * f[i, l] * sqrt(hbar / (2 M omega_l))`` in SI units."""
    spec._require_physical()
    omega = spectrum.frequencies * spec.axial_frequency
    return wavevector * spectrum.mode_matrix * np.sqrt(ct.hbar / (2 * spec.ion_mass * omega))[None, :]


@dataclass(frozen=True, eq=False)
class RWAReport:
    carrier_ratio: np.ndarray  # eta[i, l] * Omega / |Delta - omega_l|
    dressing_ratio: np.ndarray  # Omega' / |Delta - omega_l|
    field_ratio: np.ndarray  # Omega_h / |Delta - omega_l|
    resonant_modes: list
    threshold: float

    @property
    def max_ratio(self) -> float:
        return float(max(self.carrier_ratio.max(), self.dressing_ratio.max(), self.field_ratio.max()))

    @property
    def passed(self) -> bool:
        return not self.resonant_modes and self.max_ratio < self.threshold


def check_rwa(spec: TrapSpec, spectrum: PhononSpectrum, rabi: float, dressing_rabi: float,
              field_rabi: float, detuning: float, *, eta: np.ndarray | None = None,
              wavevector: float | None = None, threshold: float = 0.1) -> RWAReport:
    """Margins of the rotating-wave conditions for every ion and mode.

    Rates share the unit of ``spec.axial_frequency`` (1 for a dimensionless
    trap). Exact resonances give infinite ratios and are listed, not raised.
    """
    if eta is None:
        if wavevector is None:
            raise ValueError("pass either eta or wavevector")
        eta = lamb_dicke_parameters(spec, spectrum, wavevector)
    eta = np.abs(np.asarray(eta, dtype=float))
    gap = np.abs(detuning - spectrum.frequencies * spec.axial_frequency)
    resonant = [int(l) for l in np.flatnonzero(gap == 0)]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(gap == 0, np.inf, 1.0 / np.where(gap == 0, 1.0, gap))
        carrier = np.where(np.isinf(inv)[None, :], np.inf, eta * rabi * inv[None, :])
        dressing = np.where(np.isinf(inv), np.inf, dressing_rabi * inv)
        fieldr = np.where(np.isinf(inv), np.inf, field_rabi * inv)
    return RWAReport(carrier, dressing, fieldr, resonant, threshold)
