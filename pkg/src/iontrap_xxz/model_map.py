"""Laboratory knobs <-> XXZ model parameters, and the mean-field critical field.

The dressed Ising Hamiltonian maps onto the XXZ chain with
``J_ij = 2 |J_ij^eff| cos^2(theta)``, ``h = 2 Omega_h`` and
``lambda = 2 tan^2(theta)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

MAX_THETA = math.atan(1 / math.sqrt(2))  # lambda = 1, where the FM lobe closes


@dataclass(frozen=True)
class ExperimentParams:
    theta: float
    field_rabi: float = 0.0
    dressing_rabi: float = 1.0
    coupling_scale: float = 0.0  # J_0^eff, same unit as the Rabi rates

    def __post_init__(self):
        if not 0 <= self.theta < math.pi / 2:
            raise ValueError(f"theta must lie in [0, pi/2), got {self.theta}")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Parameters of the ferromagnetic XXZ model.

    ``couplings`` (an N x N symmetric array with zero diagonal) overrides the
    power law ``J0 / r**sigma``. ``n_sites=None`` with no explicit couplings
    means the infinite chain.
    """

    d: float = 1
    sigma: float | None = None
    lam: float = 0.0
    h: float = 0.0
    S: float = 0.5
    J0: float = 1.0
    couplings: np.ndarray | None = None
    n_sites: int | None = None
    boundary: str = "open"
    notes: tuple = field(default=())

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("anisotropy lambda must be non-negative")
        if self.S <= 0 or abs(2 * self.S - round(2 * self.S)) > 1e-12:
            raise ValueError(f"spin S must be a positive half-integer, got {self.S}")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.couplings is not None:
            c = np.asarray(self.couplings, dtype=float)
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise ValueError("couplings must be a square matrix")
            if not np.allclose(c, c.T, rtol=0, atol=1e-12 * max(1.0, np.abs(c).max())):
                raise ValueError("couplings must be symmetric")
            if np.any(np.diag(c) != 0):
                raise ValueError("couplings must have a zero diagonal")
            if self.n_sites is not None and self.n_sites != c.shape[0]:
                raise ValueError("n_sites disagrees with the coupling matrix size")
            object.__setattr__(self, "couplings", c)
            object.__setattr__(self, "n_sites", c.shape[0])
        elif self.sigma is None:
            raise ValueError("need either sigma or explicit couplings")

    def with_(self, **changes) -> ModelSpec:
        return replace(self, **changes)

    def coupling_matrix(self) -> np.ndarray:
        """Explicit couplings, or the power law on an ``n_sites`` chain."""
        if self.couplings is not None:
            return self.couplings
        if self.n_sites is None:
            raise ValueError("infinite chain has no coupling matrix; set n_sites")
        if self.d != 1:
            raise NotImplementedError("finite power-law lattices are built for d=1 only")
        i = np.arange(self.n_sites)
        r = np.abs(i[:, None] - i[None, :]).astype(float)
        if self.boundary == "periodic":
            r = np.minimum(r, self.n_sites - r)
        np.fill_diagonal(r, np.inf)
        return self.J0 / r**self.sigma


def riemann_zeta(s: float, cutoff: int = 10**6) -> float:
    """zeta(s) for s > 1: direct sum below ``cutoff`` plus an Euler-Maclaurin tail."""
    if s <= 1:
        raise ValueError(f"zeta(s) diverges for s <= 1 (got {s})")
    r = np.arange(cutoff - 1, 0, -1, dtype=float)
    head = float(np.sum(r**-s))
    R = float(cutoff)
    tail = (R ** (1 - s) / (s - 1) + 0.5 * R**-s + s * R ** (-s - 1) / 12
            - s * (s + 1) * (s + 2) * R ** (-s - 3) / 720)
    return head + tail


@dataclass(frozen=True, eq=False)
class CriticalField:
    """Saturation field h_c; site-resolved for finite (possibly uneven) chains."""

    value: float
    site_values: np.ndarray | None = None

    @property
    def minimum(self) -> float:
        return self.value if self.site_values is None else float(self.site_values.min())

    @property
    def center(self) -> float:
        if self.site_values is None:
            return self.value
        return float(self.site_values[(len(self.site_values) - 1) // 2])


def critical_field(model: ModelSpec) -> CriticalField:
    """Mean-field critical field ``h_c = S (1 - lambda) sum_j J_ij``.

    Infinite 1d chains use ``2 S (1 - lambda) J0 zeta(sigma)``. Finite chains
    report every site; ``value`` is the largest.
    """
    if not 0 <= model.lam <= 1:
        raise ValueError(f"critical field defined for 0 <= lambda <= 1, got {model.lam}")
    pref = model.S * (1 - model.lam)
    if model.couplings is None and model.n_sites is None:
        if model.sigma <= model.d:
            raise ValueError(f"coupling sum diverges for sigma={model.sigma} <= d={model.d}")
        if model.d != 1:
            raise NotImplementedError("infinite-lattice sums are implemented for d=1")
        return CriticalField(2 * pref * model.J0 * riemann_zeta(model.sigma))
    sites = pref * model.coupling_matrix().sum(axis=1)
    return CriticalField(float(sites.max()), sites)


def experiment_to_model(exp: ExperimentParams, coupling=None, *, sigma: float | None = None,
                        d: float = 1, S: float = 0.5, validity_threshold: float = 0.1) -> ModelSpec:
    """Map laser parameters (and optionally a coupling matrix) to a ModelSpec.

    ``coupling`` is anything with a ``values`` array of J^eff (a CouplingMatrix).
    A breach of ``|J0^eff| << Omega'`` is attached to ``notes`` and warned about.
    """
    if exp.dressing_rabi <= 0:
        raise ValueError("dressing Rabi frequency must be positive for the XXZ mapping")
    c2 = math.cos(exp.theta) ** 2
    lam = 2 * math.tan(exp.theta) ** 2
    notes = []
    ratio = abs(exp.coupling_scale) / exp.dressing_rabi
    if ratio > validity_threshold:
        msg = f"|J0_eff|/Omega' = {ratio:.3g} exceeds {validity_threshold:g}; dressing approximation is poor"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    couplings = None
    if coupling is not None:
        couplings = 2 * np.abs(np.asarray(coupling.values, dtype=float)) * c2
        np.fill_diagonal(couplings, 0.0)
    return ModelSpec(d=d, sigma=sigma, lam=lam, h=2 * exp.field_rabi, S=S,
                     J0=2 * abs(exp.coupling_scale) * c2, couplings=couplings, notes=tuple(notes))


def model_to_experiment(model: ModelSpec, dressing_rabi: float = 1.0) -> ExperimentParams:
    """Inverse of :func:`experiment_to_model` for the scalar knobs."""
    theta = math.atan(math.sqrt(model.lam / 2))
    c2 = math.cos(theta) ** 2
    return ExperimentParams(theta=theta, field_rabi=model.h / 2, dressing_rabi=dressing_rabi,
                            coupling_scale=model.J0 / (2 * c2))


@dataclass(frozen=True, eq=False)
class PhaseBoundary:
    theta: np.ndarray
    lam: np.ndarray
    omega_h_crit: np.ndarray  # upper branch; the lower branch is its negative
    omega_h0: float
    # lambda > 1: UP and DOWN meet at Omega_h = 0 through a first-order transition
    first_order_line: dict = field(default_factory=lambda: {
        "omega_h": 0.0, "lambda_min": 1.0, "order": "first"})

    @property
    def lower(self) -> np.ndarray:
        return -self.omega_h_crit


def phase_boundary(thetas, coupling_sum: float, S: float = 0.5) -> PhaseBoundary:
    """Critical Rabi frequency ``Omega_h^c(theta) = S * sum|J^eff| * (cos^2 - 2 sin^2)``.

    ``coupling_sum`` is ``sum_j |J_ij^eff|`` for the site of interest.
    """
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(th < 0) or np.any(th > MAX_THETA + 1e-15):
        raise ValueError(f"theta must lie in [0, {MAX_THETA:.6f}]")
    omega0 = S * abs(coupling_sum)
    lam = 2 * np.tan(th) ** 2
    crit = omega0 * (np.cos(th) ** 2 - 2 * np.sin(th) ** 2)
    return PhaseBoundary(th, lam, np.maximum(crit, 0.0), omega0)
