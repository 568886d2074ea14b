"""Closed-form critical quantities of the long-range XXZ transition.

Everything is expressed through ``phi = min(2, sigma - d)`` and
``epsilon = phi - d``. Energies in the dilute-magnon formulas use the rescaled
units in which the magnon kinetic energy is ``k**phi / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gamma

from .model_map import ModelSpec, critical_field

MEAN_FIELD = "mean-field"
INTERACTING = "interacting"


@dataclass(frozen=True)
class ExponentSet:
    sigma: float
    d: float
    phi: float
    beta_z: float
    nu: float
    z: float
    K_d: float
    epsilon: float

    @property
    def regime(self) -> str:
        return MEAN_FIELD if self.epsilon <= 0 else INTERACTING


@dataclass(frozen=True)
class QuenchExponents:
    p: float
    zeta: float
    kz_length_exponent: float  # L* ~ v**(-kz_length_exponent)


@dataclass(frozen=True)
class EquationOfStatePoint:
    mu: float
    n: float
    n0: float
    g2: float  # effective two-body coupling used: T-matrix, or bare g2 in mean field


def _check_range(sigma, d):
    if d <= 0:
        raise ValueError(f"dimension must be positive, got {d}")
    if sigma <= d:
        raise ValueError(f"need sigma > d for a well-defined thermodynamic limit (sigma={sigma}, d={d})")


def k_d(d: float) -> float:
    """``2**(d-1) * pi**(d/2) * Gamma(d/2)``: K_1 = pi, K_2 = 2 pi, K_3 = 2 pi^2."""
    if d <= 0:
        raise ValueError("d must be positive")
    return 2 ** (d - 1) * math.pi ** (d / 2) * gamma(d / 2)


def exponent_set(sigma: float, d: float = 1) -> ExponentSet:
    _check_range(sigma, d)
    phi = min(2.0, sigma - d)
    beta = d / phi if phi > d else 1.0
    return ExponentSet(sigma=sigma, d=d, phi=phi, beta_z=beta, nu=1 / phi, z=phi,
                       K_d=k_d(d), epsilon=phi - d)


def quench_exponents(sigma: float, d: float = 1, p: float = 1) -> QuenchExponents:
    """Kibble-Zurek exponents for the ramp ``h(t) = h0 - v t**p``."""
    if p <= 0:
        raise ValueError("ramp power p must be positive")
    e = exponent_set(sigma, d)
    zeta = d / (e.phi * (p + 1))
    length = e.nu / (e.z * e.nu * p + 1)
    assert math.isclose(zeta, d * length, rel_tol=1e-12)
    return QuenchExponents(p=p, zeta=zeta, kz_length_exponent=length)


@lru_cache(maxsize=4096)
def _fourier_gap(k: float, sigma: float) -> float:
    # sum_{r>=1} (1 - cos k r) / r**sigma = zeta(sigma) - Re Li_sigma(e^{ik})
    if k == 0:
        return 0.0
    with mpmath.workdps(40):
        val = mpmath.zeta(sigma) - mpmath.re(mpmath.polylog(sigma, mpmath.expjpi(k / math.pi)))
    return float(val)


def magnon_dispersion(k, model: ModelSpec):
    """Single-magnon energy ``S [J(0) - J(k)]`` above the polarized state, d=1.

    ``J(k)`` is the lattice Fourier transform of ``J0 / r**sigma``. The sum is
    evaluated through the polylogarithm, whose small-``|log z|`` expansion
    converges at any k in the Brillouin zone.
    """
    _check_range(model.sigma, model.d)
    if model.d != 1:
        raise NotImplementedError("lattice dispersion is implemented for d=1")
    ks = np.abs(np.atleast_1d(np.asarray(k, dtype=float)))
    if np.any(ks > math.pi + 1e-12):
        raise ValueError("k must lie in the first Brillouin zone [-pi, pi]")
    out = np.array([2 * model.S * model.J0 * _fourier_gap(float(x), float(model.sigma)) for x in ks])
    return out if np.ndim(k) else float(out[0])


@dataclass(frozen=True)
class DispersionFit:
    exponent: float  # fitted log-log slope
    coefficient: float  # c_phi with E(k) ~ c_phi k**phi, phi held at its nominal value
    phi: float


def dispersion_fit(model: ModelSpec, k_window=(1e-3, 1e-2), points: int = 21) -> DispersionFit:
    """Small-k exponent and coefficient of :func:`magnon_dispersion`."""
    ks = np.geomspace(*k_window, points)
    e = magnon_dispersion(ks, model)
    x, y = np.log(ks), np.log(e)
    slope = np.polyfit(x, y, 1)[0]
    phi = min(2.0, model.sigma - model.d)
    coeff = math.exp(np.mean(y - phi * x))
    return DispersionFit(float(slope), coeff, phi)


def tmatrix_leading(mu: float, exps: ExponentSet) -> float:
    """Leading-order T-matrix ``g(2 mu, 0) = eps K_d (2 mu)**(eps/phi)``."""
    if exps.epsilon <= 0:
        raise ValueError("leading-order T-matrix needs epsilon > 0; use the mean-field branch")
    if mu < 0:
        raise ValueError("mu must be non-negative")
    return exps.epsilon * exps.K_d * (2 * mu) ** (exps.epsilon / exps.phi)


def equation_of_state(mu: float, exps: ExponentSet, bare_coupling: float = 1.0,
                      mu_max: float = 1.0) -> EquationOfStatePoint:
    """Lowest-order magnon density at chemical potential ``mu``.

    For epsilon > 0 the condensate obeys ``mu = n0 g(2 mu, 0)`` so that
    ``n = (2**(eps/phi) eps K_d)**-1 mu**(d/phi)``; otherwise ``n = mu / g2``
    with the fixed ``bare_coupling`` g2.
    """
    if mu < 0:
        raise ValueError("mu must be non-negative on the condensed side")
    if mu > mu_max:
        raise ValueError(f"mu={mu} is outside the dilute regime (mu_max={mu_max})")
    if exps.epsilon <= 0:
        n0 = mu / bare_coupling
        return EquationOfStatePoint(mu, n0, n0, bare_coupling)
    if mu == 0:
        return EquationOfStatePoint(0.0, 0.0, 0.0, 0.0)
    g = tmatrix_leading(mu, exps)
    n0 = mu / g
    closed = mu ** (exps.d / exps.phi) / (2 ** (exps.epsilon / exps.phi) * exps.epsilon * exps.K_d)
    assert math.isclose(n0, closed, rel_tol=1e-10)
    return EquationOfStatePoint(mu, n0, n0, g)


def rescaled_critical_field(sigma: float, d: float = 1, lam: float = 0.5, S: float = 0.5) -> float:
    """``h'_c = h_c / (2 c_phi)``: the critical field in units where ``E_k = k**phi / 2``."""
    model = ModelSpec(d=d, sigma=sigma, lam=lam, S=S, J0=1.0)
    hc = critical_field(model).value
    return hc / (2 * dispersion_fit(model).coefficient)


def prefactor_D(sigma: float, d: float = 1, lam: float = 0.5, S: float = 0.5) -> float:
    """Amplitude D of ``m_Z = S (1 - D |(h_c - h)/h_c|**beta_Z)``.

    Mean-field regime (eps <= 0): D = 1. Otherwise the leading-order equation
    of state with ``mu = h'_c (h_c - h)/h_c`` and ``n = S - m_Z`` (lattice
    constant 1) gives ``D = h'_c**(d/phi) / (S 2**(eps/phi) eps K_d)``.
    """
    e = exponent_set(sigma, d)
    if e.epsilon <= 0:
        return 1.0
    if not 0 <= lam < 1:
        raise ValueError("D needs 0 <= lambda < 1 in the interacting regime")
    hpc = rescaled_critical_field(sigma, d, lam, S)
    return hpc ** (d / e.phi) / (S * 2 ** (e.epsilon / e.phi) * e.epsilon * e.K_d)


def bogoliubov_dispersion(k, mu: float, exps: ExponentSet):
    """``omega_k = sqrt(E_k (E_k + 2 mu))`` with ``E_k = k**phi / 2`` (g n0 = mu).

    Small k gives ``omega_k ~ sqrt(mu) k**(phi/2)``.
    """
    if mu < 0:
        raise ValueError("Bogoliubov modes exist on the condensed side only (mu >= 0)")
    kk = np.abs(np.asarray(k, dtype=float))
    ek = 0.5 * kk**exps.phi
    return np.sqrt(ek * (ek + 2 * mu))
