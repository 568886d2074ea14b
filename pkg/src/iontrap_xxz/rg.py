"""One-loop RG flow of the dilute magnon gas in the (g, mu) plane.

    dg/db  = -eps g + g^2 / K_d
    dmu/db = -phi mu

under ``Lambda -> Lambda e^b``. The infrared is ``b -> -inf``; internally the
integrator runs in ``t = -b`` so that time moves toward the infrared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

RTOL = 1e-10
ATOL = 1e-14
CONVERGED = 1e-14
DIVERGENCE = 1e6

STABLE = "infrared-stable"
UNSTABLE = "infrared-unstable"
MARGINAL = "marginal"


class FlowDivergence(ArithmeticError):
    """The coupling blows up at scale ``b_star`` inside the requested interval."""

    def __init__(self, b_star: float):
        super().__init__(f"flow diverges at b* = {b_star:.6g}")
        self.b_star = b_star


@dataclass(frozen=True)
class RGState:
    g: float
    mu: float
    b: float = 0.0


@dataclass(frozen=True, eq=False)
class RGTrajectory:
    b: np.ndarray
    g: np.ndarray
    mu: np.ndarray
    termination: str  # "reached b_min" | "converged" | "diverged"
    b_star: float | None = None

    @property
    def states(self) -> list:
        return [RGState(g, m, b) for b, g, m in zip(self.b, self.g, self.mu)]

    @property
    def final(self) -> RGState:
        return RGState(float(self.g[-1]), float(self.mu[-1]), float(self.b[-1]))


@dataclass(frozen=True)
class FixedPoint:
    g_star: float
    stability: str
    eigenvalues: tuple  # (along g, along mu), as d/db derivatives


def beta_functions(state: RGState, eps: float, phi: float, K: float) -> tuple:
    return (-eps * state.g + state.g**2 / K, -phi * state.mu)


def _bernoulli_inverse(g0, b, eps, K):
    # u = 1/g obeys du/db = eps u - 1/K
    if eps == 0:
        return 1 / g0 - b / K
    c = 1 / (eps * K)
    return (1 / g0 - c) * math.exp(eps * b) + c


def divergence_scale(g0: float, eps: float, K: float) -> float | None:
    """Scale b* where 1/g crosses zero, or None if it never does."""
    if eps == 0:
        return K / g0
    c = 1 / (eps * K)
    a = 1 / g0 - c
    if a == 0 or -c / a <= 0:
        return None
    return math.log(-c / a) / eps


def closed_form_flow(g0: float, mu0: float, b: float, eps: float, phi: float, K: float) -> RGState:
    """Exact solution of the flow equations from (g0, mu0) at b=0."""
    if g0 <= 0:
        if g0 == 0:
            return RGState(0.0, mu0 * math.exp(-phi * b), b)
        raise ValueError("closed form needs g0 >= 0")
    bs = divergence_scale(g0, eps, K)
    if bs is not None and min(0.0, b) <= bs <= max(0.0, b):
        raise FlowDivergence(bs)
    return RGState(1 / _bernoulli_inverse(g0, b, eps, K), mu0 * math.exp(-phi * b), b)


def integrate_flow(initial: RGState, eps: float, phi: float, K: float, b_min: float = -20.0, *,
                   b_eval=None, rtol: float = RTOL, atol: float = ATOL,
                   stop_at_fixed_point: bool = True) -> RGTrajectory:
    """Adaptive Dormand-Prince (8th order) integration toward the infrared.

    Stops at ``b_min``, when both beta functions drop below 1e-14, or when
    |g| exceeds 1e6 (a runaway at finite scale). mu is linear and only grows
    exponentially, so it never triggers the divergence stop.
    """
    if b_min >= initial.b:
        raise ValueError("b_min must lie below the starting scale")

    def rhs(t, y):
        dg, dm = beta_functions(RGState(y[0], y[1]), eps, phi, K)
        return [-dg, -dm]

    def converged(t, y):
        dg, dm = beta_functions(RGState(y[0], y[1]), eps, phi, K)
        return max(abs(dg), abs(dm)) - CONVERGED
    converged.terminal = True

    def diverged(t, y):
        return DIVERGENCE - abs(y[0])
    diverged.terminal = True

    events = [diverged] + ([converged] if stop_at_fixed_point else [])
    t_eval = None if b_eval is None else initial.b - np.asarray(b_eval, dtype=float)
    # keep steps inside the stability region so errors decay near attracting fixed points
    max_step = 2.0 / max(abs(eps), abs(phi), 1e-3)
    sol = solve_ivp(rhs, (0.0, initial.b - b_min), [initial.g, initial.mu], method="DOP853",
                    rtol=rtol, atol=atol, events=events, t_eval=t_eval, max_step=max_step)
    if sol.status == -1:
        raise RuntimeError(f"RG integration failed: {sol.message}")
    termination, b_star = "reached b_min", None
    if sol.status == 1:
        if sol.t_events[0].size:
            termination, b_star = "diverged", float(initial.b - sol.t_events[0][0])
        else:
            termination = "converged"
    t, y = np.asarray(sol.t, dtype=float), np.asarray(sol.y, dtype=float).reshape(2, -1)
    if t.size == 0 or (t_eval is None and t[0] != 0.0):
        t, y = np.r_[0.0, t], np.c_[[initial.g, initial.mu], y]
    return RGTrajectory(initial.b - t, y[0].copy(), y[1].copy(), termination, b_star)


def find_fixed_points(eps: float, K: float, phi: float | None = None) -> list:
    """Zeros of the beta functions on the ray g >= 0 of the mu = 0 line.

    A fixed point is infrared-stable along g when its d/db eigenvalue is
    positive (perturbations shrink as b decreases). The mu direction has
    eigenvalue ``-phi``: always relevant.
    """
    mu_eig = -phi if phi is not None else math.nan
    if eps == 0:
        return [FixedPoint(0.0, MARGINAL, (0.0, mu_eig))]
    points = [FixedPoint(0.0, STABLE if eps < 0 else UNSTABLE, (-eps, mu_eig))]
    if eps > 0:
        points.append(FixedPoint(eps * K, STABLE, (eps, mu_eig)))
    return points


@dataclass(frozen=True, eq=False)
class FlowField:
    g: np.ndarray  # grid node coordinates, flattened
    mu: np.ndarray
    dg_ir: np.ndarray  # -dg/db: arrows point to the infrared
    dmu_ir: np.ndarray
    trajectories: list = field(default_factory=list)
    fixed_points: list = field(default_factory=list)
    eps: float = 0.0
    phi: float = 0.0


def default_seeds(g_range, mu_range, count: int = 12) -> list:
    """Seeds on the grid boundary: half on the large-g edge, half on the small-g edge."""
    half = count // 2
    mus = np.linspace(mu_range[0], mu_range[1], half + 2)[1:-1] * 0.05
    g_lo = g_range[0] + 0.02 * (g_range[1] - g_range[0])
    return [RGState(g_range[1], float(m)) for m in mus] + [RGState(g_lo, float(m)) for m in mus]


def flow_field_grid(eps: float, phi: float, K: float, g_range=(0.0, 2.0), mu_range=(-0.2, 0.2),
                    resolution=(15, 15), seeds=None, b_min: float = -8.0) -> FlowField:
    """Arrow field and seed trajectories for a flow diagram in the (g, mu) plane."""
    nx, ny = resolution
    fps = find_fixed_points(eps, K, phi)
    if g_range[1] <= g_range[0] or mu_range[1] <= mu_range[0] or nx < 1 or ny < 1:
        empty = np.zeros(0)
        return FlowField(empty, empty, empty, empty, [], fps, eps, phi)
    gg, mm = np.meshgrid(np.linspace(*g_range, nx), np.linspace(*mu_range, ny), indexing="ij")
    gg, mm = gg.ravel(), mm.ravel()
    dg = -(-eps * gg + gg**2 / K)
    dm = phi * mm
    seeds = default_seeds(g_range, mu_range) if seeds is None else seeds
    trajs = []
    for s in seeds:
        tr = integrate_flow(s, eps, phi, K, b_min)
        inside = ((tr.g >= g_range[0]) & (tr.g <= g_range[1])
                  & (tr.mu >= mu_range[0]) & (tr.mu <= mu_range[1]))
        stop = len(inside) if inside.all() else max(1, int(np.argmin(inside)))
        trajs.append(RGTrajectory(tr.b[:stop], tr.g[:stop], tr.mu[:stop], tr.termination, tr.b_star))
    return FlowField(gg, mm, dg, dm, trajs, fps, eps, phi)
