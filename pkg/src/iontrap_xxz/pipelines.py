"""Compute data products from a RunConfig.

Every pipeline returns ``(products, failures)``; ``failures`` lists
per-point problems that did not stop the run.
"""

from __future__ import annotations

import math

import numpy as np

from . import couplings as cp
from . import exponents as ex
from . import rg
from .config import RunConfig
from .model_map import MAX_THETA, ModelSpec, phase_boundary
from .phonons import TrapSpec, longitudinal_modes, solve_equilibrium
from .products import DataProduct, Table
from .spinsim import ed, quench


def trap_spec(cfg: RunConfig) -> TrapSpec:
    t = cfg.trap
    return TrapSpec(t.ion_count, t.axial_frequency, t.radial_frequency, t.ion_mass, t.ion_charge,
                    t.length_scale_mode)


def model_spec(cfg: RunConfig, **changes) -> ModelSpec:
    m = cfg.model
    spec = ModelSpec(d=m.d, sigma=m.sigma, lam=m.lam, h=m.h, S=m.S, J0=m.J0, n_sites=m.n_sites,
                     boundary=m.boundary)
    return spec.with_(**changes) if changes else spec


def _product(kind, tables, cfg, **meta):
    return DataProduct(kind, tables, meta, cfg.config_hash())


def trap_modes(cfg: RunConfig):
    spec = trap_spec(cfg)
    chain = solve_equilibrium(spec)
    spec_modes = longitudinal_modes(chain)
    meta = {"ion_count": spec.ion_count, "equilibrium_residual": chain.residual}
    if spec.physical:
        meta["length_scale_m"] = spec.length_scale()
        meta["axial_frequency_rad_s"] = spec.axial_frequency
    n = spec.ion_count
    cols = (("mode_index", "1"), ("omega_over_omegaz", "1")) + tuple((f"f_{i}", "1") for i in range(n))
    modes = Table(cols, [(l, float(w), *map(float, spec_modes.mode_matrix[:, l]))
                         for l, w in enumerate(spec_modes.frequencies)])
    pos = Table((("ion", "1"), ("position", "l_c")), [(i, float(u)) for i, u in enumerate(chain.positions)])
    return [_product("modes", {"main": modes, "positions": pos}, cfg, **meta)], []


def coupling_matrix(cfg: RunConfig):
    spec = trap_spec(cfg)
    spectrum = longitudinal_modes(solve_equilibrium(spec))
    beam = cp.BeamParams(cfg.beam.rabi_frequency, cfg.beam.detuning)
    j = cp.effective_couplings(spectrum, beam)
    r = j.distances
    rows = [(i, k, float(r[i, k]), float(j.values[i, k])) for i in range(j.n) for k in range(i + 1, j.n)]
    meta, failures = {"detuning_omega_z": cfg.beam.detuning}, []
    try:
        fit = cp.fit_power_law(j, skip_edge_ions=1 if j.n > 4 else 0)
        meta.update(sigma=fit.sigma, amplitude=fit.amplitude, max_relative_residual=fit.max_relative_residual)
    except cp.PowerLawError as exc:
        failures.append(f"power-law fit: {exc}")
        meta["sigma"] = math.nan
    table = Table((("i", "1"), ("j", "1"), ("distance", "d_center"), ("J", "Omega^2 dk^2 hbar/(2M)")), rows)
    return [_product("couplings", {"main": table}, cfg, **meta)], failures


SWEEP_COLUMNS = (("delta", "omega_z"), ("delta_tilde", "1"), ("sigma", "1"), ("residual", "1"), ("beta_z", "1"),
                 ("d_prefactor", "1"), ("chain_mode", ""))


def _sweep(cfg: RunConfig, with_prefactor: bool):
    s = cfg.sweep
    grid = cp.default_detuning_grid(cfg.beam.coulomb_ratio, s.detuning_points,
                                    (s.delta_tilde_min, s.delta_tilde_max))
    res = cp.detuning_sweep(cfg.trap.ion_count, s.chain_mode, grid, coulomb_ratio=cfg.beam.coulomb_ratio,
                            anisotropy=cfg.model.lam, d=cfg.model.d, spin=cfg.model.S,
                            with_prefactor=with_prefactor)
    modes = ("real", "equidistant") if s.chain_mode == "both" else (s.chain_mode,)
    failures = [f"{m} detuning={d:.6g}: {msg}" for m, d, msg in res.failures]
    return res, modes, failures


def sigma_sweep(cfg: RunConfig):
    s = cfg.sweep
    res, modes, failures = _sweep(cfg, s.with_prefactor)
    rows, inset = [], []
    for mode in modes:
        for p in res.series(mode):
            rows.append((p.delta, p.delta_tilde, p.sigma, p.residual, p.beta_z, p.d_prefactor, mode))
            inset.append((mode, p.delta_tilde, p.sigma, p.d_prefactor))
    main = Table(SWEEP_COLUMNS, rows)
    meta = {"ion_count": cfg.trap.ion_count, "coulomb_ratio": cfg.beam.coulomb_ratio, "d": cfg.model.d}
    products = [_product("fig1b", {"main": main}, cfg, **meta)]
    if s.with_prefactor:
        t = Table((("chain_mode", ""), ("delta_tilde", "1"), ("sigma", "1"), ("D", "1")), inset)
        products.append(_product("fig1b_inset", {"main": t}, cfg, **meta, lam=cfg.model.lam))
    return products, failures


def zeta_sweep(cfg: RunConfig):
    """Kibble-Zurek exponent zeta along the detuning sweep (nan where sigma <= d)."""
    res, modes, failures = _sweep(cfg, False)
    d, p = cfg.model.d, cfg.model.p
    rows = []
    for mode in modes:
        for pt in res.series(mode):
            zeta = ex.quench_exponents(pt.sigma, d, p).zeta if pt.sigma > d else math.nan
            rows.append((pt.delta, pt.delta_tilde, pt.sigma, zeta, mode))
    t = Table((("delta", "omega_z"), ("delta_tilde", "1"), ("sigma", "1"), ("zeta", "1"), ("chain_mode", "")), rows)
    meta = {"ion_count": cfg.trap.ion_count, "coulomb_ratio": cfg.beam.coulomb_ratio, "d": d, "p": p}
    return [_product("fig2", {"main": t}, cfg, **meta)], failures


EXPONENT_COLUMNS = (("sigma", "1"), ("d", "1"), ("p", "1"), ("phi", "1"), ("epsilon", "1"), ("beta_z", "1"),
                    ("nu", "1"), ("z", "1"), ("zeta", "1"), ("kz_length_exponent", "1"))


def exponent_row(sigma: float, d: float, p: float) -> tuple:
    e = ex.exponent_set(sigma, d)
    q = ex.quench_exponents(sigma, d, p)
    return (sigma, d, p, e.phi, e.epsilon, e.beta_z, e.nu, e.z, q.zeta, q.kz_length_exponent)


def exponent_table(cfg: RunConfig, sigmas=None):
    sigmas = cfg.sweep.sigma_grid.values() if sigmas is None else np.atleast_1d(sigmas)
    rows, failures = [], []
    for s in sigmas:
        try:
            rows.append(exponent_row(float(s), cfg.model.d, cfg.model.p))
        except ValueError as exc:
            failures.append(f"sigma={s:g}: {exc}")
    return [_product("exponents", {"main": Table(EXPONENT_COLUMNS, rows)}, cfg)], failures


def phase_diagram(cfg: RunConfig):
    th = np.linspace(0.0, MAX_THETA, cfg.sweep.theta_points)
    pb = phase_boundary(th, 1.0, cfg.model.S)
    ratio = pb.omega_h_crit / pb.omega_h0
    rows = [(float(t), float(l), float(r), float(-r)) for t, l, r in zip(pb.theta, pb.lam, ratio)]
    t = Table((("theta", "rad"), ("lambda", "1"), ("omega_h_crit", "Omega_h0"), ("omega_h_crit_lower", "Omega_h0")), rows)
    meta = {"first_order_line": "omega_h=0 for lambda>1", "omega_h0": "S*sum_j|J_ij|"}
    return [_product("fig1a", {"main": t}, cfg, **meta)], []


def rg_flow(cfg: RunConfig, kind: str = "fig3a"):
    e = ex.exponent_set(cfg.model.sigma, cfg.model.d)
    s = cfg.sweep
    ff = rg.flow_field_grid(e.epsilon, e.phi, e.K_d, (0.0, s.rg_g_max), (-s.rg_mu_max, s.rg_mu_max),
                            (s.rg_resolution, s.rg_resolution), b_min=s.rg_b_min)
    grid = Table((("g", "1"), ("mu", "1"), ("dg_ir", "1"), ("dmu_ir", "1")),
                 [tuple(map(float, r)) for r in zip(ff.g, ff.mu, ff.dg_ir, ff.dmu_ir)])
    traj = Table((("seed", "1"), ("b", "1"), ("g_tilde", "1"), ("mu_tilde", "1")),
                 [(k, float(b), float(g), float(m)) for k, tr in enumerate(ff.trajectories)
                  for b, g, m in zip(tr.b, tr.g, tr.mu)])
    fps = Table((("g_star", "1"), ("stability", "")), [(fp.g_star, fp.stability) for fp in ff.fixed_points])
    meta = {"sigma": cfg.model.sigma, "d": cfg.model.d, "phi": e.phi, "epsilon": e.epsilon, "K_d": e.K_d}
    return [_product(kind, {"grid": grid, "trajectories": traj, "fixed_points": fps}, cfg, **meta)], []


def ed_scan(cfg: RunConfig):
    model = model_spec(cfg, h=0.0)
    scan = ed.ground_state_scan(model, cfg.sweep.h_grid.values())
    mag = Table((("h", "J0"), ("m_Z", "1"), ("ground_sector", "1")),
                [(r.h, r.m_z, r.ground_sector) for r in scan])
    tables = {"main": mag}
    failures = []
    sizes = [int(n) for n in cfg.sweep.ed_sizes.values()]
    if sizes and 0 <= model.lam <= 1:
        try:
            rep = ed.finite_size_hc(model, sizes)
            tables["finite_size"] = Table(
                (("N", "1"), ("h_saturation", "J0"), ("h_single_magnon", "J0"), ("h_mean_site", "J0"),
                 ("h_max_site", "J0")),
                [tuple([int(n)] + [float(v) for v in vals]) for n, *vals in
                 zip(rep.sizes, rep.h_saturation, rep.h_single_magnon, rep.h_mean_site, rep.h_max_site)])
        except (ValueError, ed.EigensolverError) as exc:
            failures.append(f"finite-size scan: {exc}")
    meta = {"n_sites": model.n_sites, "sigma": model.sigma, "lam": model.lam}
    return [_product("magnetization", tables, cfg, **meta)], failures


def quench_sweep(cfg: RunConfig):
    s = cfg.sweep
    model = model_spec(cfg, h=0.0)
    res = quench.kz_sweep(model, s.rates.values(), cfg.model.p, h0=s.h0, h_final=s.h_final,
                          seed_field=s.seed_field)
    rows = [(float(v), float(r), res.slope, res.zeta_predicted) for v, r in zip(res.rates, res.densities)]
    t = Table((("rate", "J0^2"), ("rho", "1"), ("zeta_fit", "1"), ("zeta_predicted", "1")), rows)
    meta = {"n_sites": model.n_sites, "sigma": model.sigma, "lam": model.lam, "p": cfg.model.p,
            "seed_field": s.seed_field, "zeta_fit_stderr": res.slope_stderr}
    failures = [f"rate={v:g}: {msg}" for v, msg in res.failures]
    return [_product("kz_sweep", {"main": t}, cfg, **meta)], failures


FIGURES = {
    "fig1a": (phase_diagram, {}),
    "fig1b": (sigma_sweep, {}),
    "fig2": (zeta_sweep, {}),
    "fig3a": (rg_flow, {"sigma": 2.3}),
    "fig3b": (rg_flow, {"sigma": 1.7}),
}


def reproduce(cfg: RunConfig, figure: str):
    """Pipeline behind one figure, with the figure's own model overrides."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    fn, overrides = FIGURES[figure]
    if overrides:
        cfg = cfg.with_("model", **overrides)
    if fn is rg_flow:
        return rg_flow(cfg, figure)
    return fn(cfg)
