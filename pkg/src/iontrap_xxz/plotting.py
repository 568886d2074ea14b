"""Deterministic SVG rendering of data products with matplotlib.

The SVG carries no date and uses a fixed hash salt for element ids, so the
same product always produces the same bytes.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .products import DataProduct  # noqa: E402

CAPTIONS = {
    "fig1a": "fig1a: critical field against dressing anisotropy lambda",
    "fig1b": "fig1b: fitted decay exponent sigma and beta_Z against dimensionless detuning",
    "fig1b_inset": "fig1b_inset: magnetization prefactor D against dimensionless detuning",
    "fig2": "fig2: Kibble-Zurek exponent zeta against dimensionless detuning",
    "exponents": "exponents: critical exponents against sigma",
    "fig3a": "fig3a: RG flow in the (g, mu) plane, interacting regime",
    "fig3b": "fig3b: RG flow in the (g, mu) plane, mean-field regime",
    "magnetization": "magnetization: ground-state m_Z against field from exact diagonalization",
    "kz_sweep": "kz_sweep: final defect density against ramp rate",
    "modes": "modes: axial phonon frequencies",
    "couplings": "couplings: |J_ij| against ion distance",
}

_RC = {"svg.hashsalt": "iontrap-xxz", "svg.fonttype": "path", "font.size": 9}


def _by_mode(table):
    modes = table.column("chain_mode")
    for m in dict.fromkeys(modes.tolist()):
        yield m, modes == m


def _fig1a(ax, p):
    t = p.tables["main"]
    if len(t):
        lam = t.column("lambda")
        ax.plot(lam, t.column("omega_h_crit"), color="C0", label="UP / FM boundary")
        ax.plot(lam, t.column("omega_h_crit_lower"), color="C1", label="DOWN / FM boundary")
        ax.plot([1.0, max(2.0, lam.max())], [0, 0], color="k", ls="--", label="first order")
    ax.set(xlabel="lambda", ylabel="Omega_h^c / Omega_h^(0)")


def _fig1b(ax, p):
    t = p.tables["main"]
    if len(t):
        for m, sel in _by_mode(t):
            x = t.column("delta_tilde")[sel]
            ax.plot(x, t.column("sigma")[sel], label=f"sigma ({m})")
            ax.plot(x, t.column("beta_z")[sel], ls=":", label=f"beta_Z ({m})")
        ax.set_xscale("log")
    ax.axhline(1.0, color="C0", ls="--", lw=0.8, label="mean-field beta_Z")
    ax.axhline(0.5, color="C3", ls="--", lw=0.8, label="short-range beta_Z")
    ax.set(xlabel="dimensionless detuning", ylabel="sigma, beta_Z")


def _fig1b_inset(ax, p):
    t = p.tables["main"]
    if len(t):
        for m, sel in _by_mode(t):
            ax.plot(t.column("delta_tilde")[sel], t.column("D")[sel], label=f"D ({m})")
        ax.set_xscale("log")
    ax.set(xlabel="dimensionless detuning", ylabel="D")


def _fig2(ax, p):
    t = p.tables["main"]
    if len(t):
        for m, sel in _by_mode(t):
            ax.plot(t.column("delta_tilde")[sel], t.column("zeta")[sel], label=f"zeta ({m})")
        ax.set_xscale("log")
    ax.set(xlabel="dimensionless detuning", ylabel="zeta")


def _exponents(ax, p):
    t = p.tables["main"]
    if len(t):
        s = t.column("sigma")
        for name in ("phi", "beta_z", "nu", "z", "zeta"):
            ax.plot(s, t.column(name), label=name)
    ax.set(xlabel="sigma", ylabel="exponent")


def _rg(ax, p):
    g = p.tables["grid"]
    if len(g):
        ax.quiver(g.column("g"), g.column("mu"), g.column("dg_ir"), g.column("dmu_ir"),
                  angles="xy", color="0.6", width=0.003)
    tr = p.tables["trajectories"]
    if len(tr):
        seed = tr.column("seed")
        for k in np.unique(seed):
            sel = seed == k
            ax.plot(tr.column("g_tilde")[sel], tr.column("mu_tilde")[sel], color="C0", lw=1)
    fp = p.tables["fixed_points"]
    for gs, stab in fp.rows:
        ax.plot([gs], [0.0], "o", color="C3" if "unstable" in str(stab) else "C2", label=f"g*={gs:.4g} ({stab})")
    ax.set(xlabel="g", ylabel="mu")


def _magnetization(ax, p):
    t = p.tables["main"]
    if len(t):
        ax.step(t.column("h"), t.column("m_Z"), where="post", label="m_Z")
    ax.set(xlabel="h / J0", ylabel="m_Z")


def _kz(ax, p):
    t = p.tables["main"]
    if len(t):
        ax.loglog(t.column("rate"), t.column("rho"), "o-", label="rho")
    ax.set(xlabel="ramp rate", ylabel="defect density")


def _modes(ax, p):
    t = p.tables["main"]
    if len(t):
        ax.plot(t.column("mode_index"), t.column("omega_over_omegaz"), "o")
    ax.set(xlabel="mode index", ylabel="frequency / omega_z")


def _couplings(ax, p):
    t = p.tables["main"]
    if len(t):
        ax.loglog(t.column("distance"), np.abs(t.column("J")), ".")
    ax.set(xlabel="distance", ylabel="|J|")


DRAW = {"fig1a": _fig1a, "fig1b": _fig1b, "fig1b_inset": _fig1b_inset, "fig2": _fig2, "exponents": _exponents,
        "fig3a": _rg, "fig3b": _rg, "magnetization": _magnetization, "kz_sweep": _kz, "modes": _modes,
        "couplings": _couplings}


def render_svg(product: DataProduct) -> str:
    if product.kind not in DRAW:
        raise ValueError(f"no SVG renderer for product kind {product.kind!r}")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        try:
            DRAW[product.kind](ax, product)
            if ax.get_legend_handles_labels()[0]:
                ax.legend(fontsize=7)
            fig.text(0.01, 0.01, CAPTIONS[product.kind], fontsize=7)
            fig.tight_layout(rect=(0, 0.04, 1, 1))
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def emit_svg(product: DataProduct, directory) -> Path:
    path = Path(directory) / f"{product.kind}.svg"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_svg(product), encoding="utf-8")
    return path
