"""Static SVG figures of sweep files.

``fig1`` and ``fig2`` draw one curve per ``L`` with an inset holding the
derivative along the swept parameter.  ``fig1`` adds the thermodynamic
``m^z(h)`` as a thick black line when the file holds TFIM ``m^z`` data.
Output bytes depend only on the input.
"""
from __future__ import annotations

import io as _io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fss import interpolate_series  # noqa: E402
from .io import SeriesFile, atomic_write, series_from_records  # noqa: E402

STYLES = ("fig1", "fig2", "generic")

_LABELS = {
    "magnetization_z": r"$m^z$",
    "sz_squared": r"$\mathcal{O}_D$",
    "energy_density": r"$e$",
    "entropy_1site": r"$S_1$",
    "concurrence": r"$C$",
    "szsz_nn": r"$\langle S^z_i S^z_{i+1}\rangle$",
}
_PARAM_LABELS = {"h": r"$h$", "D": r"$D$", "lambda": r"$\lambda$"}

_RC = {
    "svg.hashsalt": "critx",
    "svg.fonttype": "path",
    "path.simplify": False,
    "font.size": 10,
}


def render_svg(data: SeriesFile, style: str = "generic") -> bytes:
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}, got {style!r}")
    series = series_from_records(data)
    first = series[0]
    obs = data.records[0].observable
    family = first.model

    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        cmap = plt.get_cmap("viridis")
        for i, s in enumerate(series):
            color = cmap(i / max(len(series) - 1, 1))
            ax.plot(s.grid, s.values, color=color, lw=1.0, label=f"L={s.L}")
        if style == "fig1" and family == "tfim" and obs == "magnetization_z":
            from .tfim_exact import magnetization_z

            g = np.linspace(first.grid[0], first.grid[-1], 201)
            ax.plot(g, [magnetization_z(x) for x in g], color="black", lw=2.5, label=r"$L=\infty$")
        ax.set_xlabel(_PARAM_LABELS.get(first.param_name, first.param_name))
        ax.set_ylabel(_LABELS.get(obs, obs))
        ax.legend(fontsize=7, ncol=2, loc="best", frameon=False)

        if style in ("fig1", "fig2"):
            inset = ax.inset_axes([0.62, 0.1, 0.33, 0.33])
            for i, s in enumerate(series):
                color = cmap(i / max(len(series) - 1, 1))
                g = np.linspace(s.grid[0], s.grid[-1], 200)
                inset.plot(g, interpolate_series(s).derivative()(g), color=color, lw=0.8)
            inset.set_title(r"$\partial_{%s}$" % first.param_name.replace("lambda", r"\lambda"),
                            fontsize=8)
            inset.tick_params(labelsize=6)

        buf = _io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def write_svg(data: SeriesFile, out, style: str = "generic") -> None:
    """Render completely in memory, then replace ``out`` atomically."""
    atomic_write(out, render_svg(data, style), mode="wb")
