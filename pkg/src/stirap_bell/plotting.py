"""Plot-ready data files and matplotlib renderings of the figure analogues."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import Trajectory, _fmt

__all__ = ["PlotData", "emit_plot_data", "plot_data_for", "render_figure"]


@dataclass
class PlotData:
    name: str
    title: str
    xlabel: str
    ylabel: str
    x: np.ndarray
    series: dict[str, np.ndarray]
    params: dict[str, object] = field(default_factory=dict)
    logscale: bool = False

    def to_text(self) -> str:
        buf = io.StringIO(newline="")
        w = buf.write
        w(f"# figure: {self.name}\n")
        w(f"# title: {self.title}\n")
        w(f"# x: {self.xlabel}\n")
        w(f"# y: {self.ylabel}\n")
        w(f"# series: {', '.join(self.series)}\n")
        for key, value in self.params.items():
            w(f"# param {key} = {value}\n")
        w("#\n")
        cols = [self.x, *self.series.values()]
        w("\t".join(["x", *self.series]) + "\n")
        for row in zip(*cols):
            w("\t".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()


def _param_dict(params) -> dict[str, object]:
    if params is None:
        return {}
    if isinstance(params, tuple):
        out = {}
        for side, p in zip(("left", "right"), params):
            out.update({f"{side}.{k}": v for k, v in _param_dict(p).items()})
        return out
    return {
        "g": _fmt(params.g),
        "delta": _fmt(params.delta),
        "ramp": _fmt(params.ramp),
        "gamma": _fmt(params.gamma),
        "epsilon": _fmt(params.epsilon),
        "frame": params.frame.value,
        "noise": params.noise.value,
    }


def plot_data_for(result) -> PlotData:
    """Figure description for a trajectory or a sweep result."""
    if isinstance(result, Trajectory):
        series = {lab: result.populations[:, i] for i, lab in enumerate(result.labels)}
        return PlotData(
            name="populations",
            title="Bare-basis populations during the ramp",
            xlabel="t [1/g]",
            ylabel="population",
            x=result.times,
            series=series,
            params=_param_dict(result.meta.get("params")),
        )
    from .experiments import SweepResult

    if isinstance(result, SweepResult):
        return result.plot_data()
    raise TypeError(f"cannot plot {type(result).__name__}")


def emit_plot_data(result, path) -> Path:
    """Write the header-plus-columns plot file; byte-stable for identical input."""
    data = result if isinstance(result, PlotData) else plot_data_for(result)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(data.to_text())
    return path


def render_figure(result, path) -> Path:
    """Render the same data as a PNG with matplotlib (Agg backend)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = result if isinstance(result, PlotData) else plot_data_for(result)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, ys in data.series.items():
        ax.plot(data.x, ys, label=label, marker="o" if len(data.x) < 40 else None)
    if data.logscale:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(data.xlabel)
    ax.set_ylabel(data.ylabel)
    ax.set_title(data.title)
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
