"""CSV, run-manifest, and figure output.

All numeric output is locale independent with '.' as decimal separator;
reals are rendered at 10 significant digits. Every CSV written to disk
gets a JSON manifest next to it recording the resolved parameters and a
sha256 of the output, so runs can be replayed byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import platform
from datetime import datetime, timezone
from pathlib import Path


def fmt_real(x: float) -> str:
    return f"{x:.10g}"


def fmt_fraction(num: int, den: int) -> str:
    return f"{num}/{den}"


def write_csv(path, header, rows) -> str:
    """Write rows (iterables of pre-formatted strings) and return the sha256."""
    lines = [",".join(header)]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    Path(path).write_text(text, newline="")
    return hashlib.sha256(text.encode()).hexdigest()


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def manifest_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(p.suffix + ".manifest.json")


def write_manifest(csv_path, command: str, parameters: dict, checksum: str) -> Path:
    from . import __version__

    doc = {
        "command": command,
        "parameters": parameters,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "outputs": {Path(csv_path).name: checksum},
    }
    out = manifest_path(csv_path)
    out.write_text(json.dumps(doc, indent=2) + "\n")
    return out


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_end_densities(layers, values, path, simulated=None) -> None:
    """End density vs layer; optionally overlays simulation estimates."""
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(layers, values, "o-", ms=4, label="exact")
    if simulated is not None:
        ax.plot(layers, simulated, "x", ms=5, label="simulation")
    ax.axhline(0.5, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("layer")
    ax.set_ylabel("end density at center site")
    ax.set_ylim(0.3, 0.52)
    if simulated is not None:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density_curves(t_grid, curves, path) -> None:
    """Time-dependent center densities, one curve per layer."""
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6, 4))
    for layer, values in curves.items():
        ax.plot(t_grid, values, label=f"layer {layer}")
    ax.set_xlabel("t")
    ax.set_ylabel("density at center site")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_simulation(estimates, path) -> None:
    """Mean occupancy vs layer with error bars, one series per observed site."""
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6, 4))
    sites = sorted({e.site for e in estimates})
    for site in sites:
        es = sorted((e for e in estimates if e.site == site), key=lambda e: e.layer)
        ax.errorbar(
            [e.layer for e in es],
            [e.mean for e in es],
            yerr=[4 * e.stderr for e in es],
            fmt="o-",
            ms=3,
            label=f"site {site}",
        )
    ax.axhline(0.5, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("layer")
    ax.set_ylabel("mean occupancy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
