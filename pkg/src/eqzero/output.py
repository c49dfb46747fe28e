"""Deterministic CSV/JSON writers and line plots (SVG and PNG)."""
from __future__ import annotations

import json
import math
import subprocess
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import __version__


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def format_number(x) -> str:
    """Shortest round-trip decimal form; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], units: str) -> Path:
    """CSV with a ``# eqzero <version>; units: ...`` line, then the column header."""
    path = Path(path)
    lines = [f"# eqzero {version_string()}; units: {units}", ",".join(columns)]
    lines += [",".join(format_number(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: ``(columns, float array)``."""
    text = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    cols = text[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in text[1:]]).reshape(-1, len(cols))
    return cols, data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


# plots ----------------------------------------------------------------------

_W, _H = 640, 420
_MARGIN = dict(left=70, right=20, top=40, bottom=50)
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]


def _nice_ticks(lo: float, hi: float, count: int = 5):
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def svg_line_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "") -> Path:
    """Write an SVG with axes, ticks and one ``<polyline>`` per ``(x, y, label)`` series."""
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    finite = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[finite].min()), float(xs[finite].max())
    y0, y1 = float(ys[finite].min()), float(ys[finite].max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw = _W - _MARGIN["left"] - _MARGIN["right"]
    ph = _H - _MARGIN["top"] - _MARGIN["bottom"]

    def sx(x):
        return _MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return _MARGIN["top"] + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="{_MARGIN["left"]}" y="{_MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{_MARGIN["top"] + ph}" x2="{X:.2f}" y2="{_MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{_MARGIN["top"] + ph + 18}" font-size="11" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{_MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{_MARGIN["left"]}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{_MARGIN["left"] - 8}" y="{Y + 4:.2f}" font-size="11" text-anchor="end">{t:g}</text>')
    for k, (x, y, label) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"><title>{escape(label)}</title></polyline>')
    out.append(f'<text x="{_W / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{_MARGIN["left"] + pw / 2}" y="{_H - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{_MARGIN["top"] + ph / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>'
    )
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def png_line_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "", logy: bool = False) -> Path:
    """Same figure rendered with matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    for x, y, label in series:
        ax.plot(x, y, label=label, lw=1.3)
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def line_plots(stem, series, title: str = "", xlabel: str = "", ylabel: str = "", logy: bool = False):
    """Write ``<stem>.svg`` and ``<stem>.png``; returns both paths."""
    stem = Path(stem)
    svg_series, svg_ylabel = series, ylabel
    if logy:
        with np.errstate(divide="ignore"):
            svg_series = [(x, np.log10(np.asarray(y, dtype=float)), label) for x, y, label in series]
        svg_ylabel = f"log10 {ylabel}"
    return (
        svg_line_plot(stem.with_suffix(".svg"), svg_series, title, xlabel, svg_ylabel),
        png_line_plot(stem.with_suffix(".png"), series, title, xlabel, ylabel, logy),
    )
