"""Minimal hand-written SVG line charts with a log frequency axis."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .circuit import Dataset
from .features import ImportanceProfile
from .spectrum import FeatureKind, series_of

WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=160, top=30, bottom=50)
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf"]


def class_mean_series(d: Dataset, kind: FeatureKind = FeatureKind.AMPLITUDE):
    """Per-class mean of one feature kind: (classes, frequencies, (classes, points) array)."""
    if len(d) == 0:
        raise ValueError("nothing to plot: dataset is empty")
    classes = d.classes
    Z = np.vstack([s.values for s in d.spectra])
    Y = series_of(Z, kind)
    labels = np.array(d.labels)
    means = np.vstack([Y[labels == c].mean(axis=0) for c in classes])
    return classes, d.grid.points, means


def series_csv(names, freqs, Y, value_name: str) -> str:
    lines = [f"series,frequency_hz,{value_name}"]
    for name, row in zip(names, Y):
        lines += [f"{name},{f!r},{float(v)!r}" for f, v in zip(freqs, row)]
    return "\n".join(lines) + "\n"


def _ticks(lo, hi):
    return [10.0 ** e for e in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)
            if lo * (1 - 1e-9) <= 10.0 ** e <= hi * (1 + 1e-9)]


def svg_chart(freqs, series: dict, title: str, y_label: str, log_y: bool = False,
              marker_x: float | None = None) -> str:
    freqs = np.asarray(freqs, dtype=float)
    ys = np.vstack([np.asarray(v, dtype=float) for v in series.values()])
    if freqs.size == 0 or ys.size == 0:
        raise ValueError("nothing to plot")
    log_y = log_y and bool(np.all(ys > 0))
    ty = np.log10(ys) if log_y else ys
    x0, x1 = math.log10(freqs[0]), math.log10(freqs[-1])
    y0, y1 = float(ty.min()), float(ty.max())
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(f):
        return MARGIN["left"] + (math.log10(f) - x0) / (x1 - x0 or 1) * pw

    def py(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<title>{escape(title)}</title>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           'fill="none" stroke="#333"/>',
           f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">'
           'Frequency (Hz)</text>',
           f'<text transform="translate(16,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
           f'text-anchor="middle">{escape(y_label)}</text>']
    for t in _ticks(freqs[0], freqs[-1]):
        x = px(t)
        out.append(f'<line class="xtick" x1="{x:.2f}" y1="{MARGIN["top"] + ph}" x2="{x:.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{t:g}</text>')
    for v in np.linspace(y0, y1, 5):
        label = f"{10 ** v:.3g}" if log_y else f"{v:.3g}"
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{label}</text>')
    for i, (name, row) in enumerate(zip(series, ty)):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="5,3"' if (i // len(PALETTE)) % 2 else ""
        pts = " ".join(f"{px(f):.2f},{py(v):.2f}" for f, v in zip(freqs, row))
        out.append(f'<polyline data-series="{escape(str(name))}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"{dash} points="{pts}"/>')
        ly = MARGIN["top"] + 12 + 14 * i
        out.append(f'<text x="{WIDTH - MARGIN["right"] + 10}" y="{ly}" fill="{color}">'
                   f'{escape(str(name))}</text>')
    if marker_x is not None:
        k = int(np.argmin(np.abs(freqs - marker_x)))
        out.append(f'<circle class="peak" cx="{px(freqs[k]):.2f}" cy="{py(ty[0][k]):.2f}" r="4" '
                   'fill="none" stroke="#d62728" stroke-width="2"/>')
        out.append(f'<text x="{px(freqs[k]) + 6:.2f}" y="{py(ty[0][k]) - 6:.2f}" fill="#d62728">'
                   f'{marker_x:.2f} Hz</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_dataset(d: Dataset, registry=None, kind: FeatureKind = FeatureKind.AMPLITUDE):
    """Returns (svg text, csv text) for per-class mean curves."""
    classes, freqs, means = class_mean_series(d, kind)
    names = [registry.name(c) if registry is not None else c for c in classes]
    svg = svg_chart(freqs, dict(zip(names, means)), f"{kind.value.capitalize()} by class",
                    "Amplitude (ohm)" if kind is FeatureKind.AMPLITUDE else kind.value,
                    log_y=kind is FeatureKind.AMPLITUDE)
    return svg, series_csv(classes, freqs, means, kind.value)


def plot_profile(p: ImportanceProfile):
    svg = svg_chart(p.frequencies, {p.kind.value: p.weights},
                    f"First right singular vector |weights|: {p.kind.value}", "|weight|",
                    marker_x=p.peak_frequency)
    return svg, series_csv([p.kind.value], p.frequencies, [p.weights], "weight")
