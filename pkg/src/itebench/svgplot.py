"""Minimal deterministic SVG line plots.

Hand-assembled markup with fixed canvas, palette, and coordinate
formatting, so the same inputs always produce the same bytes and outputs
diff cleanly in version control.
"""

from __future__ import annotations

import numpy as np

__all__ = ["line_plot", "ecdf_plot"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 170, 40, 55
_PALETTE = ("#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df", "#bf3989",
            "#57606a", "#0a3069")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, count)
    return [float(v) for v in raw]


def _axis_range(values, pad_frac=0.05):
    finite = [v for v in values if np.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = (hi - lo) * pad_frac
    return lo - pad, hi + pad


def _scaler(lo, hi, out_lo, out_hi):
    span = hi - lo

    def scale(v):
        return out_lo + (v - lo) / span * (out_hi - out_lo)

    return scale


def _frame(title, xlabel, ylabel, sx, sy, xticks, yticks):
    parts = []
    parts.append(f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="#ffffff"/>')
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="#444444" stroke-width="1"/>')
    parts.append(f'<text x="{_ML}" y="24" font-size="15" fill="#111111">{title}</text>')
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 12}" font-size="12" '
        f'text-anchor="middle" fill="#111111">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.0f}" font-size="12" fill="#111111" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.0f})" '
        'text-anchor="middle">' + ylabel + "</text>")
    for tv in xticks:
        px = sx(tv)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_H - _MB}" x2="{_fmt(px)}" '
                     f'y2="{_H - _MB + 5}" stroke="#444444"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{_H - _MB + 18}" font-size="10" '
                     f'text-anchor="middle" fill="#111111">{tv:.4g}</text>')
    for tv in yticks:
        py = sy(tv)
        parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(py)}" x2="{_ML}" '
                     f'y2="{_fmt(py)}" stroke="#444444"/>')
        parts.append(f'<text x="{_ML - 8}" y="{_fmt(py + 3)}" font-size="10" '
                     f'text-anchor="end" fill="#111111">{tv:.4g}</text>')
    return parts


def _legend(labels):
    parts = []
    for k, label in enumerate(labels):
        color = _PALETTE[k % len(_PALETTE)]
        y = _MT + 14 + 16 * k
        x = _W - _MR + 12
        parts.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 18}" y2="{y - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x + 24}" y="{y}" font-size="11" fill="#111111">{label}</text>')
    return parts


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              identity: bool = False) -> str:
    """Polyline chart.  ``series`` is a list of (label, xs, ys) triples.

    ``identity`` adds a dashed y = x reference, used by coverage-versus-
    target charts.  Non-finite y values break the line rather than being
    clamped.
    """
    all_x = [v for _, xs, _ in series for v in xs]
    all_y = [v for _, _, ys in series for v in ys]
    if identity:
        all_y = all_y + all_x
    x_lo, x_hi = _axis_range(all_x)
    y_lo, y_hi = _axis_range(all_y)
    sx = _scaler(x_lo, x_hi, _ML, _W - _MR)
    sy = _scaler(y_lo, y_hi, _H - _MB, _MT)
    parts = _frame(title, xlabel, ylabel, sx, sy, _ticks(x_lo, x_hi), _ticks(y_lo, y_hi))
    if identity:
        a = max(x_lo, y_lo)
        b = min(x_hi, y_hi)
        if b > a:
            parts.append(f'<line x1="{_fmt(sx(a))}" y1="{_fmt(sy(a))}" '
                         f'x2="{_fmt(sx(b))}" y2="{_fmt(sy(b))}" stroke="#999999" '
                         'stroke-width="1" stroke-dasharray="5,4"/>')
    for k, (label, xs, ys) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        run = []
        chunks = []
        for xv, yv in zip(xs, ys):
            if np.isfinite(xv) and np.isfinite(yv):
                run.append(f"{_fmt(sx(xv))},{_fmt(sy(yv))}")
            elif run:
                chunks.append(run)
                run = []
        if run:
            chunks.append(run)
        for chunk in chunks:
            if len(chunk) == 1:
                cx, cy = chunk[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
            else:
                parts.append(f'<polyline points="{" ".join(chunk)}" fill="none" '
                             f'stroke="{color}" stroke-width="2"/>')
    parts.extend(_legend([label for label, _, _ in series]))
    body = "\n".join(parts)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">\n{body}\n</svg>\n')


def ecdf_plot(samples, title: str = "", xlabel: str = "score") -> str:
    """Step-function ECDF overlay.  ``samples`` is a list of (label, values)."""
    series = []
    for label, values in samples:
        s = np.sort(np.asarray(values, dtype=float))
        n = len(s)
        xs = np.repeat(s, 2)
        ys = np.empty(2 * n)
        ys[0::2] = np.arange(n) / n
        ys[1::2] = np.arange(1, n + 1) / n
        series.append((label, xs.tolist(), ys.tolist()))
    return line_plot(series, title=title, xlabel=xlabel, ylabel="empirical CDF")
