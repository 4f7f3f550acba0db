"""Minimal SVG line plots for time series."""

from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.4g}"


def line_plot(t, series, title="", labels=None, width=640, height=360, max_points=4000):
    """Render one or more series sharing the time axis.

    ``series`` has shape ``(len(t),)`` or ``(len(t), k)``. Long series are
    thinned by striding to at most ``max_points`` vertices per line.
    Non-finite samples break the line.
    """
    t = np.asarray(t, dtype=float)
    Y = np.asarray(series, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if labels is None:
        labels = [f"s{i + 1}" for i in range(Y.shape[1])]
    stride = max(1, int(np.ceil(len(t) / max_points)))
    t = t[::stride]
    Y = Y[::stride]

    ml, mr, mt, mb = 60, 20, 30, 40
    pw, ph = width - ml - mr, height - mt - mb
    finite = Y[np.isfinite(Y)]
    ylo, yhi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    tlo, thi = (float(t[0]), float(t[-1])) if len(t) else (0.0, 1.0)
    if thi == tlo:
        thi = tlo + 1.0

    def sx(v):
        return ml + (v - tlo) / (thi - tlo) * pw

    def sy(v):
        return mt + (yhi - v) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(title)}</text>',
    ]
    for v, anchor_y in ((yhi, mt), (ylo, mt + ph)):
        out.append(f'<text x="{ml - 4}" y="{anchor_y + 4}" text-anchor="end" font-family="sans-serif" font-size="10">{_fmt(v)}</text>')
    for v, x in ((tlo, ml), (thi, ml + pw)):
        out.append(f'<text x="{x}" y="{mt + ph + 14}" text-anchor="middle" font-family="sans-serif" font-size="10">{_fmt(v)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle" font-family="sans-serif" font-size="11">t</text>')

    for k in range(Y.shape[1]):
        color = COLORS[k % len(COLORS)]
        segment = []
        for ti, yi in zip(t, Y[:, k]):
            if np.isfinite(yi):
                segment.append(f"{sx(ti):.2f},{sy(yi):.2f}")
            elif segment:
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{" ".join(segment)}"/>')
                segment = []
        if segment:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{" ".join(segment)}"/>')
        out.append(
            f'<text x="{ml + pw - 4}" y="{mt + 14 + 13 * k}" text-anchor="end" fill="{color}" '
            f'font-family="sans-serif" font-size="11">{escape(labels[k])}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_plot(traj, signal):
    """SVG for one recorded signal of a closed-loop trajectory."""
    n = traj.n
    idx = range(1, n + 1)
    if signal == "y":
        return line_plot(traj.t, traj.y, "y(t)", ["y"])
    if signal == "H_hat":
        data = traj.H_hat.reshape(len(traj), -1)
        labels = [f"Hhat_{i}{j}" for i in idx for j in idx]
        return line_plot(traj.t, data, "Hessian estimate", labels)
    data = getattr(traj, signal)
    return line_plot(traj.t, data, f"{signal}(t)", [f"{signal}_{i}" for i in idx])
