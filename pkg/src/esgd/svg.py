"""Minimal native SVG line charts (no plotting dependency)."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 400
ML, MR, MT, MB = 70, 20, 40, 50


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 8)
        return [float(v) for v in range(a, b + 1, step)]
    return list(np.linspace(lo, hi, 5))


def line_chart(series: dict, path, title="", xlabel="", ylabel="", logx=True) -> Path:
    """``series`` maps a label to ``(x, y)``; nonfinite points (and x <= 0 on a
    log axis) are dropped."""
    clean = {}
    for label, (x, y) in series.items():
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y) & ((x > 0) if logx else True)
        if ok.any():
            clean[label] = (np.log10(x[ok]) if logx else x[ok], y[ok])
    if not clean:
        raise ValueError("nothing to plot")
    xs = np.concatenate([v[0] for v in clean.values()])
    ys = np.concatenate([v[1] for v in clean.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return ML + (v - x0) / (x1 - x0) * (W - ML - MR)

    def py(v):
        return H - MB - (v - y0) / (y1 - y0) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
           f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>']
    for tv in _ticks(x0, x1, logx):
        if x0 <= tv <= x1:
            lab = f"1e{int(tv)}" if logx else f"{tv:.3g}"
            out.append(f'<text x="{px(tv):.1f}" y="{H - MB + 15}" text-anchor="middle">{lab}</text>')
    for tv in _ticks(y0, y1, False):
        out.append(f'<text x="{ML - 5}" y="{py(tv) + 4:.1f}" text-anchor="end">{tv:.3g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{H / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {H / 2})">{escape(ylabel)}</text>')
    for i, (label, (x, y)) in enumerate(clean.items()):
        col = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{W - MR - 5}" y="{MT + 14 * (i + 1)}" text-anchor="end" '
                   f'fill="{col}">{escape(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path


def experiment_charts(table, out_dir) -> list[Path]:
    """One chart per experiment, chosen by the table name."""
    out = Path(out_dir)
    col = table.column
    kids = {c.name: c for c in table.children}
    if table.name == "figure1":
        return [line_chart({"population logistic risk": (col("eta_t"), col("pop_logistic")),
                            "empirical logistic risk": (col("eta_t"), col("emp_risk"))},
                           out / "figure1_logistic.svg", "Logistic risk", "eta t", "risk"),
                line_chart({"population zero-one error": (col("eta_t"), col("pop_zero_one")),
                            "empirical zero-one error": (col("eta_t"), col("emp_zero_one"))},
                           out / "figure1_zero_one.svg", "Zero-one error", "eta t", "error")]
    if table.name == "divergence":
        return [line_chart({"population logistic risk": (col("eta_t"), col("pop_logistic")),
                            "calibration error": (col("eta_t"), col("calibration"))},
                           out / "divergence.svg", "Risk along the GD path", "eta t", "")]
    if table.name == "separation":
        s = kids["separation_summary"]
        n = s.column("n")
        return [line_chart({"max-margin": (n, s.column("median_excess_max_margin")),
                            "OLS interpolator": (n, s.column("median_excess_ols")),
                            "early-stopped GD": (n, s.column("median_excess_early_stopped"))},
                           out / "separation.svg", "Median excess zero-one error", "n", "",
                           logx=False)]
    if table.name == "path_compare":
        a = kids["path_compare_lambda_of_t"]
        return [line_chart({"matched norm": (col("eta_t"), col("distance")),
                            "lambda = 1/(eta t)": (a.column("eta_t"), a.column("distance"))},
                           out / "path_compare.svg", "Distance between the two paths",
                           "eta t", "distance")]
    if table.name == "counterexample":
        return [line_chart({"min distance to path": (col("eta_t"), col("min_distance")),
                            "ln ln |w_t|": (col("eta_t"), col("lnln_norm"))},
                           out / "counterexample.svg", "Distance to the regularization path",
                           "eta t", "")]
    return []
