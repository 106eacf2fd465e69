"""File outputs: a dependency-free log-log SVG plot and the run manifest."""
from __future__ import annotations

import json
import platform
from importlib import metadata

import numpy as np
import scipy
import sklearn

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
          "#7f7f7f", "#bcbd22", "#17becf")


def write_loglog_svg(path, times, series: dict, guides=None, title="", width=640, height=420):
    """Polyline plot of positive values on log-log axes.

    ``guides`` maps a series name to an expected exponent; a dashed line with
    that slope is drawn through the series' last point.
    """
    guides = guides or {}
    t = np.asarray(times, dtype=float)
    curves = []
    for name, vals in series.items():
        y = np.asarray(vals, dtype=float)
        keep = (t > 0.0) & (y > 0.0) & np.isfinite(y)
        if keep.sum() >= 2:
            curves.append((name, np.log10(t[keep]), np.log10(y[keep])))
    margin = 60
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    if not curves:
        parts.append(f'<text x="{width / 2}" y="{height / 2}" text-anchor="middle">'
                     'no positive data</text></svg>')
        _write(path, "\n".join(parts))
        return
    xs = np.concatenate([c[1] for c in curves])
    ys = np.concatenate([c[2] for c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(lx):
        return margin + (lx - x0) / (x1 - x0) * (width - 2 * margin)

    def py(ly):
        return height - margin - (ly - y0) / (y1 - y0) * (height - 2 * margin)

    parts.append(f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
                 f'height="{height - 2 * margin}" fill="none" stroke="black"/>')
    for d in range(int(np.ceil(x0)), int(np.floor(x1)) + 1):
        parts.append(f'<text x="{px(d):.1f}" y="{height - margin + 16}" text-anchor="middle" '
                     f'font-size="11">1e{d}</text>')
    for d in range(int(np.ceil(y0)), int(np.floor(y1)) + 1):
        parts.append(f'<text x="{margin - 6}" y="{py(d):.1f}" text-anchor="end" '
                     f'font-size="11">1e{d}</text>')
    for i, (name, lx, ly) in enumerate(curves):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, ly))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" y="{margin + 14 * i + 10}" '
                     f'font-size="11" fill="{color}">{name}</text>')
        if name in guides:
            slope = guides[name]
            gx = np.array([lx[0], lx[-1]])
            gy = ly[-1] + slope * (gx - lx[-1])
            gy = np.clip(gy, y0, y1)
            parts.append(f'<line x1="{px(gx[0]):.2f}" y1="{py(gy[0]):.2f}" x2="{px(gx[1]):.2f}" '
                         f'y2="{py(gy[1]):.2f}" stroke="{color}" stroke-dasharray="5,4"/>')
    parts.append("</svg>")
    _write(path, "\n".join(parts))


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text + "\n")


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def versions() -> dict:
    return {
        "m1lab": package_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
    }


def write_manifest(path, config_digest, extra=None):
    """JSON manifest with the config hash and library versions (no timestamps)."""
    data = {"config_sha256": config_digest, "versions": versions()}
    data.update(extra or {})
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
