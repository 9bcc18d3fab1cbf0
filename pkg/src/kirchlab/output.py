"""Deterministic artifact emission: CSV, JSON, and tiny self-contained SVG.

All floats are written with Python's repr (shortest round-trip decimal),
so repeated runs of the same config produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

__all__ = ["fmt", "write_csv", "write_json", "write_svg_lines"]


def fmt(value) -> str:
    """Shortest round-trip text for a scalar."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if hasattr(obj, "item") and not isinstance(obj, (int, float, str, bool)):
        return obj.item()
    return obj


def write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")
    return path


def write_svg_lines(path, series, title="", width=640, height=400, logy=False) -> Path:
    """Minimal polyline plot; `series` is {label: (xs, ys)}.  Diagnostic
    only — never load-bearing for verdicts."""
    import math

    path = Path(path)
    pts_all = []
    for xs, ys in series.values():
        for x, y in zip(xs, ys):
            if logy:
                y = math.log10(abs(y)) if y != 0 else float("nan")
            if math.isfinite(x) and math.isfinite(y):
                pts_all.append((x, y))
    if not pts_all:
        path.write_text(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>\n')
        return path
    x0 = min(p[0] for p in pts_all)
    x1 = max(p[0] for p in pts_all)
    y0 = min(p[1] for p in pts_all)
    y1 = max(p[1] for p in pts_all)
    dx = (x1 - x0) or 1.0
    dy = (y1 - y0) or 1.0
    margin = 40

    def sx(x):
        return margin + (x - x0) / dx * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / dy * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for i, (label, (xs, ys)) in enumerate(series.items()):
        pts = []
        for x, y in zip(xs, ys):
            import math as _m

            if logy:
                if y == 0:
                    continue
                y = _m.log10(abs(y))
            if _m.isfinite(x) and _m.isfinite(y):
                pts.append(f"{sx(x):.2f},{sy(y):.2f}")
        color = colors[i % len(colors)]
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>'
        )
        parts.append(
            f'<text x="{margin}" y="{margin + 16 * i}" font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path
