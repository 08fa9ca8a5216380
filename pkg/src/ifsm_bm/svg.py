"""Minimal SVG line plots of sampled paths (no plotting dependency)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .path import SampledPath

WIDTH, HEIGHT = 800, 400
MARGIN = 20
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def render_svg(paths: Sequence[tuple[str, SampledPath]], title: str = "") -> str:
    """One polyline per (label, path) on a shared linear value axis.

    Coordinates are written with 3 decimals, so output is stable byte for
    byte for identical inputs.
    """
    if not paths:
        raise ValueError("nothing to plot")
    lo = min(float(p.values.min()) for _, p in paths)
    hi = max(float(p.values.max()) for _, p in paths)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    sx = WIDTH - 2 * MARGIN
    sy = HEIGHT - 2 * MARGIN

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        lines.append(f'<title>{_escape(title)}</title>')
    for k, (label, p) in enumerate(paths):
        x = MARGIN + p.t * sx
        y = MARGIN + (hi - p.values) / (hi - lo) * sy
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(x, y))
        colour = COLOURS[k % len(COLOURS)]
        lines.append(
            f'<polyline fill="none" stroke="{colour}" stroke-width="1" '
            f'data-label="{_escape(label)}" points="{pts}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(paths: Sequence[tuple[str, SampledPath]], dest, title: str = "") -> None:
    with open(dest, "w", newline="\n") as fh:
        fh.write(render_svg(paths, title))


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def polyline_points(svg: str) -> list[np.ndarray]:
    """Parse the polylines back out of :func:`render_svg` output (used by tests)."""
    out = []
    for chunk in svg.split('points="')[1:]:
        body = chunk.split('"', 1)[0]
        out.append(np.array([[float(c) for c in pt.split(",")] for pt in body.split()]))
    return out
