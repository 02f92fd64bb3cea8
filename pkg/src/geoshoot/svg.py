"""Minimal hand-rolled SVG output for sweeps and shape overlays.

Self-contained text, no plotting dependency: the figures these mirror
are static, and diffable markup beats a binary image for regression
checks.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .analysis import DIVERGED, SweepGrid

__all__ = ["heatmap_svg", "shapes_svg", "frames_svg", "save_svg"]

_PALETTE = ("#1f6f8b", "#c0392b", "#7d6b2f", "#5b4a8a", "#2e7d4f", "#8a4a5b")


def _esc(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def heatmap_svg(grid: SweepGrid, matrix: np.ndarray, cell: int = 56) -> str:
    """Gray-level map of a convergence sweep.

    Gray level is proportional to the iteration count (fast cells dark,
    slow cells light, capped short of white so the slowest converged
    cell never reads as divergent); diverged cells are white and marked
    with a cross, mirroring the usual tabulation.
    """
    rows, cols = matrix.shape
    left, top = 70, 34
    width = left + cols * cell + 16
    height = top + rows * cell + 46
    converged = matrix[matrix != DIVERGED]
    vmax = int(converged.max()) if converged.size else 1

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18">iterations to convergence '
        f"({_esc(grid.kernel_family.value)} kernel, N={grid.n_landmarks}, "
        f"tol={grid.tolerance:g})</text>",
    ]
    for j, h in enumerate(grid.h_values):
        parts.append(
            f'<text x="{left + j * cell + cell / 2:.0f}" y="{top - 6}" '
            f'text-anchor="middle">h={h:g}</text>'
        )
    for i, alpha2 in enumerate(grid.alpha2_values):
        parts.append(
            f'<text x="{left - 8}" y="{top + i * cell + cell / 2 + 4:.0f}" '
            f'text-anchor="end">a2={alpha2:g}</text>'
        )
        for j in range(cols):
            x, y = left + j * cell, top + i * cell
            value = int(matrix[i, j])
            if value == DIVERGED:
                fill, label, text_fill = "white", "x", "#444444"
            else:
                level = int(round(208 * value / vmax)) if vmax else 0
                fill = f"rgb({level},{level},{level})"
                label = str(value)
                text_fill = "white" if level < 112 else "black"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{fill}" stroke="#888888"/>'
            )
            parts.append(
                f'<text x="{x + cell / 2:.0f}" y="{y + cell / 2 + 4:.0f}" '
                f'text-anchor="middle" fill="{text_fill}">{label}</text>'
            )
    parts.append(
        f'<text x="{left}" y="{height - 14}">gray level proportional to '
        "iterations; white cross = diverged</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)


def _bounds(point_sets):
    pts = np.vstack(point_sets)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    return lo, span


def _project(points, lo, span, size, pad):
    # SVG y grows downward; flip so the plot keeps math orientation.
    scale = (size - 2 * pad) / span
    x = pad + (points[:, 0] - lo[0]) * scale
    y = size - pad - (points[:, 1] - lo[1]) * scale
    return x, y


def _polyline(x, y, stroke, opacity=1.0, marker_r=2.0):
    coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
    out = [
        f'<polygon points="{coords}" fill="none" stroke="{stroke}" '
        f'stroke-opacity="{opacity:.3f}"/>'
    ]
    if marker_r > 0:
        out.extend(
            f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{marker_r}" '
            f'fill="{stroke}" fill-opacity="{opacity:.3f}"/>'
            for a, b in zip(x, y)
        )
    return out


def shapes_svg(templates, size: int = 480) -> str:
    """Closed-contour overlay of labeled templates on shared axes."""
    pad = 28
    lo, span = _bounds([t.points for t in templates])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for k, t in enumerate(templates):
        color = _PALETTE[k % len(_PALETTE)]
        x, y = _project(t.points, lo, span, size, pad)
        parts.extend(_polyline(x, y, color))
        parts.append(
            f'<text x="{pad}" y="{16 + 14 * k}" fill="{color}">{_esc(t.label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def frames_svg(frames, size: int = 480) -> str:
    """Trajectory frames as one contour each, fading in with time."""
    pad = 28
    lo, span = _bounds([state.q for _, state in frames])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    n = len(frames)
    for k, (t, state) in enumerate(frames):
        opacity = 0.25 + 0.75 * (k / (n - 1)) if n > 1 else 1.0
        x, y = _project(state.q, lo, span, size, pad)
        parts.extend(_polyline(x, y, "#1f6f8b", opacity, marker_r=1.5))
        parts.append(
            f'<text x="{pad}" y="{16 + 14 * k}" fill="#1f6f8b" '
            f'fill-opacity="{opacity:.3f}">t={t:g}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def save_svg(markup: str, path) -> Path:
    path = Path(path)
    path.write_text(markup + "\n")
    return path
