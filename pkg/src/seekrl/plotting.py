"""Standalone SVG rendering of episode trajectories.

The SVG is written directly (no plotting library) so repeated runs produce
byte-identical files. World coordinates map to pixels with y flipped, since
SVG grows downward.
"""

from __future__ import annotations

from typing import Sequence


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_trajectory_svg(
    scene: dict,
    points: Sequence[tuple[float, float]],
    px_per_meter: float = 120.0,
    margin: float = 30.0,
) -> str:
    """Render arena, obstacles, source disc, start marker, and path.

    scene needs keys width, height, obstacles, source, success_radius, start.
    points are the per-step (x, y) positions, excluding the start.
    """
    width = float(scene["width"])
    height = float(scene["height"])
    sx, sy = float(scene["source"][0]), float(scene["source"][1])
    r_success = float(scene["success_radius"])
    x0, y0 = float(scene["start"][0]), float(scene["start"][1])

    def px(x: float) -> float:
        return margin + x * px_per_meter

    def py(y: float) -> float:
        return margin + (height - y) * px_per_meter

    canvas_w = width * px_per_meter + 2 * margin
    canvas_h = height * px_per_meter + 2 * margin

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(canvas_w)}" '
        f'height="{_f(canvas_h)}" viewBox="0 0 {_f(canvas_w)} {_f(canvas_h)}">',
        f'<rect x="0" y="0" width="{_f(canvas_w)}" height="{_f(canvas_h)}" fill="#ffffff"/>',
        f'<rect x="{_f(px(0))}" y="{_f(py(height))}" width="{_f(width * px_per_meter)}" '
        f'height="{_f(height * px_per_meter)}" fill="#fafafa" stroke="#333333" stroke-width="2"/>',
    ]
    for o in scene.get("obstacles", []):
        cx, cy = float(o["center"][0]), float(o["center"][1])
        hx, hy = float(o["half_extents"][0]), float(o["half_extents"][1])
        parts.append(
            f'<rect x="{_f(px(cx - hx))}" y="{_f(py(cy + hy))}" '
            f'width="{_f(2 * hx * px_per_meter)}" height="{_f(2 * hy * px_per_meter)}" '
            f'fill="#8d8d8d"/>'
        )
    parts.append(
        f'<circle cx="{_f(px(sx))}" cy="{_f(py(sy))}" r="{_f(r_success * px_per_meter)}" '
        f'fill="none" stroke="#2a9d2a" stroke-width="1.5" stroke-dasharray="6 4"/>'
    )
    parts.append(
        f'<circle cx="{_f(px(sx))}" cy="{_f(py(sy))}" r="6" fill="#2a9d2a"/>'
    )
    if points:
        coords = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in points)
        parts.append(
            f'<polyline points="{_f(px(x0))},{_f(py(y0))} {coords}" '
            f'fill="none" stroke="#d03232" stroke-width="2" stroke-opacity="0.9"/>'
        )
    parts.append(
        f'<circle cx="{_f(px(x0))}" cy="{_f(py(y0))}" r="6" fill="#2156c9"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
