"""SVG snapshots of a plan at chosen times."""
from __future__ import annotations

import re
from xml.sax.saxutils import escape

import numpy as np

from .core import ContractError, Plan
from .grid import GridGraph

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class RenderRangeError(ContractError):
    """Requested snapshot time lies outside the plan's time span."""


def snapshot_positions(plan: Plan, t: float) -> np.ndarray:
    if t < -1e-12 or t > plan.makespan + 1e-12:
        raise RenderRangeError(f"time {t} outside [0, {plan.makespan}]")
    return plan.positions_at(min(max(t, 0.0), plan.makespan))


def render_svg(plan: Plan, t: float, radius: float, grid: GridGraph | None = None,
               goal: np.ndarray | None = None, width_px: int = 800) -> str:
    """Discs at their interpolated positions at time ``t`` (2D plans only).

    ``grid`` adds the lattice edges underneath; ``goal`` adds goal outlines.
    """
    pos = snapshot_positions(plan, t)
    if pos.shape[1] != 2:
        raise ContractError("only planar plans can be rendered")
    allpts = np.concatenate([tr.points for tr in plan.trajectories])
    lo = allpts.min(axis=0) - 2 * radius
    hi = allpts.max(axis=0) + 2 * radius
    if grid is not None:
        lo = np.minimum(lo, grid.positions.min(axis=0) - radius)
        hi = np.maximum(hi, grid.positions.max(axis=0) + radius)
    size = hi - lo
    height_px = int(round(width_px * size[1] / size[0]))
    # flip y so the picture matches the usual axes
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" '
        f'viewBox="{lo[0]:.6f} {-hi[1]:.6f} {size[0]:.6f} {size[1]:.6f}">',
        f"<title>{escape(f't = {t:.6g}')}</title>",
        f'<rect x="{lo[0]:.6f}" y="{-hi[1]:.6f}" width="{size[0]:.6f}" height="{size[1]:.6f}" fill="white"/>',
    ]
    if grid is not None:
        p = grid.positions
        stroke = 0.05 * radius
        parts.append(f'<g stroke="#cccccc" stroke-width="{stroke:.4f}">')
        for a, b in grid.edges:
            parts.append(f'<line x1="{p[a, 0]:.6f}" y1="{-p[a, 1]:.6f}" x2="{p[b, 0]:.6f}" y2="{-p[b, 1]:.6f}"/>')
        parts.append("</g>")
    if goal is not None:
        parts.append(f'<g fill="none" stroke="#999999" stroke-width="{0.04 * radius:.4f}">')
        for x, y in np.asarray(goal):
            parts.append(f'<circle cx="{x:.6f}" cy="{-y:.6f}" r="{radius:.6f}"/>')
        parts.append("</g>")
    parts.append('<g stroke="black" stroke-width="{:.4f}" fill-opacity="0.8">'.format(0.03 * radius))
    for i, (x, y) in enumerate(pos):
        parts.append(f'<circle id="robot-{i}" cx="{x:.6f}" cy="{-y:.6f}" r="{radius:.6f}" '
                     f'fill="{_PALETTE[i % len(_PALETTE)]}"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def disc_centers(svg: str) -> np.ndarray:
    """Robot centers read back from a rendered snapshot (y flipped back)."""
    pat = re.compile(r'<circle id="robot-\d+" cx="([-0-9.e]+)" cy="([-0-9.e]+)"')
    pts = [(float(a), -float(b)) for a, b in pat.findall(svg)]
    return np.array(pts).reshape(-1, 2)
