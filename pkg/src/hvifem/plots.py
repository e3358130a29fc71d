"""Hand-written SVG output: multiplier scatter plots and flat-shaded solutions."""
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidArgumentError
from .nonsmooth import graph_distance

WIDTH, HEIGHT = 800, 600
PLOT_TOL = 1e-6


class _Axes:
    """Linear map from a padded data box to the plotting area."""

    def __init__(self, xlim, ylim, box=(80, 40, 760, 540)):
        self.x0, self.x1 = _pad(*xlim)
        self.y0, self.y1 = _pad(*ylim)
        self.left, self.top, self.right, self.bottom = box

    def px(self, x):
        return self.left + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)


def _pad(lo, hi):
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _header(title):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>']


def _axis_lines(ax, xlabel, ylabel):
    out = [f'<rect x="{ax.left}" y="{ax.top}" width="{ax.right - ax.left}" '
           f'height="{ax.bottom - ax.top}" fill="none" stroke="black"/>']
    for v in np.linspace(ax.x0, ax.x1, 6):
        x = ax.px(v)
        out.append(f'<line x1="{x:.2f}" y1="{ax.bottom}" x2="{x:.2f}" y2="{ax.bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{ax.bottom + 20}" text-anchor="middle" '
                   f'font-size="12">{v:.3g}</text>')
    for v in np.linspace(ax.y0, ax.y1, 6):
        y = ax.py(v)
        out.append(f'<line x1="{ax.left - 5}" y1="{y:.2f}" x2="{ax.left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ax.left - 8}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-size="12">{v:.3g}</text>')
    out.append(f'<text x="{(ax.left + ax.right) / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-size="14">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(ax.top + ax.bottom) / 2}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 18 {(ax.top + ax.bottom) / 2})">{escape(ylabel)}</text>')
    return out


def multiplier_points(sol, which):
    """(u values, multiplier values) at the vertices shown in a scatter plot."""
    if which == "boundary":
        return sol.u.values[sol.lambda_vertices], np.asarray(sol.lambda_nodal)
    if which == "interior":
        return sol.u.values, np.asarray(sol.mu_nodal)
    raise InvalidArgumentError(f"which must be 'boundary' or 'interior', got {which!r}")


def emit_multiplier_plot(sol, p, which, path, plot_tol=PLOT_TOL):
    """Scatter of (u_h(v_i), multiplier(v_i)) over the graph of the gradient of j.

    Returns the number of scatter points.  Refuses unconverged solutions and
    points farther than ``plot_tol`` from the graph.
    """
    if not sol.converged:
        raise InvalidArgumentError("refusing to plot multipliers of an unconverged solution")
    t, z = multiplier_points(sol, which)
    dist = graph_distance(t, z, p)
    if len(t) and float(np.max(dist)) > plot_tol:
        raise InvalidArgumentError(
            f"multiplier point off the graph by {float(np.max(dist)):.3e} (> {plot_tol:g})")

    tmin = min(float(np.min(t)) if len(t) else 0.0, 0.0)
    tmax = max(float(np.max(t)) if len(t) else 0.0, 0.0)
    if tmax - tmin == 0.0:
        tmin, tmax = -1.0, 1.0
    zmax = max(p.jump, float(np.max(z)) if len(z) else 0.0)
    ax = _Axes((tmin, tmax), (0.0, zmax))

    name = "lambda_h" if which == "boundary" else "mu_h"
    title = f"{name} against u_h ({'boundary' if which == 'boundary' else 'domain'} vertices)"
    out = _header(title)
    out += _axis_lines(ax, "u_h", name)
    # graph of the generalized gradient: flat part, vertical jump, smooth branch
    graph = [(ax.px(ax.x0), ax.py(0.0)), (ax.px(0.0), ax.py(0.0)), (ax.px(0.0), ax.py(p.jump))]
    ts = np.linspace(0.0, ax.x1, 200) if ax.x1 > 0 else np.zeros(0)
    graph += list(zip(ax.px(ts), ax.py(p.a * np.exp(-p.a * ts) + p.b)))
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in graph)
    out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    for x, y in zip(ax.px(t), ax.py(z)):
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="#d62728" fill-opacity="0.7"/>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return len(t)


def _color(s):
    """Diverging blue-white-red map on s in [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    lo = np.array([59, 76, 192])
    mid = np.array([245, 245, 245])
    hi = np.array([180, 4, 38])
    w = np.where(s < 0.5, 2 * s, 2 * s - 1)[:, None]
    rgb = np.where((s < 0.5)[:, None], lo + (mid - lo) * w, mid + (hi - mid) * w)
    return [f"#{r:02x}{g:02x}{b:02x}" for r, g, b in np.rint(rgb).astype(int)]


def emit_solution_plot(field, mesh, path, title="u_h"):
    """Flat-shaded triangles of the unit square coloured by the cell mean of ``field``."""
    if field.mesh_level != mesh.level:
        raise InvalidArgumentError("field and mesh levels differ")
    values = field.values
    cell = values[mesh.triangles].mean(axis=1)
    bound = float(np.max(np.abs(values))) or 1.0
    colors = _color(0.5 + 0.5 * cell / bound)
    size, left, top = 500, 80, 60
    xy = mesh.vertices[mesh.triangles]
    px = left + xy[..., 0] * size
    py = top + (1.0 - xy[..., 1]) * size
    out = _header(title)
    for k in range(len(cell)):
        pts = " ".join(f"{px[k, i]:.2f},{py[k, i]:.2f}" for i in range(3))
        out.append(f'<polygon points="{pts}" fill="{colors[k]}" stroke="{colors[k]}" '
                   f'stroke-width="0.3"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>')
    # colour bar
    bar_x, steps = 640, 50
    for i, c in enumerate(_color(np.linspace(1.0, 0.0, steps))):
        out.append(f'<rect x="{bar_x}" y="{top + i * size / steps:.2f}" width="24" '
                   f'height="{size / steps + 0.5:.2f}" fill="{c}"/>')
    for frac, v in ((0.0, bound), (0.5, 0.0), (1.0, -bound)):
        out.append(f'<text x="{bar_x + 32}" y="{top + frac * size + 4:.2f}" font-size="12">{v:.4g}</text>')
    out.append(f'<text x="{left + size / 2}" y="{top + size + 25}" text-anchor="middle" font-size="14">x</text>')
    out.append(f'<text x="{left - 20}" y="{top + size / 2}" text-anchor="middle" font-size="14">y</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path
