"""Space-time grid and grid functions.

Space nodes x_i = i/(nx-1) include both endpoints of [0, 1]; time nodes
t_q = 2*pi*q/nt cover one period without duplicating the seam.  A grid
function stores one (nx, nt) array per component.  Interpolation is linear
in x and linear-periodic in t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import evaluate

TWO_PI = 2.0 * math.pi


class RangeError(ValueError):
    """Query or index outside the admissible range."""


@dataclass
class Grid:
    nx: int
    nt: int
    xs: np.ndarray = field(init=False, repr=False)
    ts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError(f"nx must be at least 3, got {self.nx}")
        if self.nt < 4:
            raise ValueError(f"nt must be at least 4, got {self.nt}")
        self.xs = np.arange(self.nx) / (self.nx - 1)
        self.ts = TWO_PI * np.arange(self.nt) / self.nt

    @property
    def dx(self):
        return 1.0 / (self.nx - 1)

    @property
    def dt(self):
        return TWO_PI / self.nt


@dataclass
class GridFunction:
    grid: Grid
    values: np.ndarray  # shape (n, nx, nt)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[1:] != (self.grid.nx, self.grid.nt):
            raise ValueError(
                f"values must have shape (n, {self.grid.nx}, {self.grid.nt}), "
                f"got {self.values.shape}"
            )

    @property
    def n(self):
        return self.values.shape[0]

    def copy(self):
        return GridFunction(self.grid, self.values.copy())


def zeros(grid, n):
    return GridFunction(grid, np.zeros((n, grid.nx, grid.nt)))


def sample(fn, grid):
    """Sample a callable fn(x, t) into a one-component grid function."""
    x = grid.xs[:, None]
    t = grid.ts[None, :]
    try:
        vals = np.broadcast_to(np.asarray(fn(x, t), dtype=float), (grid.nx, grid.nt))
    except (TypeError, ValueError):
        vals = np.array([[fn(xi, tq) for tq in grid.ts] for xi in grid.xs], dtype=float)
    return GridFunction(grid, vals[None, :, :].copy())


def sample_exprs(exprs, grid):
    """Sample a list of expression trees into an n-component grid function."""
    x = grid.xs[:, None]
    t = grid.ts[None, :]
    vals = np.empty((len(exprs), grid.nx, grid.nt))
    for k, e in enumerate(exprs):
        vals[k] = np.broadcast_to(evaluate(e, x, t), (grid.nx, grid.nt))
    return GridFunction(grid, vals)


def locate_x(grid, xq):
    """Cell index and fractional offset for x-queries (array in, array out).
    Queries are accepted up to 1e-12 outside [0, 1] and clamped; node hits
    snap to exact offsets 0 or 1 so node queries reproduce stored values."""
    xq = np.asarray(xq, dtype=float)
    if np.any(xq < -1e-12) or np.any(xq > 1.0 + 1e-12):
        worst = xq.flat[int(np.argmax(np.abs(xq - 0.5)))]
        raise RangeError(f"x-query {worst!r} outside [0, 1]")
    xc = np.clip(xq, 0.0, 1.0)
    s = xc * (grid.nx - 1)
    i0 = np.clip(np.floor(s).astype(np.int64), 0, grid.nx - 2)
    theta = s - i0
    theta = np.where(xc == grid.xs[i0], 0.0, theta)
    theta = np.where(xc == grid.xs[i0 + 1], 1.0, theta)
    return i0, theta


def locate_t(grid, tq):
    """Periodic cell index and fractional offset for t-queries."""
    tq = np.asarray(tq, dtype=float)
    tr = np.mod(tq, TWO_PI)
    s = tr / grid.dt
    q0 = np.clip(np.floor(s).astype(np.int64), 0, grid.nt - 1)
    theta = s - q0
    theta = np.where(tr == grid.ts[q0], 0.0, theta)
    q1 = q0 + 1
    hi = grid.ts[np.clip(q1, 0, grid.nt - 1)]
    theta = np.where((q1 < grid.nt) & (tr == hi), 1.0, theta)
    return q0, q1 % grid.nt, theta


def interp_values(grid, comp, xq, tq):
    """Bilinear interpolation of one component array at arbitrary points.
    xq and tq must broadcast against each other."""
    xq, tq = np.broadcast_arrays(np.asarray(xq, float), np.asarray(tq, float))
    i0, thx = locate_x(grid, xq)
    q0, q1, tht = locate_t(grid, tq)
    v00 = comp[i0, q0]
    v10 = comp[i0 + 1, q0]
    v01 = comp[i0, q1]
    v11 = comp[i0 + 1, q1]
    wx1 = thx
    wx0 = 1.0 - thx
    wt1 = tht
    wt0 = 1.0 - tht
    return wx0 * wt0 * v00 + wx1 * wt0 * v10 + wx0 * wt1 * v01 + wx1 * wt1 * v11


def interp_t_all_rows(grid, comp, tq):
    """Periodic linear t-interpolation of every x-row at the query times.
    Returns an array of shape tq.shape + (nx,)."""
    tq = np.asarray(tq, dtype=float)
    q0, q1, tht = locate_t(grid, tq)
    lo = np.moveaxis(comp[:, q0], 0, -1)
    hi = np.moveaxis(comp[:, q1], 0, -1)
    return lo * (1.0 - tht)[..., None] + hi * tht[..., None]


def cubic_t_stencil(grid, tq):
    """Four-node periodic cubic Lagrange stencil in t.

    Returns (qm1, q0, q1, q2, weights) where the q-arrays index the four
    wrapped time nodes around each query and weights has shape
    (4,) + tq.shape.  Exact at nodes (the weight vector degenerates to a
    unit vector there) and exactly 2pi-periodic.
    """
    q0, _, tht = locate_t(grid, tq)
    th = np.asarray(tht, dtype=float)
    wm1 = -th * (th - 1.0) * (th - 2.0) / 6.0
    w0 = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0
    w1 = -(th + 1.0) * th * (th - 2.0) / 2.0
    w2 = (th + 1.0) * th * (th - 1.0) / 6.0
    nt = grid.nt
    return (
        (q0 - 1) % nt,
        q0,
        (q0 + 1) % nt,
        (q0 + 2) % nt,
        np.stack([wm1, w0, w1, w2]),
    )


def interp_t_rows_cubic(grid, comp, tq):
    """Periodic cubic t-interpolation of every x-row at the query times.
    Returns an array of shape tq.shape + (nx,)."""
    tq = np.asarray(tq, dtype=float)
    qm1, q0, q1, q2, w = cubic_t_stencil(grid, tq)
    out = np.moveaxis(comp[:, qm1], 0, -1) * w[0][..., None]
    out += np.moveaxis(comp[:, q0], 0, -1) * w[1][..., None]
    out += np.moveaxis(comp[:, q1], 0, -1) * w[2][..., None]
    out += np.moveaxis(comp[:, q2], 0, -1) * w[3][..., None]
    return out


def interp_values_cubic_t(grid, comp, xq, tq):
    """Linear in x, periodic cubic in t; the interpolation used inside the
    operator quadratures (one order better in t than interp_values, which
    keeps oscillatory data from polluting curve integrals)."""
    xq, tq = np.broadcast_arrays(np.asarray(xq, float), np.asarray(tq, float))
    i0, thx = locate_x(grid, xq)
    qm1, q0, q1, q2, w = cubic_t_stencil(grid, tq)
    lo = (
        comp[i0, qm1] * w[0]
        + comp[i0, q0] * w[1]
        + comp[i0, q1] * w[2]
        + comp[i0, q2] * w[3]
    )
    i1 = i0 + 1
    hi = (
        comp[i1, qm1] * w[0]
        + comp[i1, q0] * w[1]
        + comp[i1, q1] * w[2]
        + comp[i1, q2] * w[3]
    )
    return lo * (1.0 - thx) + hi * thx


def interpolate(g, j, x, t):
    """Interpolate component j (numbered from 1) at a single point."""
    if not 1 <= j <= g.n:
        raise RangeError(f"component index {j} outside 1..{g.n}")
    out = interp_values(g.grid, g.values[j - 1], np.asarray(x, float), np.asarray(t, float))
    return float(out)


def sup_norm(g):
    """Max of |values| over all components and nodes."""
    return float(np.max(np.abs(g.values)))


def flatten(j, i, q, grid, n=None):
    """Flat index of component j (from 1), space node i, time node q.
    Component-major, then space, then time."""
    if j < 1 or (n is not None and j > n):
        raise RangeError(f"component index {j} out of range")
    if not 0 <= i < grid.nx:
        raise RangeError(f"space index {i} outside 0..{grid.nx - 1}")
    if not 0 <= q < grid.nt:
        raise RangeError(f"time index {q} outside 0..{grid.nt - 1}")
    return ((j - 1) * grid.nx + i) * grid.nt + q


def unflatten(idx, grid, n=None):
    """Inverse of flatten; returns (j, i, q) with j numbered from 1."""
    if idx < 0 or (n is not None and idx >= n * grid.nx * grid.nt):
        raise RangeError(f"flat index {idx} out of range")
    q = idx % grid.nt
    rest = idx // grid.nt
    i = rest % grid.nx
    j = rest // grid.nx + 1
    return j, i, q


def dump_csv(g, path):
    """Write rows (j,i,q,x,t,value) in flat order with a header line."""
    with open(path, "w") as fh:
        fh.write("j,i,q,x,t,value\n")
        for j in range(1, g.n + 1):
            for i in range(g.grid.nx):
                x = float(g.grid.xs[i])
                for q in range(g.grid.nt):
                    t = float(g.grid.ts[q])
                    v = float(g.values[j - 1, i, q])
                    fh.write(f"{j},{i},{q},{x!r},{t!r},{v!r}\n")
