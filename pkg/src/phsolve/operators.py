"""Discrete integral operators on periodic grid functions.

Every operator integrates along characteristic curves anchored at grid
nodes.  A shared CurveCache traces each (component, x-node) pair once for
all time nodes simultaneously; quadrature is composite trapezoid on the
curve samples, with bilinear (x) and periodic-linear (t) interpolation
supplying off-grid values of the argument function.

apply_* functions evaluate an operator against concrete grid values;
stencil_block / stencil_row express the same linear maps as explicit
weights on flattened node indices for matrix assembly.  Both paths share
the cache and the coefficient evaluations, so they agree to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .characteristics import DEFAULT_SUBSTEPS, trace_arrays
from .grid import (
    GridFunction,
    cubic_t_stencil,
    interp_t_rows_cubic,
    interp_values_cubic_t,
    locate_x,
    zeros,
)


@dataclass
class BlockCurve:
    """Curves of one component through one x-node, all time nodes at once.

    xi has shape (S,); times, gain, weight have shape (nt, S) with rows
    indexed by the anchor time node.  trap holds signed trapezoid weights
    realizing the integral from the boundary side of the component back to
    the anchor position.
    """

    xi: np.ndarray
    times: np.ndarray
    gain: np.ndarray
    weight: np.ndarray
    trap: np.ndarray


def _trap_weights(xi):
    w = np.zeros(len(xi))
    if len(xi) >= 2:
        d = np.diff(xi)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
    # stored order runs anchor -> boundary side; the operators integrate
    # boundary side -> anchor, so flip the sign
    return -w


def x_trapezoid(grid):
    """Composite trapezoid weights over the full x-grid."""
    w = np.full(grid.nx, grid.dx)
    w[0] = w[-1] = 0.5 * grid.dx
    return w


class CurveCache:
    """Memoized characteristic data per (component, x-node index).

    Safe for concurrent use: keys are computed from immutable inputs, so
    racing writers store identical values.
    """

    def __init__(self, p, grid, substeps=DEFAULT_SUBSTEPS):
        self.p = p
        self.grid = grid
        self.substeps = substeps
        self._curves = {}
        self._inner = {}

    def curve(self, j, i):
        key = (j, i)
        got = self._curves.get(key)
        if got is None:
            x = float(self.grid.xs[i])
            xi, times, gain, weight = trace_arrays(
                self.p,
                j,
                x,
                self.grid.ts,
                self.p.bc_side(j),
                self.grid.nx - 1,
                self.substeps,
            )
            got = BlockCurve(xi, times, gain, weight, _trap_weights(xi))
            self._curves[key] = got
        return got

    def inner_weights(self, j, i):
        """Weights W[s, p] realizing the inner spatial integral at each
        curve sample s from x-grid values: over [0, xi_s] in the Volterra
        case (partial last cell by sub-cell trapezoid), over [0, 1] in the
        Fredholm variant."""
        key = (j, i)
        got = self._inner.get(key)
        if got is None:
            cur = self.curve(j, i)
            nx = self.grid.nx
            if not self.p.volterra:
                got = np.tile(x_trapezoid(self.grid), (len(cur.xi), 1))
            else:
                hx = self.grid.dx
                got = np.zeros((len(cur.xi), nx))
                for s, pos in enumerate(cur.xi):
                    pf = min(int(np.floor(pos * (nx - 1) + 1e-12)), nx - 1)
                    if pf >= 1:
                        got[s, 0] += 0.5 * hx
                        got[s, pf] += 0.5 * hx
                        got[s, 1:pf] += hx
                    delta = pos - self.grid.xs[pf]
                    if delta > 0.0 and pf + 1 < nx:
                        th = delta / hx
                        got[s, pf] += 0.5 * delta * (2.0 - th)
                        got[s, pf + 1] += 0.5 * delta * th
            self._inner[key] = got
        return got


def _eval_on(node, xq, tq, shape):
    return np.broadcast_to(np.asarray(ex.evaluate(node, xq, tq), dtype=float), shape)


def _boundary_column(p, grid, k):
    # component k is prescribed at its own side; the operator reads the
    # opposite end of the interval
    return grid.nx - 1 if p.opposite_side(k) == 1.0 else 0


def apply_R(p, grid, u, caches=None):
    """Boundary-integral operator: transport the integral boundary data
    from the component's own side along the curve."""
    caches = caches if caches is not None else CurveCache(p, grid)
    out = zeros(grid, p.n)
    weta = x_trapezoid(grid)
    for j in range(1, p.n + 1):
        row = p.boundary_kernels[j - 1]
        live = [k for k in range(1, p.n + 1) if not ex.is_zero(row[k - 1])]
        if not live:
            continue
        for i in range(grid.nx):
            cur = caches.curve(j, i)
            om = cur.times[:, -1]
            acc = np.zeros(grid.nt)
            for k in live:
                rv = _eval_on(
                    row[k - 1], grid.xs[None, :], om[:, None], (grid.nt, grid.nx)
                )
                uk = interp_t_rows_cubic(grid, u.values[k - 1], om)
                acc += (rv * uk) @ weta
            out.values[j - 1, i, :] = cur.gain[:, -1] * acc
    return out


def apply_B(p, grid, u, caches=None):
    """Off-diagonal zero-order coupling integrated along the curve."""
    caches = caches if caches is not None else CurveCache(p, grid)
    out = zeros(grid, p.n)
    for j in range(1, p.n + 1):
        row = p.coupling[j - 1]
        live = [
            k
            for k in range(1, p.n + 1)
            if k != j and not ex.is_zero(row[k - 1])
        ]
        if not live:
            continue
        for i in range(grid.nx):
            cur = caches.curve(j, i)
            if len(cur.xi) < 2:
                continue
            shape = cur.times.shape
            total = np.zeros(shape)
            for k in live:
                bv = _eval_on(row[k - 1], cur.xi[None, :], cur.times, shape)
                ukv = interp_values_cubic_t(
                    grid, u.values[k - 1], cur.xi[None, :], cur.times
                )
                total += bv * ukv
            cw = cur.trap[None, :] * cur.weight
            out.values[j - 1, i, :] = -np.einsum("qs,qs->q", cw, total)
    return out


def apply_G(p, grid, u, caches=None):
    """Spatial-integral (Volterra or full-range) terms along the curve."""
    caches = caches if caches is not None else CurveCache(p, grid)
    out = zeros(grid, p.n)
    for j in range(1, p.n + 1):
        row = p.volterra_kernels[j - 1]
        live = [k for k in range(1, p.n + 1) if not ex.is_zero(row[k - 1])]
        if not live:
            continue
        for i in range(grid.nx):
            cur = caches.curve(j, i)
            if len(cur.xi) < 2:
                continue
            wi = caches.inner_weights(j, i)
            shape3 = cur.times.shape + (grid.nx,)
            inner = np.zeros(cur.times.shape)
            for k in live:
                gv = _eval_on(
                    row[k - 1],
                    grid.xs[None, None, :],
                    cur.times[:, :, None],
                    shape3,
                )
                ukv = interp_t_rows_cubic(grid, u.values[k - 1], cur.times)
                inner += np.einsum("qsp,sp->qs", gv * ukv, wi)
            cw = cur.trap[None, :] * cur.weight
            out.values[j - 1, i, :] = -np.einsum("qs,qs->q", cw, inner)
    return out


def apply_H(p, grid, u, caches=None):
    """Boundary-value coupling: reads each component at the end opposite
    to its prescribed side, integrated along the curve."""
    caches = caches if caches is not None else CurveCache(p, grid)
    out = zeros(grid, p.n)
    for j in range(1, p.n + 1):
        row = p.boundary_inputs[j - 1]
        live = [k for k in range(1, p.n + 1) if not ex.is_zero(row[k - 1])]
        if not live:
            continue
        for i in range(grid.nx):
            cur = caches.curve(j, i)
            if len(cur.xi) < 2:
                continue
            shape = cur.times.shape
            qs = cubic_t_stencil(grid, cur.times)
            total = np.zeros(shape)
            for k in live:
                hv = _eval_on(row[k - 1], cur.xi[None, :], cur.times, shape)
                edge = u.values[k - 1][_boundary_column(p, grid, k)]
                btr = sum(edge[qs[node]] * qs[4][node] for node in range(4))
                total += hv * btr
            cw = cur.trap[None, :] * cur.weight
            out.values[j - 1, i, :] = np.einsum("qs,qs->q", cw, total)
    return out


def apply_F(p, grid, caches=None):
    """Forcing integrated along the curve (the affine part of the fixed
    point equation)."""
    caches = caches if caches is not None else CurveCache(p, grid)
    out = zeros(grid, p.n)
    for j in range(1, p.n + 1):
        fj = p.forcing[j - 1]
        if ex.is_zero(fj):
            continue
        for i in range(grid.nx):
            cur = caches.curve(j, i)
            if len(cur.xi) < 2:
                continue
            shape = cur.times.shape
            fv = _eval_on(fj, cur.xi[None, :], cur.times, shape)
            cw = cur.trap[None, :] * cur.weight
            out.values[j - 1, i, :] = np.einsum("qs,qs->q", cw, fv)
    return out


def apply_K(p, grid, u, caches=None):
    """Sum of the four linear operators."""
    caches = caches if caches is not None else CurveCache(p, grid)
    total = apply_R(p, grid, u, caches)
    for fn in (apply_B, apply_G, apply_H):
        total.values += fn(p, grid, u, caches).values
    return total


@dataclass
class Stencil:
    """One row of the discrete operator: accumulated weights on flattened
    node indices plus the affine forcing constant."""

    indices: np.ndarray
    weights: np.ndarray
    constant: float

    def dot(self, flat):
        """Linear part applied to a flattened grid function."""
        return float(self.weights @ np.asarray(flat)[self.indices])


def stencil_block(p, grid, caches, j, i):
    """All time-node rows of the linear map u -> (Ku)_j(x_i, .) as a dense
    (nt, N) block, plus the forcing constants for those rows."""
    nt, nx, n = grid.nt, grid.nx, p.n
    ncols = n * nx * nt
    K = np.zeros((nt, ncols))
    const = np.zeros(nt)
    cur = caches.curve(j, i)
    rows = np.arange(nt)

    rrow = p.boundary_kernels[j - 1]
    live_r = [k for k in range(1, n + 1) if not ex.is_zero(rrow[k - 1])]
    if live_r:
        weta = x_trapezoid(grid)
        om = cur.times[:, -1]
        tq = cubic_t_stencil(grid, om)
        for k in live_r:
            rv = _eval_on(rrow[k - 1], grid.xs[None, :], om[:, None], (nt, nx))
            coeff = cur.gain[:, -1][:, None] * weta[None, :] * rv
            base = (k - 1) * nx * nt + np.arange(nx)[None, :] * nt
            for node in range(4):
                np.add.at(
                    K,
                    (rows[:, None], base + tq[node][:, None]),
                    coeff * tq[4][node][:, None],
                )

    if len(cur.xi) >= 2:
        shape = cur.times.shape
        cw = cur.trap[None, :] * cur.weight
        i0, thx = locate_x(grid, cur.xi)
        tq = cubic_t_stencil(grid, cur.times)

        brow = p.coupling[j - 1]
        for k in range(1, n + 1):
            if k == j or ex.is_zero(brow[k - 1]):
                continue
            bv = _eval_on(brow[k - 1], cur.xi[None, :], cur.times, shape)
            C = -cw * bv
            base = (k - 1) * nx * nt
            c0 = base + i0[None, :] * nt
            c1 = base + (i0 + 1)[None, :] * nt
            wx0 = (1.0 - thx)[None, :]
            wx1 = thx[None, :]
            for node in range(4):
                qn = tq[node]
                wn = tq[4][node]
                np.add.at(K, (rows[:, None], c0 + qn), C * wx0 * wn)
                np.add.at(K, (rows[:, None], c1 + qn), C * wx1 * wn)

        hrow = p.boundary_inputs[j - 1]
        for k in range(1, n + 1):
            if ex.is_zero(hrow[k - 1]):
                continue
            hv = _eval_on(hrow[k - 1], cur.xi[None, :], cur.times, shape)
            C = cw * hv
            base = (k - 1) * nx * nt + _boundary_column(p, grid, k) * nt
            for node in range(4):
                np.add.at(K, (rows[:, None], base + tq[node]), C * tq[4][node])

        grow = p.volterra_kernels[j - 1]
        live_g = [k for k in range(1, n + 1) if not ex.is_zero(grow[k - 1])]
        if live_g:
            wi = caches.inner_weights(j, i)
            shape3 = shape + (nx,)
            for k in live_g:
                gv = _eval_on(
                    grow[k - 1],
                    grid.xs[None, None, :],
                    cur.times[:, :, None],
                    shape3,
                )
                W3 = (-cw)[:, :, None] * wi[None, :, :] * gv
                base = (k - 1) * nx * nt + np.arange(nx)[None, None, :] * nt
                for node in range(4):
                    np.add.at(
                        K,
                        (rows[:, None, None], base + tq[node][:, :, None]),
                        W3 * tq[4][node][:, :, None],
                    )

        fj = p.forcing[j - 1]
        if not ex.is_zero(fj):
            fv = _eval_on(fj, cur.xi[None, :], cur.times, shape)
            const[:] = np.einsum("qs,qs->q", cw, fv)

    return K, const


def stencil_row(p, grid, caches, j, i, q):
    """The linear functional u -> (Ku)_j(x_i, t_q) with its forcing
    constant, as accumulated weights on flattened node indices."""
    K, const = stencil_block(p, grid, caches, j, i)
    row = K[q]
    idx = np.nonzero(row)[0]
    return Stencil(idx, row[idx].copy(), float(const[q]))
