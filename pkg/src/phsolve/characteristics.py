"""Characteristic curves of the hyperbolic system.

The curve of component j through the anchor (x, t) assigns to every space
position xi the crossing time omega(xi), solving

    d omega / d xi = 1 / speed_j(xi, omega),   omega(x) = t.

Along the curve two weights accumulate: the gain

    c(xi) = exp( integral_x^xi  diag_coupling_j / speed_j ),

which transports boundary data, and the integrand weight d = c / speed_j
used by every quadrature along the curve.  Tracing is classical RK4 with a
fixed step tied to the target grid resolution; the gain exponent is
integrated with the same stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .grid import RangeError
from .problem import SPEED_FLOOR

DEFAULT_CELLS = 128
DEFAULT_SUBSTEPS = 4


class TraceError(ArithmeticError):
    """Speed degenerated (|speed| < 1e-10) somewhere along the curve."""


@dataclass
class CharacteristicCurve:
    """Sampled curve: arrays xi, times, gain, weight share one length and
    run from the anchor x toward the requested end position."""

    j: int
    x: float
    t: float
    xi: np.ndarray
    times: np.ndarray
    gain: np.ndarray
    weight: np.ndarray

    @property
    def step(self):
        return 0.0 if len(self.xi) < 2 else float(self.xi[1] - self.xi[0])


def _speed_at(p, j, xi, om):
    val = ex.evaluate(p.speeds[j - 1], xi, om)
    if np.min(np.abs(val)) < SPEED_FLOOR:
        raise TraceError(
            f"speed of component {j} degenerates near xi={float(np.atleast_1d(xi).flat[0]):.6g}"
        )
    return val

def _step_count(span, cells):
    if span <= 0.0:
        return 0
    return max(1, int(math.ceil(span * cells - 1e-9)))


def trace_arrays(p, j, x, t, xi_end, cells, substeps):
    """Vectorized RK4 trace for a batch of anchor times.

    t has shape (Q,); returns (xi, times, gain, weight) where xi has shape
    (S+1,) and the rest (Q, S+1).  Sample 0 sits at the anchor.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nq = t.shape[0]
    span = abs(xi_end - x)
    steps = _step_count(span, cells)
    if steps == 0:
        xi = np.array([x])
        times = t[:, None].copy()
        gain = np.ones((nq, 1))
        aval = np.broadcast_to(np.asarray(_speed_at(p, j, x, t), dtype=float), (nq,))
        weight = gain / aval[:, None]
        return xi, times, gain, weight
    total = substeps * steps
    h = (xi_end - x) / total
    xi = x + h * np.arange(total + 1)
    xi[-1] = xi_end
    diag = p.coupling[j - 1][j - 1]
    with_gain = not ex.is_zero(diag)
    times = np.empty((nq, total + 1))
    logc = np.zeros((nq, total + 1))
    avals = np.empty((nq, total + 1))
    times[:, 0] = t
    om = t.astype(float).copy()
    lg = np.zeros(nq)
    for s in range(total):
        x0 = xi[s]
        xm = x0 + 0.5 * h
        x1 = xi[s + 1]
        a1 = _speed_at(p, j, x0, om)
        avals[:, s] = a1
        k1 = 1.0 / a1
        a2 = _speed_at(p, j, xm, om + 0.5 * h * k1)
        k2 = 1.0 / a2
        a3 = _speed_at(p, j, xm, om + 0.5 * h * k2)
        k3 = 1.0 / a3
        a4 = _speed_at(p, j, x1, om + h * k3)
        k4 = 1.0 / a4
        if with_gain:
            l1 = ex.evaluate(diag, x0, om) * k1
            l2 = ex.evaluate(diag, xm, om + 0.5 * h * k1) * k2
            l3 = ex.evaluate(diag, xm, om + 0.5 * h * k2) * k3
            l4 = ex.evaluate(diag, x1, om + h * k3) * k4
            lg = lg + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        om = om + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        times[:, s + 1] = om
        logc[:, s + 1] = lg
    avals[:, -1] = _speed_at(p, j, xi_end, om)
    gain = np.exp(logc)
    weight = gain / avals
    return xi, times, gain, weight


def trace(p, j, x, t, xi_end, cells=DEFAULT_CELLS, substeps=DEFAULT_SUBSTEPS):
    """Trace the curve of component j (numbered from 1) from anchor (x, t)
    to the position xi_end.  Both positions must lie in [0, 1]."""
    for name, v in (("x", x), ("xi_end", xi_end)):
        if not -1e-12 <= v <= 1.0 + 1e-12:
            raise RangeError(f"{name}={v!r} outside [0, 1]")
    xi, times, gain, weight = trace_arrays(p, j, x, float(t), xi_end, cells, substeps)
    return CharacteristicCurve(j, float(x), float(t), xi, times[0], gain[0], weight[0])


def _merged_span(p, j, x, t, cells, substeps):
    """Samples of the full curve across [0, 1] through (x, t), ordered by
    ascending xi.  Returns (xi, times) flat arrays."""
    xi_l, tm_l, _, _ = trace_arrays(p, j, x, t, 0.0, cells, substeps)
    xi_r, tm_r, _, _ = trace_arrays(p, j, x, t, 1.0, cells, substeps)
    xi = np.concatenate([xi_l[::-1], xi_r[1:]]) if len(xi_r) > 1 else xi_l[::-1]
    tm = (
        np.concatenate([tm_l[0, ::-1], tm_r[0, 1:]])
        if len(xi_r) > 1
        else tm_l[0, ::-1]
    )
    return xi, tm


def _directed_trapezoid(values, nodes):
    """Trapezoid sum along the stored sample order (signed increments)."""
    if len(nodes) < 2:
        return 0.0
    dx = np.diff(nodes)
    return float(np.sum(0.5 * (values[..., 1:] + values[..., :-1]) * dx, axis=-1))


def _crossing_exponent(p, j, curve):
    """exp of integral from the curve end back to the anchor of
    (dt speed) / speed^2 along the samples."""
    integrand = ex.evaluate(p.speed_dt(j), curve.xi, curve.times) / np.square(
        ex.evaluate(p.speeds[j - 1], curve.xi, curve.times)
    )
    integrand = np.broadcast_to(integrand, curve.xi.shape)
    # stored order integrates from x toward xi; the identity wants xi -> x
    return math.exp(-_directed_trapezoid(integrand, curve.xi))


def time_partial_t(p, j, xi, x, t, cells=DEFAULT_CELLS, substeps=DEFAULT_SUBSTEPS):
    """Sensitivity of the crossing time at xi to the anchor time t:
    exp( integral_xi^x (dt speed)/speed^2 along the curve )."""
    curve = trace(p, j, x, t, xi, cells, substeps)
    return _crossing_exponent(p, j, curve)


def time_partial_x(p, j, xi, x, t, cells=DEFAULT_CELLS, substeps=DEFAULT_SUBSTEPS):
    """Sensitivity of the crossing time at xi to the anchor position x;
    equals -time_partial_t / speed(x, t)."""
    curve = trace(p, j, x, t, xi, cells, substeps)
    return -_crossing_exponent(p, j, curve) / ex.evaluate(p.speeds[j - 1], x, t)


def _omega_between(p, j, xi_from, om_from, xi_to, nsub=2):
    """Continue the crossing time from one known point to a nearby xi."""
    if xi_to == xi_from:
        return om_from
    h = (xi_to - xi_from) / nsub
    om = om_from
    xcur = xi_from
    for _ in range(nsub):
        a1 = _speed_at(p, j, xcur, om)
        k1 = 1.0 / a1
        a2 = _speed_at(p, j, xcur + 0.5 * h, om + 0.5 * h * k1)
        k2 = 1.0 / a2
        a3 = _speed_at(p, j, xcur + 0.5 * h, om + 0.5 * h * k2)
        k3 = 1.0 / a3
        a4 = _speed_at(p, j, xcur + h, om + h * k3)
        k4 = 1.0 / a4
        om = om + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xcur += h
    return float(om)


def _invert_on_samples(p, j, xi, tm, z, target=1e-12):
    """Position where the sampled curve crosses time z (bracketed Newton)."""
    increasing = tm[-1] >= tm[0]
    lo_t, hi_t = (tm[0], tm[-1]) if increasing else (tm[-1], tm[0])
    slack = 1e-10 * (1.0 + abs(hi_t - lo_t))
    if z < lo_t - slack or z > hi_t + slack:
        raise RangeError(
            f"time {z!r} outside the curve range [{float(lo_t)!r}, {float(hi_t)!r}]"
        )
    zc = min(max(z, lo_t), hi_t)
    key = tm if increasing else -tm
    idx = int(np.searchsorted(key, zc if increasing else -zc))
    idx = min(max(idx, 1), len(tm) - 1)
    lo, hi = xi[idx - 1], xi[idx]
    t_lo, t_hi = tm[idx - 1], tm[idx]
    if t_hi == t_lo:
        return float(lo)
    cur = lo + (zc - t_lo) / (t_hi - t_lo) * (hi - lo)
    best = cur
    best_res = math.inf
    for _ in range(80):
        near = int(np.searchsorted(xi, cur))
        near = min(max(near, 0), len(xi) - 1)
        if near > 0 and abs(xi[near - 1] - cur) < abs(xi[near] - cur):
            near -= 1
        om = _omega_between(p, j, float(xi[near]), float(tm[near]), float(cur))
        res = om - zc
        if abs(res) < abs(best_res):
            best, best_res = cur, res
        if abs(res) <= target:
            return float(cur)
        if increasing == (res > 0):
            hi = cur
        else:
            lo = cur
        speed = ex.evaluate(p.speeds[j - 1], cur, om)
        nxt = cur - res * speed
        if not (min(lo, hi) <= nxt <= max(lo, hi)):
            nxt = 0.5 * (lo + hi)
        if nxt == cur:
            break
        cur = nxt
    if abs(best_res) <= 1e-11:
        return float(best)
    raise ArithmeticError(
        f"time inversion stalled at residual {best_res:.3e} for z={z!r}"
    )


def invert_time(p, j, z, x, t, cells=DEFAULT_CELLS, substeps=DEFAULT_SUBSTEPS):
    """Position xi at which the curve through (x, t) has crossing time z.
    z must lie between the crossing times of the two endpoints."""
    xi, tm = _merged_span(p, j, x, float(t), cells, substeps)
    pos = _invert_on_samples(p, j, xi, tm, float(z))
    return float(min(max(pos, 0.0), 1.0))


def invert_time_derivative(
    p, k, tau, x, t, cells=DEFAULT_CELLS, substeps=DEFAULT_SUBSTEPS
):
    """Derivative of invert_time with respect to the time argument.

    Equals the speed at the inverse point; evaluated in transported form as

        speed_k(x, t) * exp( - integral_tau^t (dx a + dt a / a)(curve) ),

    with the exponent integrated by trapezoid over the time-parametrized
    samples of the curve between tau and t.  Carries the sign of the speed.
    """
    tau = float(tau)
    t = float(t)
    xi, tm = _merged_span(p, k, x, t, cells, substeps)
    pos = _invert_on_samples(p, k, xi, tm, tau)
    increasing = tm[-1] >= tm[0]
    key = tm if increasing else -tm
    z_lo, z_hi = (tau, t) if tau <= t else (t, tau)
    i_lo = int(np.searchsorted(key, z_lo if increasing else -z_hi))
    i_hi = int(np.searchsorted(key, z_hi if increasing else -z_lo))
    inner_xi = xi[i_lo:i_hi]
    inner_tm = tm[i_lo:i_hi]
    # assemble the path from tau to t, endpoints exact
    if (inner_tm.size == 0) or increasing == (tau <= t):
        xs_path = np.concatenate([[pos], inner_xi, [x]])
        ts_path = np.concatenate([[tau], inner_tm, [t]])
    else:
        xs_path = np.concatenate([[pos], inner_xi[::-1], [x]])
        ts_path = np.concatenate([[tau], inner_tm[::-1], [t]])
    a_path = ex.evaluate(p.speeds[k - 1], xs_path, ts_path)
    integrand = ex.evaluate(p.speed_dx(k), xs_path, ts_path) + ex.evaluate(
        p.speed_dt(k), xs_path, ts_path
    ) / a_path
    integrand = np.broadcast_to(integrand, xs_path.shape)
    exponent = _directed_trapezoid(integrand, ts_path)
    return float(ex.evaluate(p.speeds[k - 1], x, t) * math.exp(-exponent))
