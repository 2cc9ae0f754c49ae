"""Built-in problems: a resonant demo, trivial and manufactured solvable
cases, and a coupling/speed-gap compliant demo.

The manufactured problem derives its forcing symbolically from a chosen
exact solution, so convergence studies against that solution measure
pure discretization error.
"""

from __future__ import annotations

from . import expr as ex
from .problem import from_dict


def _zeros(n):
    return [["0"] * n for _ in range(n)]


def example13():
    """Equal speeds with skew zero-order coupling and zero forcing.

    The homogeneous problem admits a whole family of periodic modes, one
    per temporal frequency (see kernel_pair), so the discretized operator
    develops a cluster of near-zero singular values: the resonant branch
    of the alternative.
    """
    return from_dict(
        {
            "n": 2,
            "m": 1,
            "a": ["2/pi", "2/pi"],
            "b": [["0", "-1"], ["1", "0"]],
            "g": _zeros(2),
            "h": _zeros(2),
            "r": _zeros(2),
            "f": ["0", "0"],
            "description": "resonant demo: equal speeds, skew coupling, "
            "zero forcing; homogeneous modes exist at every frequency",
        }
    )


def kernel_pair(l):
    """Exact homogeneous modes of example13 at integer frequency l,
    as expression strings (u1, u2)."""
    return (
        f"sin((pi/2)*x)*sin({l}*(t-(pi/2)*x))",
        f"cos((pi/2)*x)*sin({l}*(t-(pi/2)*x))",
    )


def pure_forcing():
    """Single equation, unit speed, no coupling, constant forcing; the
    solution is u(x,t) = x, exact even on the coarsest grid."""
    return from_dict(
        {
            "n": 1,
            "m": 1,
            "a": ["1"],
            "b": [["0"]],
            "g": [["0"]],
            "h": [["0"]],
            "r": [["0"]],
            "f": ["1"],
            "description": "uncoupled transport with unit forcing; exact "
            "solution u = x",
        }
    )


MANUFACTURED_EXACT = ("x*sin(t)", "(1-x)*cos(t)")


def _manufactured_forcing(speeds, coupling, boundary_inputs, m):
    """Forcing that makes the chosen exact pair solve the system: move the
    transport, coupling, and boundary-input terms of the equations to the
    right-hand side and evaluate them on the exact solution."""
    exact = [ex.parse(s) for s in MANUFACTURED_EXACT]
    n = len(exact)
    forcing = []
    for j in range(n):
        fj = ex.add(
            ex.differentiate(exact[j], "t"),
            ex.mul(ex.parse(speeds[j]), ex.differentiate(exact[j], "x")),
        )
        for k in range(n):
            fj = ex.add(fj, ex.mul(ex.parse(coupling[j][k]), exact[k]))
        for k in range(n):
            # component k is prescribed at its own side; the system reads
            # it at the opposite end of the interval
            side = ex.const(1.0) if k < m else ex.const(0.0)
            edge = ex.substitute(exact[k], "x", side)
            fj = ex.sub(fj, ex.mul(ex.parse(boundary_inputs[j][k]), edge))
        forcing.append(ex.to_string(fj))
    return forcing


def manufactured_wellposed():
    """Two-component contraction-regime problem with distinct speeds,
    mild coupling, and boundary-input terms; forcing derived symbolically
    from the exact pair u1 = x*sin(t), u2 = (1-x)*cos(t)."""
    speeds = ["1", "-1"]
    coupling = [["0.15", "0.2*cos(t)"], ["0.15*sin(t)", "-0.1"]]
    boundary_inputs = [["0.1*cos(t)", "-0.1"], ["0.05*sin(t)", "0.1"]]
    m = 1
    return from_dict(
        {
            "n": 2,
            "m": m,
            "a": speeds,
            "b": coupling,
            "g": _zeros(2),
            "h": boundary_inputs,
            "r": _zeros(2),
            "f": _manufactured_forcing(speeds, coupling, boundary_inputs, m),
            "description": "well-posed manufactured problem; exact solution "
            "u1 = x*sin(t), u2 = (1-x)*cos(t)",
        }
    )


def levy_pass():
    """Distinct constant speeds with off-diagonal coupling proportional to
    the speed gap, so the compatibility screen passes by construction."""
    return from_dict(
        {
            "n": 2,
            "m": 1,
            "a": ["2", "-1"],
            "b": [["0", "-3*cos(t)"], ["3*cos(t)", "0"]],
            "g": _zeros(2),
            "h": _zeros(2),
            "r": _zeros(2),
            "f": ["0", "0"],
            "description": "coupling factors through the speed gap "
            "(quotient cos t); screening check passes",
        }
    )


BUILTINS = {
    "example13": example13,
    "pure-forcing": pure_forcing,
    "manufactured-wellposed": manufactured_wellposed,
    "levy-pass": levy_pass,
}


def get_builtin(name):
    factory = BUILTINS.get(name)
    if factory is None:
        known = ", ".join(sorted(BUILTINS))
        raise ValueError(f"unknown builtin {name!r}; available: {known}")
    return factory()


def list_builtins():
    """(name, description) pairs in stable order."""
    out = []
    for name in BUILTINS:
        out.append((name, get_builtin(name).description))
    return out
