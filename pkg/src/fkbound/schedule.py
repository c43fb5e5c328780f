"""Coupling schedules: weight functions f on [0, T] and their norms.

A coupling schedule is a nonnegative measurable weight f(t) multiplying the
singular interaction.  This module provides

* a small closed-under-envelope family of analytic forms plus a tabulated
  fallback (:class:`Constant`, :class:`ExpDecay`, :class:`Indicator`,
  :class:`PowerLaw`, :class:`Tabulated`),
* the non-increasing envelope  f_env(t) = sup over s in [t, T] of f(s),
* L^p norms of f restricted to [0, s], optionally against a t^(-a) weight,
* iterated time integrals of those norms, as consumed by the double-time
  bounds.

Tabulated data uses step-left (previous-value) interpolation, so envelopes
and norms are exact on the representation; no interpolation-order ambiguity
enters the almost-everywhere statements.  Sets of measure zero in user data
are not distinguishable: the envelope of a table is realised as the pointwise
running maximum over grid values, right to left (the right endpoint value
participates even though it carries no integral mass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaln

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DomainError, NonIntegrable

__all__ = [
    "Constant",
    "ExpDecay",
    "Indicator",
    "PowerLaw",
    "Tabulated",
    "CouplingFunction",
    "Envelope",
    "NormValue",
    "coupling_from_dict",
    "coupling_to_dict",
    "envelope",
    "evaluate",
    "is_zero",
    "iterated_norm",
    "norm",
    "sup_norm",
]


# ---------------------------------------------------------------------------
# coupling variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """f(t) = level."""

    level: float

    def __post_init__(self):
        if not (self.level >= 0):
            raise DomainError(f"Constant level must be nonnegative, got {self.level}")


@dataclass(frozen=True)
class ExpDecay:
    """f(t) = amplitude * exp(-rate * t)."""

    amplitude: float
    rate: float

    def __post_init__(self):
        if not (self.amplitude >= 0):
            raise DomainError(f"ExpDecay amplitude must be nonnegative, got {self.amplitude}")
        if not (self.rate > 0):
            raise DomainError(f"ExpDecay rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class Indicator:
    """f(t) = height on [0, cutoff], zero afterwards."""

    height: float
    cutoff: float

    def __post_init__(self):
        if not (self.height >= 0):
            raise DomainError(f"Indicator height must be nonnegative, got {self.height}")
        if not (self.cutoff > 0):
            raise DomainError(f"Indicator cutoff must be positive, got {self.cutoff}")


@dataclass(frozen=True)
class PowerLaw:
    """f(t) = amplitude * t**exponent (exponent may be negative)."""

    amplitude: float
    exponent: float

    def __post_init__(self):
        if not (self.amplitude >= 0):
            raise DomainError(f"PowerLaw amplitude must be nonnegative, got {self.amplitude}")


@dataclass(frozen=True)
class Tabulated:
    """Step-left table: f(t) = values[k] for grid[k] <= t < grid[k+1].

    The grid must start at 0 and be strictly increasing; the final grid
    point is the horizon the table is defined up to, and its value is used
    for f at that single point.
    """

    grid: tuple
    values: tuple

    def __post_init__(self):
        grid = tuple(float(t) for t in self.grid)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if len(grid) < 2 or len(grid) != len(values):
            raise DomainError("Tabulated needs matching grid/values with at least 2 points")
        if grid[0] != 0.0:
            raise DomainError(f"Tabulated grid must start at 0, got {grid[0]}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("Tabulated grid must be strictly increasing")
        if any(v < 0 for v in values):
            raise DomainError("Tabulated values must be nonnegative")


CouplingFunction = Union[Constant, ExpDecay, Indicator, PowerLaw, Tabulated]

_KIND_NAMES = {
    Constant: "constant",
    ExpDecay: "exp_decay",
    Indicator: "indicator",
    PowerLaw: "power_law",
    Tabulated: "tabulated",
}


def coupling_to_dict(f: CouplingFunction) -> dict:
    """JSON-ready representation, inverse of :func:`coupling_from_dict`."""
    if isinstance(f, Constant):
        return {"kind": "constant", "level": f.level}
    if isinstance(f, ExpDecay):
        return {"kind": "exp_decay", "amplitude": f.amplitude, "rate": f.rate}
    if isinstance(f, Indicator):
        return {"kind": "indicator", "height": f.height, "cutoff": f.cutoff}
    if isinstance(f, PowerLaw):
        return {"kind": "power_law", "amplitude": f.amplitude, "exponent": f.exponent}
    if isinstance(f, Tabulated):
        return {"kind": "tabulated", "grid": list(f.grid), "values": list(f.values)}
    raise DomainError(f"unknown coupling variant {type(f).__name__}")


def coupling_from_dict(spec: dict) -> CouplingFunction:
    """Build a coupling from its JSON form, e.g. {"kind": "exp_decay", ...}."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DomainError("coupling spec must be a dict with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "constant":
            return Constant(float(spec["level"]))
        if kind == "exp_decay":
            return ExpDecay(float(spec["amplitude"]), float(spec["rate"]))
        if kind == "indicator":
            return Indicator(float(spec["height"]), float(spec["cutoff"]))
        if kind == "power_law":
            return PowerLaw(float(spec["amplitude"]), float(spec["exponent"]))
        if kind == "tabulated":
            return Tabulated(tuple(spec["grid"]), tuple(spec["values"]))
    except KeyError as exc:
        raise DomainError(f"coupling spec for kind={kind!r} is missing field {exc}") from exc
    raise DomainError(f"unknown coupling kind {kind!r}")


def evaluate(f: CouplingFunction, t):
    """Pointwise values f(t); accepts scalars or numpy arrays, t >= 0."""
    t = np.asarray(t, dtype=float)
    if isinstance(f, Constant):
        out = np.full_like(t, f.level)
    elif isinstance(f, ExpDecay):
        out = f.amplitude * np.exp(-f.rate * t)
    elif isinstance(f, Indicator):
        out = np.where(t <= f.cutoff, f.height, 0.0)
    elif isinstance(f, PowerLaw):
        with np.errstate(divide="ignore"):
            out = f.amplitude * np.power(t, f.exponent)
    elif isinstance(f, Tabulated):
        idx = np.searchsorted(f.grid, t, side="right") - 1
        idx = np.clip(idx, 0, len(f.values) - 1)
        out = np.asarray(f.values, dtype=float)[idx]
    else:
        raise DomainError(f"unknown coupling variant {type(f).__name__}")
    return out if out.ndim else float(out)


def is_zero(f: CouplingFunction) -> bool:
    """Exact zero-coupling detection (all representation values zero)."""
    if isinstance(f, Constant):
        return f.level == 0.0
    if isinstance(f, (ExpDecay, PowerLaw)):
        return f.amplitude == 0.0
    if isinstance(f, Indicator):
        return f.height == 0.0
    if isinstance(f, Tabulated):
        return all(v == 0.0 for v in f.values)
    raise DomainError(f"unknown coupling variant {type(f).__name__}")


def scale(f: CouplingFunction, factor: float) -> CouplingFunction:
    """The coupling factor * f, staying inside the family."""
    if factor < 0:
        raise DomainError("scale factor must be nonnegative")
    if isinstance(f, Constant):
        return Constant(factor * f.level)
    if isinstance(f, ExpDecay):
        return ExpDecay(factor * f.amplitude, f.rate)
    if isinstance(f, Indicator):
        return Indicator(factor * f.height, f.cutoff)
    if isinstance(f, PowerLaw):
        return PowerLaw(factor * f.amplitude, f.exponent)
    if isinstance(f, Tabulated):
        return Tabulated(f.grid, tuple(factor * v for v in f.values))
    raise DomainError(f"unknown coupling variant {type(f).__name__}")


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """Non-increasing majorant of a coupling on [0, T].

    ``representation`` is itself a coupling function, so every norm below
    applies to it unchanged.
    """

    source: CouplingFunction
    horizon: float
    representation: CouplingFunction


def envelope(f: CouplingFunction, T: float) -> Envelope:
    """Non-increasing envelope of f over [0, T].

    Constant, ExpDecay, Indicator and non-increasing PowerLaw are fixed
    points.  An increasing PowerLaw flattens to its value at T; a table is
    swept right to left with a running maximum.
    """
    if not T > 0:
        raise DomainError(f"horizon must be positive, got {T}")
    if isinstance(f, (Constant, ExpDecay, Indicator)):
        rep: CouplingFunction = f
    elif isinstance(f, PowerLaw):
        rep = f if f.exponent <= 0 else Constant(f.amplitude * T ** f.exponent)
    elif isinstance(f, Tabulated):
        if f.grid[-1] != T:
            raise DomainError(
                f"Tabulated grid ends at {f.grid[-1]}, expected horizon {T}"
            )
        running = np.maximum.accumulate(np.asarray(f.values)[::-1])[::-1]
        rep = Tabulated(f.grid, tuple(running))
    else:
        raise DomainError(f"unknown coupling variant {type(f).__name__}")
    return Envelope(source=f, horizon=float(T), representation=rep)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormValue:
    """(integral of |f(t) t^-weight|^p over [0,s])^(1/p)."""

    p: float
    s: float
    value: float
    weight: float = 0.0


def _power_integral(f: CouplingFunction, q: float, b: float, s: float) -> float:
    """integral over [0, s] of f(t)^q * t^(-b) dt, exact per variant.

    q >= 0 and b < 1 are required for convergence of the weighted endpoint;
    divergent combinations raise NonIntegrable.
    """
    if s == 0.0:
        return 0.0
    if b >= 1.0:
        raise NonIntegrable(f"weight exponent {b} >= 1 makes t=0 non-integrable")
    if isinstance(f, Constant):
        return f.level ** q * s ** (1.0 - b) / (1.0 - b)
    if isinstance(f, ExpDecay):
        lam = q * f.rate
        if f.amplitude == 0.0:
            return 0.0
        if lam == 0.0:  # q == 0
            return s ** (1.0 - b) / (1.0 - b)
        # int_0^s e^{-lam t} t^{-b} dt = lam^{b-1} * Gamma(1-b) * P(1-b, lam s)
        a = 1.0 - b
        return (
            f.amplitude ** q
            * lam ** (b - 1.0)
            * math.exp(gammaln(a))
            * float(gammainc(a, lam * s))
        )
    if isinstance(f, Indicator):
        u = min(s, f.cutoff)
        return f.height ** q * u ** (1.0 - b) / (1.0 - b)
    if isinstance(f, PowerLaw):
        e = f.exponent * q - b
        if e <= -1.0:
            raise NonIntegrable(
                f"PowerLaw exponent {f.exponent} with p={q}, weight {b} diverges at t=0"
            )
        return f.amplitude ** q * s ** (e + 1.0) / (e + 1.0)
    if isinstance(f, Tabulated):
        if s > f.grid[-1] * (1.0 + 1e-12):
            raise DomainError(
                f"upper time {s} beyond the tabulated horizon {f.grid[-1]}"
            )
        # exact piecewise integration of the step-left representation
        total = 0.0
        a = 1.0 - b
        for k in range(len(f.grid) - 1):
            lo, hi = f.grid[k], min(f.grid[k + 1], s)
            if hi <= lo:
                break
            total += f.values[k] ** q * (hi ** a - lo ** a) / a
        return total
    raise DomainError(f"unknown coupling variant {type(f).__name__}")


def norm(
    f: CouplingFunction,
    p: float,
    s: float,
    weight: float = 0.0,
) -> NormValue:
    """L^p norm of f(t) * t^(-weight) on [0, s].

    ``weight`` is the exponent a of the singular factor t^(-a); a = 0.5 is
    the inverse-square-root weight, a = theta/2 the general one.  Requires
    a * p < 1 so the endpoint stays integrable for bounded couplings.
    """
    if p < 1:
        raise DomainError(f"norm order p must be >= 1, got {p}")
    if s < 0:
        raise DomainError(f"upper time must be nonnegative, got {s}")
    if weight < 0:
        raise DomainError(f"weight exponent must be nonnegative, got {weight}")
    if math.isinf(p):
        if weight != 0.0:
            raise DomainError("sup norm does not accept a singular weight")
        return NormValue(p=p, s=s, value=sup_norm(f, s), weight=0.0)
    val = _power_integral(f, p, weight * p, s)
    return NormValue(p=p, s=s, value=val ** (1.0 / p), weight=weight)


def sup_norm(f: CouplingFunction, s: float) -> float:
    """Essential supremum of f on [0, s]."""
    if s <= 0:
        return 0.0
    if isinstance(f, Constant):
        return f.level
    if isinstance(f, ExpDecay):
        return f.amplitude
    if isinstance(f, Indicator):
        return f.height
    if isinstance(f, PowerLaw):
        if f.exponent > 0:
            return f.amplitude * s ** f.exponent
        if f.exponent == 0:
            return f.amplitude
        return math.inf if f.amplitude > 0 else 0.0
    if isinstance(f, Tabulated):
        vals = [v for t, v in zip(f.grid, f.values) if t < s]
        return max(vals) if vals else f.values[0]
    raise DomainError(f"unknown coupling variant {type(f).__name__}")


def _breakpoints(f: CouplingFunction, T: float) -> list:
    """Interior quadrature breakpoints of the inner-norm integrand."""
    pts = []
    if isinstance(f, Indicator) and 0 < f.cutoff < T:
        pts.append(f.cutoff)
    if isinstance(f, Tabulated):
        pts.extend(t for t in f.grid if 0 < t < T)
    return pts


def iterated_norm(
    f: CouplingFunction,
    T: float,
    inner_p: float = 1.0,
    inner_weight: float = 0.0,
    outer_power: float = 1.0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """integral over [0, T] of norm(f, inner_p, t, inner_weight)^outer_power dt.

    The inner norm is analytic per variant, so the outer integral reduces to
    adaptive quadrature of a smooth scalar function (the integrand vanishes
    at t = 0 like a positive power, so no endpoint care is needed).
    """
    if not T >= 0:
        raise DomainError(f"horizon must be nonnegative, got {T}")
    if outer_power < 1:
        raise DomainError(f"outer power must be >= 1, got {outer_power}")
    if T == 0 or is_zero(f):
        return 0.0
    # probe once so a divergent inner norm raises before quadrature runs
    norm(f, inner_p, T, inner_weight)

    def integrand(t: float) -> float:
        return norm(f, inner_p, t, inner_weight).value ** outer_power

    pts = _breakpoints(f, T)
    val, err = integrate.quad(
        integrand,
        0.0,
        T,
        points=pts[:50] or None,
        epsabs=tolerances.quad_abs,
        epsrel=tolerances.quad_rel,
        limit=200,
    )
    return val
