"""Uniform grids, piecewise-constant density fields and velocity models.

All objects here are immutable once built. A :class:`Field` stores one
density per cell and extends itself beyond the grid by holding its
leftmost / rightmost value constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidScenarioError


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise InvalidScenarioError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise InvalidScenarioError("x_max must exceed x_min")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise InvalidScenarioError("n_cells must be an integer >= 2")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.x_min, self.x_max, self.n_cells * factor)

    def padded(self, n_ghost: int) -> "Grid":
        """Same spacing, extended by `n_ghost` cells on each side."""
        dx = self.dx
        return Grid(self.x_min - n_ghost * dx, self.x_max + n_ghost * dx,
                    self.n_cells + 2 * n_ghost)


@dataclass(frozen=True)
class Field:
    """Cell-averaged density on a uniform grid with constant extrapolation."""

    grid: Grid
    values: np.ndarray
    q_min: float | None = None  # set when the field is tagged "bounded away from zero"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise InvalidScenarioError(
                f"expected {self.grid.n_cells} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidScenarioError("field values must be finite")
        if np.any(v < 0):
            raise InvalidScenarioError("densities must be nonnegative")
        if self.q_min is not None and (self.q_min <= 0 or v.min() < self.q_min):
            raise InvalidScenarioError("field is not bounded below by q_min > 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def left_value(self) -> float:
        return float(self.values[0])

    @property
    def right_value(self) -> float:
        return float(self.values[-1])

    def at(self, x) -> np.ndarray:
        """Evaluate the piecewise-constant field (with extrapolation) at points `x`."""
        g = self.grid
        idx = np.floor((np.asarray(x, dtype=float) - g.x_min) / g.dx).astype(int)
        return self.values[np.clip(idx, 0, g.n_cells - 1)]

    def coarsen(self, factor: int) -> "Field":
        """Conservative average onto a grid `factor` times coarser."""
        if self.grid.n_cells % factor:
            raise InvalidScenarioError("n_cells is not divisible by the coarsening factor")
        g = Grid(self.grid.x_min, self.grid.x_max, self.grid.n_cells // factor)
        return Field(g, self.values.reshape(-1, factor).mean(axis=1))

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)


@dataclass(frozen=True)
class Datum:
    """Symbolic initial datum.

    kind is one of ``constant`` (uses `value`), ``riemann`` (`a` left of
    `jump`, `b` right of it), ``tanh`` (smooth step from `a` to `b` centred
    at `jump` with width `width`) or ``values`` (explicit cell values).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    jump: float = 0.0
    value: float = 0.0
    width: float = 1.0
    values: tuple = ()

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "riemann":
            return {"kind": "riemann", "a": self.a, "b": self.b, "jump": self.jump}
        if self.kind == "tanh":
            return {"kind": "tanh", "a": self.a, "b": self.b, "jump": self.jump,
                    "width": self.width}
        return {"kind": "values", "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Datum":
        kind = d.get("kind")
        try:
            if kind == "constant":
                return cls("constant", value=float(d["value"]))
            if kind == "riemann":
                return cls("riemann", a=float(d["a"]), b=float(d["b"]),
                           jump=float(d.get("jump", 0.0)))
            if kind == "tanh":
                return cls("tanh", a=float(d["a"]), b=float(d["b"]),
                           jump=float(d.get("jump", 0.0)), width=float(d.get("width", 1.0)))
            if kind == "values":
                return cls("values", values=tuple(float(v) for v in d["values"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScenarioError(f"malformed datum {d!r}") from exc
        raise InvalidScenarioError(f"unknown datum kind {kind!r}")


def constant(value: float) -> Datum:
    return Datum("constant", value=value)


def riemann(a: float, b: float, jump: float = 0.0) -> Datum:
    return Datum("riemann", a=a, b=b, jump=jump)


def field_from_datum(datum: Datum, grid: Grid) -> Field:
    """Sample a symbolic datum at cell midpoints.

    Riemann jumps are snapped to the nearest cell edge so that the discrete
    total variation equals ``|b - a|`` exactly.
    """
    x = grid.centers
    if datum.kind == "constant":
        values = np.full(grid.n_cells, datum.value, dtype=float)
    elif datum.kind == "riemann":
        if not grid.x_min < datum.jump < grid.x_max:
            raise InvalidScenarioError("riemann jump lies outside the domain")
        k = int(round((datum.jump - grid.x_min) / grid.dx))
        values = np.where(np.arange(grid.n_cells) < k, datum.a, datum.b).astype(float)
    elif datum.kind == "tanh":
        s = 0.5 * (1.0 + np.tanh((x - datum.jump) / datum.width))
        values = datum.a + (datum.b - datum.a) * s
    elif datum.kind == "values":
        values = np.asarray(datum.values, dtype=float)
    else:
        raise InvalidScenarioError(f"unknown datum kind {datum.kind!r}")
    return Field(grid, values)


def total_variation(f: Field) -> float:
    return float(np.abs(np.diff(f.values)).sum())


def overlap_lengths(grid: Grid, lo: float, hi: float) -> np.ndarray:
    """Length of each cell's intersection with ``[lo, hi]``."""
    e = grid.edges
    return np.clip(np.minimum(e[1:], hi) - np.maximum(e[:-1], lo), 0.0, None)


def l1_distance(a: Field, b: Field, window: tuple[float, float]) -> float:
    if a.grid != b.grid:
        raise InvalidScenarioError("fields live on different grids")
    lo, hi = window
    if lo < a.grid.x_min or hi > a.grid.x_max or hi < lo:
        raise InvalidScenarioError(f"window {window} not inside the domain")
    w = overlap_lengths(a.grid, lo, hi)
    return float(np.sum(np.abs(a.values - b.values) * w))


@dataclass(frozen=True)
class VelocityModel:
    """Polynomial velocity ``V(x) = sum_k coeffs[k] x**k``.

    ``VelocityModel.linear()`` is the traffic law ``V(x) = 1 - x``.
    """

    coeffs: tuple = (1.0, -1.0)
    kind: str = "polynomial"
    _d1: tuple = field(init=False, repr=False, compare=False)
    _d2: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c or not all(math.isfinite(v) for v in c):
            raise InvalidScenarioError("velocity coefficients must be finite")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_d1", tuple(P.polyder(c)) or (0.0,))
        object.__setattr__(self, "_d2", tuple(P.polyder(c, 2)) or (0.0,))

    @classmethod
    def linear(cls) -> "VelocityModel":
        return cls((1.0, -1.0), kind="linear")

    def V(self, x):
        return P.polyval(x, self.coeffs)

    def dV(self, x):
        return P.polyval(x, self._d1)

    def d2V(self, x):
        return P.polyval(x, self._d2)

    def flux(self, x):
        return np.asarray(x) * self.V(x)

    def max_abs_speed(self, lo: float, hi: float, n: int = 257) -> float:
        s = np.linspace(lo, hi, n)
        return float(np.max(np.abs(self.V(s))))

    def check_admissible(self, lo: float, hi: float, n: int = 1025) -> None:
        """Raise unless ``V' <= 0`` on ``[lo, hi]`` (sampled)."""
        s = np.linspace(lo, hi, n)
        d = self.dV(s)
        if not np.all(np.isfinite(self.V(s))) or not np.all(np.isfinite(self.d2V(s))):
            raise InvalidScenarioError("velocity not finite on the density range")
        if np.any(d > 1e-14):
            raise InvalidScenarioError(f"V' > 0 somewhere on [{lo}, {hi}]")

    def to_dict(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear"}
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "VelocityModel":
        kind = d.get("kind", "linear")
        if kind == "linear":
            return cls.linear()
        if kind == "polynomial":
            try:
                return cls(tuple(d["coeffs"]))
            except (KeyError, TypeError) as exc:
                raise InvalidScenarioError("polynomial velocity needs coeffs") from exc
        raise InvalidScenarioError(f"unknown velocity kind {kind!r}")
