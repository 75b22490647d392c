"""Problem descriptions and their JSON form."""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidScenarioError
from .fields import Datum, Field, Grid, VelocityModel, field_from_datum
from .kernels import Kernel, effective_reach


def parse_exponent(p) -> float:
    """``"zero"`` -> 0.0, ``"infinity"`` -> inf, numbers pass through."""
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("zero", "0"):
            return 0.0
        if key in ("infinity", "inf"):
            return math.inf
        try:
            p = float(key)
        except ValueError as exc:
            raise InvalidScenarioError(f"cannot parse exponent {p!r}") from exc
    try:
        p = float(p)
    except (TypeError, ValueError) as exc:
        raise InvalidScenarioError(f"cannot parse exponent {p!r}") from exc
    if math.isnan(p) or p < 0:
        raise InvalidScenarioError(f"exponent must be >= 0, got {p}")
    return p


def format_exponent(p: float):
    if p == 0:
        return "zero"
    if math.isinf(p):
        return "infinity"
    return p


def exponent_label(p: float) -> str:
    f = format_exponent(p)
    return f if isinstance(f, str) else f"{f:g}"


@dataclass(frozen=True)
class Scenario:
    initial: Field
    velocity: VelocityModel
    kernel: Kernel
    p: float
    eta: float
    T: float
    record_times: tuple = ()
    datum: Datum | None = None
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "p", parse_exponent(self.p))
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise InvalidScenarioError("eta must be positive")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidScenarioError("T must be positive")
        rt = tuple(float(t) for t in (self.record_times or np.linspace(0, self.T, 5)))
        if any(t < 0 or t > self.T for t in rt) or list(rt) != sorted(rt):
            raise InvalidScenarioError("record_times must be sorted and inside [0, T]")
        object.__setattr__(self, "record_times", rt)
        self._validate()

    def _validate(self):
        q = self.initial.values
        k = self.kernel
        notes = []
        if self.p == 0:
            if not k.finite_support or k.gamma_min <= 0:
                raise InvalidScenarioError(
                    "p = zero needs a finitely supported kernel bounded away from zero")
            if q.min() <= 0:
                raise InvalidScenarioError("p = zero needs a strictly positive datum")
        elif math.isinf(self.p):
            if not k.finite_support:
                raise InvalidScenarioError("p = infinity needs a finitely supported kernel")
            notes.append("exploratory: p = infinity has no existence theory")
        if q.min() <= 0 and self.p != 0:
            if k.shape != "exponential" or self.p < 1 or math.isinf(self.p):
                raise InvalidScenarioError(
                    "vanishing densities are only supported for the exponential "
                    "kernel with 1 <= p < inf")
            notes.append("zero-density datum")
        self.velocity.check_admissible(float(q.min()), float(q.max()))
        object.__setattr__(self, "notes", tuple(notes))

    @property
    def grid(self) -> Grid:
        return self.initial.grid

    @property
    def exploratory(self) -> bool:
        return math.isinf(self.p)

    def max_speed(self) -> float:
        q = self.initial.values
        return self.velocity.max_abs_speed(float(q.min()), float(q.max()))

    def contamination_distance(self) -> float:
        """Distance from either boundary inside which truncation may be felt."""
        return self.max_speed() * self.T + effective_reach(self.kernel, self.eta)

    def clean_window(self) -> tuple[float, float]:
        c = self.contamination_distance()
        return (self.grid.x_min + c, self.grid.x_max - c)

    def with_changes(self, **changes) -> "Scenario":
        d = self.to_dict()
        grid = changes.pop("grid", None)
        if grid is not None:
            d["grid"] = {"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells}
        for key, val in changes.items():
            if key == "kernel":
                d["kernel"] = val.to_dict()
            elif key == "velocity":
                d["velocity"] = val.to_dict()
            elif key == "datum":
                d["initial"] = val.to_dict()
            elif key == "p":
                d["p"] = format_exponent(parse_exponent(val))
            else:
                d[key] = val
        if self.datum is None and grid is not None:
            raise InvalidScenarioError("cannot regrid a scenario without a symbolic datum")
        return scenario_from_dict(d)

    def to_dict(self) -> dict:
        g = self.grid
        if self.datum is not None:
            initial = self.datum.to_dict()
        else:
            initial = {"kind": "values", "values": self.initial.values.tolist()}
        return {
            "initial": initial,
            "velocity": self.velocity.to_dict(),
            "kernel": self.kernel.to_dict(),
            "p": format_exponent(self.p),
            "eta": self.eta,
            "T": self.T,
            "grid": {"x_min": g.x_min, "x_max": g.x_max, "n_cells": g.n_cells},
            "record_times": list(self.record_times),
        }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        g = d["grid"]
        grid = Grid(float(g["x_min"]), float(g["x_max"]), g["n_cells"])
        datum = Datum.from_dict(d["initial"])
        return Scenario(
            initial=field_from_datum(datum, grid),
            velocity=VelocityModel.from_dict(d.get("velocity", {"kind": "linear"})),
            kernel=Kernel.from_dict(d["kernel"]),
            p=d["p"],
            eta=float(d["eta"]),
            T=float(d["T"]),
            record_times=tuple(d.get("record_times") or ()),
            datum=datum,
        )
    except KeyError as exc:
        raise InvalidScenarioError(f"missing scenario key {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidScenarioError):
            raise
        raise InvalidScenarioError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(d)


def dump_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2))
