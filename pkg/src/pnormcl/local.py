"""Entropy solutions of the local law ``q_t + (q V(q))_x = 0``.

The first-order Godunov scheme is the reference for the ``eta -> 0``
limit; for the linear velocity the Riemann problem is also solved in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidScenarioError, SolverError, UnsupportedError
from .fields import Datum, Field, Grid, VelocityModel, field_from_datum
from .operators import NonlocalField
from .solver import Snapshot, SolverConfig, Trajectory

N_SAMPLES = 1025


@dataclass(frozen=True)
class LocalScenario:
    initial: Field
    velocity: VelocityModel
    T: float
    record_times: tuple = ()
    datum: Datum | None = None

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidScenarioError("T must be positive")
        rt = tuple(float(t) for t in (self.record_times or np.linspace(0, self.T, 5)))
        if any(t < 0 or t > self.T for t in rt) or list(rt) != sorted(rt):
            raise InvalidScenarioError("record_times must be sorted and inside [0, T]")
        object.__setattr__(self, "record_times", rt)
        q = self.initial.values
        self.velocity.check_admissible(float(q.min()), float(q.max()))

    @property
    def grid(self) -> Grid:
        return self.initial.grid

    @classmethod
    def from_nonlocal(cls, s, grid: Grid | None = None) -> "LocalScenario":
        """The local problem sharing datum, velocity and horizon with `s`."""
        if grid is not None and grid != s.grid:
            if s.datum is None:
                raise InvalidScenarioError("cannot regrid a scenario without a symbolic datum")
            initial = field_from_datum(s.datum, grid)
        else:
            initial = s.initial
        return cls(initial, s.velocity, s.T, s.record_times, s.datum)

    def to_dict(self) -> dict:
        g = self.grid
        initial = (self.datum.to_dict() if self.datum is not None
                   else {"kind": "values", "values": self.initial.values.tolist()})
        return {"initial": initial, "velocity": self.velocity.to_dict(), "T": self.T,
                "grid": {"x_min": g.x_min, "x_max": g.x_max, "n_cells": g.n_cells},
                "record_times": list(self.record_times)}

    def max_speed(self) -> float:
        q = self.initial.values
        s = np.linspace(q.min(), q.max(), N_SAMPLES)
        return float(np.max(np.abs(flux_derivative(self.velocity, s))))

    def contamination_distance(self) -> float:
        return self.max_speed() * self.T


def flux_derivative(v: VelocityModel, q):
    return v.V(q) + np.asarray(q) * v.dV(q)


def check_concave(v: VelocityModel, lo: float, hi: float) -> None:
    """Raise unless ``f'' = 2 V' + q V'' < 0`` on ``[lo, hi]`` (sampled)."""
    s = np.linspace(lo, hi, N_SAMPLES)
    if np.any(2 * v.dV(s) + s * v.d2V(s) >= 0):
        raise InvalidScenarioError(
            f"flux q V(q) is not strictly concave on [{lo}, {hi}]")


def flux_maximiser(v: VelocityModel, lo: float, hi: float) -> float | None:
    """Critical point of the flux inside ``[lo, hi]``, if any."""
    fc = P.polymul((0.0, 1.0), v.coeffs)
    roots = P.polyroots(P.polyder(fc)) if len(fc) > 2 else np.array([])
    roots = roots[np.abs(roots.imag) < 1e-12].real
    inside = roots[(roots >= lo) & (roots <= hi)]
    return float(inside[0]) if inside.size else None


def godunov_flux(v: VelocityModel, a, b, qc: float | None):
    """Exact Riemann flux at interfaces with left states `a` and right states `b`.

    For concave f: ``min(f(a), f(b))`` when ``a <= b``, otherwise the max of f
    over ``[b, a]``, which is ``f(qc)`` if the critical point lies there.
    """
    fa, fb = v.flux(a), v.flux(b)
    out = np.where(a <= b, np.minimum(fa, fb), np.maximum(fa, fb))
    if qc is not None:
        fan = (a > b) & (b <= qc) & (qc <= a)
        out = np.where(fan, v.flux(qc), out)
    return out


def _edge_field(q: Field) -> NonlocalField:
    # the local limit identifies W with q; sample the cell right of each edge
    w = np.append(q.values, q.values[-1])
    return NonlocalField(q.grid, w, w.copy(), 1.0, 0.0)


def solve_godunov(s: LocalScenario, c: SolverConfig | None = None) -> Trajectory:
    """First-order Godunov integration of the local law up to ``s.T``."""
    c = c or SolverConfig(scheme="upwind_fv")
    v = s.velocity
    q0 = s.initial.values
    lo, hi = float(q0.min()), float(q0.max())
    check_concave(v, lo, hi)
    qc = flux_maximiser(v, lo, hi)
    speed = s.max_speed()
    dx = s.grid.dx
    q = np.concatenate(([q0[0]], q0, [q0[-1]]))

    def snap(t, inflow):
        f = Field(s.grid, np.clip(q[1:-1], 0.0, None))
        return Snapshot(t, f, _edge_field(f), inflow)

    pending = list(s.record_times)
    snapshots, dts = [], []
    t = inflow = 0.0
    while pending and pending[0] <= 0.0:
        snapshots.append(snap(pending.pop(0), inflow))
    while pending:
        dt = c.cfl * dx / speed if speed > 0 else math.inf
        target = pending[0]
        if t + dt >= target * (1 - 1e-14):
            dt = target - t
        F = godunov_flux(v, q[:-1], q[1:], qc)
        q[1:-1] -= dt / dx * np.diff(F)
        inflow += dt * (F[0] - F[-1])
        if not np.all(np.isfinite(q)):
            raise SolverError(f"non-finite density after step at t = {t}")
        q[0], q[-1] = q[1], q[-2]
        t = target if dt == target - t else t + dt
        dts.append(dt)
        while pending and t >= pending[0]:
            snapshots.append(snap(pending.pop(0), inflow))
    meta = {"steps": len(dts), "dt_history": dts,
            "contamination_distance": s.contamination_distance(),
            "scheme": "godunov", "warnings": []}
    return Trajectory(s, c, snapshots, meta)


def _linear_coeffs(v: VelocityModel) -> tuple[float, float]:
    c = np.trim_zeros(np.asarray(v.coeffs), "b")
    if c.size != 2 or c[1] >= 0:
        raise UnsupportedError("exact Riemann solutions need V(x) = c0 + c1 x with c1 < 0")
    return float(c[0]), float(c[1])


def riemann_waves(a: float, b: float, velocity: VelocityModel):
    """``("shock", speed)``, ``("fan", (left_speed, right_speed))`` or ``("none", 0)``."""
    c0, c1 = _linear_coeffs(velocity)
    if a == b:
        return "none", 0.0
    if a < b:
        return "shock", c0 + c1 * (a + b)
    return "fan", (c0 + 2 * c1 * a, c0 + 2 * c1 * b)


def exact_riemann(a: float, b: float, t: float, velocity: VelocityModel,
                  grid: Grid, jump: float = 0.0) -> Field:
    """Cell averages of the entropy solution of the Riemann problem at time `t`.

    The jump position is snapped to the nearest edge like
    :func:`~pnormcl.fields.field_from_datum`, so ``t = 0`` returns the
    discrete datum exactly.
    """
    kind, speed = riemann_waves(a, b, velocity)
    if kind == "none":
        return Field(grid, np.full(grid.n_cells, float(a)))
    c0, c1 = _linear_coeffs(velocity)
    x0 = grid.x_min + round((jump - grid.x_min) / grid.dx) * grid.dx
    e = grid.edges

    # primitive of the exact profile, measured from x0
    def prim(x):
        r = x - x0
        if t == 0:
            return np.where(r < 0, a * r, b * r)
        if kind == "shock":
            xs = speed * t
            return np.where(r < xs, a * r, a * xs + b * (r - xs))
        sl, sr = speed[0] * t, speed[1] * t
        # inside the fan q = (r/t - c0) / (2 c1)
        fan = lambda y: (y * y / (2 * t) - c0 * y) / (2 * c1)
        rc = np.clip(r, sl, sr)
        out = a * np.minimum(r, sl) + fan(rc) - fan(sl)
        return out + b * np.maximum(r - sr, 0.0)

    return Field(grid, np.diff(prim(e)) / grid.dx)
