"""Time integration of the nonlocal conservation law.

``q_t + (V(W[q]) q)_x = 0`` is advanced by one of two independent schemes:

``lagrangian``
    cell boundaries move along the characteristics ``xi' = V(W(t, xi))``,
    each cell keeps its mass, and the moved cells are remapped
    conservatively onto the uniform grid before the next evaluation of W.
``upwind_fv``
    flux form with interface flux ``q_upwind * V(W_edge)``.

Both work on a copy of the grid padded with constant ghost cells, so the
boundary rule of :class:`~pnormcl.fields.Field` is honoured and the mass
crossing either end of the physical domain can be booked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import (CellInversionError, InvalidScenarioError, InvariantViolation,
                     PicardNonConvergence, SolverError)
from .fields import Field, Grid
from .kernels import Kernel, normalize
from .operators import (NonlocalField, edge_power_sums, evaluate,
                        exponential_power_recursion, geometric_means, power_weights,
                        weighted_sup, _correlate_edges)
from .scenario import Scenario

logger = logging.getLogger(__name__)

N_GHOST = 2
MAX_PRINCIPLE_TOL = 1e-8
DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class PicardConfig:
    enabled: bool = False
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidScenarioError("picard tol must be positive")
        if self.max_iter < 1:
            raise InvalidScenarioError("picard max_iter must be >= 1")


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = "lagrangian"
    cfl: float = 0.8
    time_integrator: str = "heun"
    picard: PicardConfig = PicardConfig()
    strict_invariants: bool = False

    def __post_init__(self):
        if self.scheme not in ("lagrangian", "upwind_fv"):
            raise InvalidScenarioError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.cfl <= 1:
            raise InvalidScenarioError("cfl must lie in (0, 1]")
        if self.time_integrator not in ("euler", "heun"):
            raise InvalidScenarioError(f"unknown integrator {self.time_integrator!r}")
        if self.picard.enabled and self.scheme != "lagrangian":
            raise InvalidScenarioError("the Picard step is defined for the lagrangian scheme")

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "cfl": self.cfl,
                "time_integrator": self.time_integrator,
                "picard": {"enabled": self.picard.enabled, "tol": self.picard.tol,
                           "max_iter": self.picard.max_iter},
                "strict_invariants": self.strict_invariants}

    @classmethod
    def from_dict(cls, d: dict | None) -> "SolverConfig":
        d = dict(d or {})
        pic = d.pop("picard", None) or {}
        try:
            return cls(picard=PicardConfig(**pic), **d)
        except TypeError as exc:
            raise InvalidScenarioError(f"bad solver config: {exc}") from exc


@dataclass(frozen=True)
class Snapshot:
    t: float
    q: Field
    W: NonlocalField
    net_inflow: float = 0.0  # mass that entered through the boundaries since t = 0


@dataclass
class Trajectory:
    scenario: Scenario
    config: SolverConfig
    snapshots: list
    metadata: dict = field(default_factory=dict)

    @property
    def times(self) -> list:
        return [s.t for s in self.snapshots]

    def final(self) -> Snapshot:
        return self.snapshots[-1]


@dataclass
class CharacteristicsState:
    """Moving cell boundaries with their (fixed) cell masses."""

    edge_positions: np.ndarray
    cell_masses: np.ndarray
    t: float

    def densities(self) -> np.ndarray:
        widths = np.diff(self.edge_positions)
        if np.any(widths <= 0):
            raise CellInversionError(f"cell inversion at t = {self.t}")
        return self.cell_masses / widths


class NonlocalOperator:
    """The map ``q -> W`` at the edges of a fixed uniform grid, weights precomputed."""

    def __init__(self, kernel: Kernel, p: float, eta: float, dx: float, n_cells: int):
        self.p, self.eta, self.dx = p, eta, dx
        if p == 0:
            self.kernel = normalize(kernel, 0.0)
            self._eval = lambda v: geometric_means(v, self.kernel, dx, eta)
        elif math.isinf(p):
            self.kernel = normalize(kernel, math.inf)
            self._eval = lambda v: weighted_sup(v, self.kernel, dx, eta)
        elif kernel.shape == "exponential":
            self.kernel = normalize(kernel, p)
            self._eval = lambda v: self._root(exponential_power_recursion(v, p, dx, eta))
        else:
            self.kernel = normalize(kernel, p)
            w, tail = power_weights(self.kernel, p, dx, eta, n_cells)
            self._eval = lambda v: self._root(
                _correlate_edges(v ** p, v[-1] ** p, w, tail))
        self.floor_hit = False

    def _root(self, Wp):
        if Wp.min() < DENSITY_FLOOR:
            self.floor_hit = True
        return np.maximum(Wp, DENSITY_FLOOR) ** (1.0 / self.p)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return self._eval(values)


def remap(edge_positions: np.ndarray, masses: np.ndarray, target_edges: np.ndarray):
    """Conservative overlap remap of moved cells onto `target_edges`.

    The moved cells carry constant density, so the cumulative mass is
    piecewise linear in x and exact overlaps follow from interpolation.
    Returns the new cell masses.
    """
    cum = np.concatenate(([0.0], np.cumsum(masses)))
    return np.diff(np.interp(target_edges, edge_positions, cum))


def remap_displaced(displacement: np.ndarray, masses: np.ndarray, dx: float):
    """Remap cells whose edges moved by `displacement` back onto their uniform grid.

    Same result as :func:`remap`, but all lengths are measured relative to
    the target cell, so a rigid translation reproduces the density to
    machine precision. Requires ``|displacement| <= dx``; the first and last
    target cells only see their in-range neighbours (they are ghosts).
    """
    widths = dx + np.diff(displacement)
    if np.any(widths <= 0):
        raise CellInversionError("cell boundaries crossed; reduce cfl")
    rho = masses / widths
    lo = displacement[:-1]          # moved cell j spans [lo_j, hi_j] relative to x_j
    hi = dx + displacement[1:]
    out = rho * (np.minimum(hi, dx) - np.maximum(lo, 0.0))
    # right neighbour j+1 seen from target j: shifted left by dx
    out[:-1] += rho[1:] * np.clip(np.minimum(hi[1:] + dx, dx) - np.maximum(lo[1:] + dx, 0.0), 0.0, None)
    # left neighbour j-1 seen from target j: shifted by -dx
    out[1:] += rho[:-1] * np.clip(np.minimum(hi[:-1] - dx, dx) - np.maximum(lo[:-1] - dx, 0.0), 0.0, None)
    return out


class _Stepper:
    """Shared machinery for both schemes on the ghost-padded grid."""

    def __init__(self, s: Scenario, c: SolverConfig):
        if math.isinf(s.p) and c.scheme != "upwind_fv":
            raise InvalidScenarioError("p = infinity is only integrated with upwind_fv")
        self.s, self.c = s, c
        g = s.grid
        self.pgrid = g.padded(N_GHOST)
        self.x = self.pgrid.edges
        self.dx = g.dx
        self.n = g.n_cells
        self.W = NonlocalOperator(s.kernel, s.p, s.eta, self.dx, self.pgrid.n_cells)
        self.V = s.velocity.V
        self.q = np.concatenate((np.full(N_GHOST, s.initial.left_value),
                                 s.initial.values,
                                 np.full(N_GHOST, s.initial.right_value)))
        self.phys = slice(N_GHOST, N_GHOST + self.n)
        self.net_inflow = 0.0
        self.picard_counts: list[int] = []
        self.warnings: list[str] = []

    def reset_ghosts(self, q):
        q[:N_GHOST] = q[N_GHOST]
        q[-N_GHOST:] = q[-N_GHOST - 1]
        return q

    # --- upwind finite volume -------------------------------------------------
    def fv_fluxes(self, q):
        v = self.V(self.W(q))
        F = np.zeros_like(v)
        inner = v[1:-1]
        F[1:-1] = np.where(inner >= 0, q[:-1] * inner, q[1:] * inner)
        return F

    def fv_euler(self, q, dt):
        F = self.fv_fluxes(q)
        out = q - dt / self.dx * np.diff(F)
        boundary = F[N_GHOST] - F[N_GHOST + self.n]
        return self.reset_ghosts(out), dt * boundary

    def fv_step(self, dt):
        q1, b1 = self.fv_euler(self.q, dt)
        if self.c.time_integrator == "euler":
            return q1, b1
        q2, b2 = self.fv_euler(q1, dt)
        return self.reset_ghosts(0.5 * (self.q + q2)), 0.5 * (b1 + b2)

    # --- lagrangian -----------------------------------------------------------
    def move(self, displacement, masses):
        """Shift the edges by `displacement`, remap, and book the boundary mass."""
        if np.max(np.abs(displacement)) <= self.dx:
            new_m = remap_displaced(displacement, masses, self.dx)
        else:
            xi = self.x + displacement
            if np.any(np.diff(xi) <= 0):
                raise CellInversionError("cell boundaries crossed; reduce cfl")
            new_m = remap(xi, masses, self.x)
        a, b = N_GHOST, N_GHOST + self.n
        inflow = new_m[a:b].sum() - masses[a:b].sum()
        return self.reset_ghosts(new_m / self.dx), inflow

    def lagrangian_euler(self, q, dt):
        return self.move(dt * self.V(self.W(q)), q * self.dx)

    def lagrangian_step(self, dt):
        q1, b1 = self.lagrangian_euler(self.q, dt)
        if self.c.time_integrator == "euler":
            return q1, b1
        # Heun in Shu-Osher form: a convex combination of two transport-remap
        # stages, so bounds and monotonicity of the Euler stage carry over.
        q2, b2 = self.lagrangian_euler(q1, dt)
        return self.reset_ghosts(0.5 * (self.q + q2)), 0.5 * (b1 + b2)

    def picard_step(self, dt):
        state, count = picard_nonlocal_step(self, dt, self.c.picard.tol,
                                            self.c.picard.max_iter)
        self.picard_counts.append(count)
        return state

    def step(self, dt):
        if self.c.picard.enabled:
            return self.picard_step(dt)
        if self.c.scheme == "upwind_fv":
            return self.fv_step(dt)
        return self.lagrangian_step(dt)

    def max_speed(self):
        return float(np.max(np.abs(self.V(self.W(self.q)))))

    def physical_field(self) -> Field:
        return Field(self.s.grid, np.clip(self.q[self.phys], 0.0, None))


def picard_nonlocal_step(stepper: _Stepper, dt: float, tol: float, max_iter: int):
    """One implicit-in-velocity Lagrangian step solved by fixed-point iteration.

    Starting from the current nonlocal term, edges are moved with the
    candidate velocity, densities reconstructed and remapped, and W
    recomputed; this repeats until W changes by less than `tol` in the sup
    norm. The first iterate is exactly the explicit Euler step.

    Returns ``((q_new, boundary_inflow), iterations)``.
    """
    x = stepper.x
    m = stepper.q * stepper.dx
    w = stepper.W(stepper.q)
    shift = np.zeros_like(x)
    for it in range(1, max_iter + 1):
        shift = dt * stepper.V(np.interp(x + shift, x, w))
        q_new, inflow = stepper.move(shift, m)
        w_new = stepper.W(q_new)
        change = float(np.max(np.abs(w_new - w)))
        w = w_new
        if change < tol:
            return (q_new, inflow), it
    msg = f"Picard iteration stopped at max_iter={max_iter} (last change {change:.3e})"
    if stepper.c.strict_invariants:
        raise PicardNonConvergence(msg)
    stepper.warnings.append(msg)
    logger.warning(msg)
    return (q_new, inflow), max_iter


def _snapshot(stepper: _Stepper, t: float) -> Snapshot:
    q = stepper.physical_field()
    W = evaluate(q, stepper.s.kernel, stepper.s.p, stepper.s.eta)
    return Snapshot(t, q, W, stepper.net_inflow)


def solve(s: Scenario, c: SolverConfig | None = None) -> Trajectory:
    """Integrate `s` up to its horizon and record the requested snapshots.

    The step is ``cfl * dx / max|V(W)|``, recomputed every step and shortened
    so that every record time is hit exactly.
    """
    c = c or SolverConfig()
    st = _Stepper(s, c)
    lo, hi = float(s.initial.values.min()), float(s.initial.values.max())
    pending = list(s.record_times)
    snapshots = []
    dts = []
    t = 0.0
    worst_low = worst_high = 0.0
    while pending and pending[0] <= 0.0:
        snapshots.append(_snapshot(st, pending.pop(0)))
    while pending:
        speed = st.max_speed()
        dt = c.cfl * st.dx / speed if speed > 0 else math.inf
        target = pending[0]
        if t + dt >= target * (1 - 1e-14):
            dt = target - t
        q_new, inflow = st.step(dt)
        if not np.all(np.isfinite(q_new)):
            raise SolverError(f"non-finite density after step at t = {t}")
        st.q = q_new
        st.net_inflow += inflow
        t = target if dt == target - t else t + dt
        dts.append(dt)
        phys = q_new[st.phys]
        worst_low = max(worst_low, lo - float(phys.min()))
        worst_high = max(worst_high, float(phys.max()) - hi)
        if c.strict_invariants and max(worst_low, worst_high) > MAX_PRINCIPLE_TOL:
            raise InvariantViolation(
                f"maximum principle breached by {max(worst_low, worst_high):.3e} at t = {t}")
        while pending and t >= pending[0]:
            snapshots.append(_snapshot(st, pending.pop(0)))
    meta = {
        "steps": len(dts),
        "dt_history": dts,
        "picard_iterations": st.picard_counts,
        "contamination_distance": s.contamination_distance(),
        "max_principle": {"min_violation": worst_low, "max_violation": worst_high},
        "density_floor_hit": st.W.floor_hit,
        "warnings": st.warnings + list(s.notes),
        "exploratory": s.exploratory,
    }
    return Trajectory(s, c, snapshots, meta)


def mass(snap: Snapshot, window: tuple[float, float] | None = None) -> float:
    """``int q dx`` over `window` (whole domain by default)."""
    g = snap.q.grid
    lo, hi = window or (g.x_min, g.x_max)
    e = g.edges
    overlap = np.clip(np.minimum(e[1:], hi) - np.maximum(e[:-1], lo), 0.0, None)
    return float(np.sum(snap.q.values * overlap))
