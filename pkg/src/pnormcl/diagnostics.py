"""Quantitative checks on trajectories.

Everything here is recomputed from the snapshots alone: maximum principle,
total variation of ``q``, ``W**p`` and ``W``, monotonicity, the one-sided
Lipschitz (Oleinik-type) bound on ``W**p``, the exponential-kernel identity
residual, and L1 convergence tables.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math

import numpy as np
from scipy.signal import find_peaks

from .errors import InvalidScenarioError
from .fields import Field, l1_distance
from .operators import NonlocalField, identity_residual

N_KAPPA_SAMPLES = 4096
MONOTONE_TOL = 1e-10
OLEINIK_SLACK_CELLS = 10


@dataclass(frozen=True)
class OleinikParams:
    kappa: float
    branch: str
    admissible: bool
    condition_values: dict


def compute_kappa(v, p: float, q_min: float, q_max: float,
                  n_samples: int = N_KAPPA_SAMPLES) -> OleinikParams:
    """One-sided Lipschitz constant for ``W**p`` and its admissibility.

    For ``p > 1``::

        kappa = inf |V'(x) x**(1-p)| - (1/p) sup |(V''(x) x - (p-2) V'(x)) / x**(p-1)|

    with hypothesis ``V'' x - (p-2) V' >= 0``. For ``p < 1``::

        kappa = inf |V'(x) / x**(p-1)| + (1/p) sup |(V''(x) x + V'(x)) / x**(p-1)|

    with hypothesis ``V'' x + V' >= 0``. Extremes are taken over an even
    sampling of ``[q_min, q_max]`` (endpoints included). The result is
    admissible when the hypothesis holds at every sample and ``kappa > 0``.
    """
    if not 0 < q_min <= q_max:
        raise InvalidScenarioError("compute_kappa needs 0 < q_min <= q_max")
    if not (0 < p < math.inf) or p == 1:
        raise InvalidScenarioError(f"no Oleinik branch for p = {p}")
    x = np.linspace(q_min, q_max, n_samples)
    d1, d2 = v.dV(x), v.d2V(x)
    scale = x ** (p - 1)
    if p > 1:
        cond = d2 * x - (p - 2) * d1
        kappa = np.min(np.abs(d1 / scale)) - np.max(np.abs(cond / scale)) / p
        branch = "p>1"
    else:
        cond = d2 * x + d1
        kappa = np.min(np.abs(d1 / scale)) + np.max(np.abs(cond / scale)) / p
        branch = "p<1"
    kappa = float(kappa)
    cond_min = float(np.min(cond))
    ok = bool(cond_min >= 0 and kappa > 0)
    values = {"condition_min": cond_min, "condition_max": float(np.max(cond)),
              "dV_max": float(np.max(d1))}
    return OleinikParams(kappa, branch, ok, values)


def oleinik_min_slope(W: NonlocalField, p: float | None = None) -> float:
    """Smallest adjacent difference quotient of ``W**p`` at the edges.

    Every chord slope is a weighted mean of adjacent ones, so this is also
    the minimum over all pairs.
    """
    return float(np.min(np.diff(W.Wp_values)) / W.grid.dx)


def oleinik_bound(kappa: float, t: float) -> float:
    return -1.0 / (kappa * t) if t > 0 else -math.inf


def tv(values) -> float:
    return float(np.abs(np.diff(np.asarray(values))).sum())


@dataclass
class TVSeries:
    rows: list  # (t, TV(q), TV(W**p), TV(W))
    initial_q_power_tv: float
    initial_bound_ok: bool

    @property
    def wp(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def wp_nonincreasing(self, tol: float = 1e-6) -> bool:
        return bool(np.all(np.diff(self.wp) <= tol))


def tv_series(traj, tol: float | None = None) -> TVSeries:
    """TV of ``q``, ``W**p`` and ``W`` per snapshot, plus the initial bound.

    The initial check is ``TV(W**p)(0) <= TV(q0**p) + tol`` with ``tol``
    defaulting to 1e-8 for the exponential kernel and 1e-6 otherwise.
    """
    rows = [(s.t, tv(s.q.values), tv(s.W.Wp_values), tv(s.W.W_values))
            for s in traj.snapshots]
    s0 = traj.scenario
    p = s0.p
    q0 = s0.initial.values
    if p == 0 or math.isinf(p):
        ref = tv(q0)
    else:
        ref = tv(q0 ** p)
    if tol is None:
        tol = 1e-8 if getattr(s0, "kernel", None) is not None and s0.kernel.shape == "exponential" else 1e-6
    first = next((r for r in rows if r[0] == 0.0), None)
    ok = True if first is None else first[2] <= ref + tol
    return TVSeries(rows, ref, bool(ok))


def p_condition_check(q0: Field, p: float):
    """``min q0 / max q0 >= (1 - p)**(1/p)`` for ``p < 1``; None when ``p >= 1``.

    ``p = 0`` uses the limit threshold ``1/e``.
    """
    if p >= 1:
        return None
    threshold = math.exp(-1.0) if p == 0 else (1.0 - p) ** (1.0 / p)
    v = q0.values
    return bool(v.min() / v.max() >= threshold)


def monotone_direction(values, tol: float = 0.0) -> str:
    d = np.diff(np.asarray(values))
    if np.all(np.abs(d) <= tol):
        return "constant"
    if np.all(d >= -tol):
        return "increasing"
    if np.all(d <= tol):
        return "decreasing"
    return "none"


def sign_breach(values, direction: str) -> float:
    """Largest step against `direction` (0 when monotone)."""
    d = np.diff(np.asarray(values))
    if direction == "increasing":
        return float(max(0.0, -d.min()))
    if direction == "decreasing":
        return float(max(0.0, d.max()))
    return 0.0


def max_principle(traj) -> dict:
    q0 = traj.scenario.initial.values
    lo, hi = q0.min(), q0.max()
    low = max((lo - s.q.values.min() for s in traj.snapshots), default=0.0)
    high = max((s.q.values.max() - hi for s in traj.snapshots), default=0.0)
    return {"min_violation": float(max(low, 0.0)), "max_violation": float(max(high, 0.0))}


def gradient_peaks(q: Field, window: tuple[float, float], factor: float = 5.0,
                   min_separation: float = 0.15) -> np.ndarray:
    """Positions of steep fronts in `q`.

    Local maxima of ``|dq|/dx`` at interior edges inside `window` that
    exceed `factor` times the median gradient magnitude. Maxima closer
    than `min_separation` count as one front (the taller one is kept).
    """
    g = q.grid
    grad = np.abs(np.diff(q.values)) / g.dx
    x = g.edges[1:-1]
    med = float(np.median(grad))
    dist = max(1, int(round(min_separation / g.dx)))
    idx, _ = find_peaks(grad, height=factor * med, distance=dist)
    idx = idx[grad[idx] > 0]
    keep = (x[idx] >= window[0]) & (x[idx] <= window[1])
    return x[idx[keep]]


def front_position(q: Field, level: float) -> float:
    """First place where the cell-centre profile crosses `level` (linear interpolation)."""
    c = q.grid.centers
    v = q.values - level
    cross = np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]
    if cross.size == 0:
        raise ValueError(f"profile never crosses {level}")
    i = cross[0]
    return float(c[i] + (c[i + 1] - c[i]) * v[i] / (v[i] - v[i + 1]))


@dataclass
class ConvergenceTable:
    params: list
    l1_sup: list
    ratios: list
    slope: float

    def rows(self):
        for k, (p, d) in enumerate(zip(self.params, self.l1_sup)):
            yield p, d, self.ratios[k], self.slope

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.l1_sup) < 0))


def _to_grid(q: Field, grid) -> Field:
    if q.grid == grid:
        return q
    n_ref, n = q.grid.n_cells, grid.n_cells
    if (q.grid.x_min, q.grid.x_max) != (grid.x_min, grid.x_max) or n_ref % n:
        raise InvalidScenarioError("reference grid is not a refinement of the run grid")
    return q.coarsen(n_ref // n)


def sup_l1_distance(traj, reference, window) -> float:
    """Largest L1 window distance over the common record times."""
    if len(traj.snapshots) != len(reference.snapshots) or any(
            abs(a.t - b.t) > 1e-12 for a, b in zip(traj.snapshots, reference.snapshots)):
        raise InvalidScenarioError("runs do not share record times with the reference")
    return max(l1_distance(a.q, _to_grid(b.q, a.q.grid), window)
               for a, b in zip(traj.snapshots, reference.snapshots))


def _check_window(traj, window) -> None:
    g = traj.snapshots[0].q.grid
    c = traj.metadata.get("contamination_distance", 0.0)
    if window[0] < g.x_min + c or window[1] > g.x_max - c:
        raise InvalidScenarioError(
            f"window {window} reaches the boundary-contaminated zone (distance {c:.3g})")


def convergence_table(runs, reference, window) -> ConvergenceTable:
    """Sup-over-time L1 distances of each run to `reference` inside `window`.

    `runs` is a list of ``(parameter, trajectory)``. The reference may live on
    a finer grid that refines the runs' grid; it is then averaged down.
    ``ratio`` is previous distance over current one; ``slope`` is the
    least-squares slope of ``log distance`` against ``log parameter``.
    """
    _check_window(reference, window)
    params, dists = [], []
    for param, traj in runs:
        _check_window(traj, window)
        params.append(param)
        dists.append(sup_l1_distance(traj, reference, window))
    ratios = [math.nan] + [a / b if b > 0 else math.inf for a, b in zip(dists, dists[1:])]
    slope = math.nan
    pos = [(p, d) for p, d in zip(params, dists) if p > 0 and d > 0]
    if len(pos) >= 2:
        lp, ld = np.log(np.array(pos)).T
        slope = float(np.polyfit(lp, ld, 1)[0])
    return ConvergenceTable(params, dists, ratios, slope)


@dataclass
class DiagnosticsReport:
    max_principle: dict
    tv_series: list
    tv_initial_bound_ok: bool
    monotone: dict
    oleinik: dict | None
    identity_residual: list
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def build_report(traj) -> DiagnosticsReport:
    s = traj.scenario
    snaps = traj.snapshots
    notes = list(traj.metadata.get("warnings", []))
    q0 = s.initial.values
    tvs = tv_series(traj)

    direction = monotone_direction(q0)
    breach = max((sign_breach(sn.q.values, direction) for sn in snaps), default=0.0)
    monotone = {"initial_direction": direction, "preserved": breach <= MONOTONE_TOL,
                "worst_sign_breach": breach}

    p = getattr(s, "p", 1.0)
    oleinik = None
    if 0 < p < math.inf and p != 1 and q0.min() > 0:
        par = compute_kappa(s.velocity, p, float(q0.min()), float(q0.max()))
        dx = s.grid.dx
        series = [(sn.t, oleinik_min_slope(sn.W),
                   _json_safe(oleinik_bound(par.kappa, sn.t)) if par.admissible else None)
                  for sn in snaps]
        ok = None
        if par.admissible:
            ok = all(m >= oleinik_bound(par.kappa, t) - OLEINIK_SLACK_CELLS * dx
                     for t, m, _ in series if t > 0)
        oleinik = {"params": asdict(par), "series": series, "bound_holds": ok}
    else:
        notes.append(f"no Oleinik branch for p = {p}")

    residual = []
    kernel = getattr(s, "kernel", None)
    if kernel is not None and kernel.shape == "exponential" and 0 < p < math.inf:
        residual = [(sn.t, float(np.max(identity_residual(sn.q, sn.W)))) for sn in snaps]

    return DiagnosticsReport(max_principle(traj), [list(r) for r in tvs.rows],
                             tvs.initial_bound_ok, monotone, oleinik, residual, notes)
