"""Downstream kernels and their L^p / geometric-mean normalisation.

Three shapes are supported, all defined on the positive half-line and
nonincreasing there:

* ``exponential``: ``exp(-s)`` on ``(0, inf)``
* ``constant``: ``1`` on ``(0, 1)``
* ``custom``: piecewise linear on ``(0, 1)`` through ``(breakpoints, values)``

A kernel carries a multiplicative ``scale``; :func:`normalize` picks the
scale that makes the kernel a unit vector in the chosen (quasi-)norm.
Integrals of ``gamma(s)**p`` are evaluated in closed form for every shape
(for piecewise-linear kernels segment by segment), so no quadrature error
enters the nonlocal operators.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import InvalidScenarioError, UnsupportedError

SHAPES = ("exponential", "constant", "custom")
NORM_TOL = 1e-10


@dataclass(frozen=True)
class Kernel:
    shape: str
    breakpoints: tuple = ()
    values: tuple = ()
    scale: float = 1.0
    normalized_for: float | None = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidScenarioError(f"unknown kernel shape {self.shape!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidScenarioError("kernel scale must be positive and finite")
        if self.shape != "custom":
            return
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.size < 2 or b.shape != v.shape:
            raise InvalidScenarioError("custom kernel needs matching breakpoints/values")
        if abs(b[0]) > 0 or abs(b[-1] - 1.0) > 1e-14 or np.any(np.diff(b) <= 0):
            raise InvalidScenarioError("custom breakpoints must increase from 0 to 1")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidScenarioError("custom kernel values must be finite and >= 0")
        if np.any(np.diff(v) > 0):
            raise InvalidScenarioError("custom kernel must be nonincreasing")
        if v[0] <= 0:
            raise InvalidScenarioError("custom kernel vanishes identically")
        object.__setattr__(self, "breakpoints", tuple(b))
        object.__setattr__(self, "values", tuple(v))

    @classmethod
    def exponential(cls) -> "Kernel":
        return cls("exponential")

    @classmethod
    def constant(cls) -> "Kernel":
        return cls("constant")

    @classmethod
    def custom(cls, breakpoints, values) -> "Kernel":
        return cls("custom", tuple(breakpoints), tuple(values))

    @property
    def support_length(self) -> float:
        return math.inf if self.shape == "exponential" else 1.0

    @property
    def finite_support(self) -> bool:
        return self.shape != "exponential"

    @property
    def gamma_min(self) -> float:
        """Infimum of the kernel on its support."""
        if self.shape == "exponential":
            return 0.0
        if self.shape == "constant":
            return self.scale
        return self.scale * min(self.values)

    @property
    def gamma_max(self) -> float:
        if self.shape == "custom":
            return self.scale * self.values[0]
        return self.scale

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.shape == "exponential":
            out = np.exp(-np.clip(s, 0.0, None))
            return self.scale * np.where(s >= 0, out, 0.0)
        inside = (s >= 0) & (s <= 1)
        if self.shape == "constant":
            return self.scale * inside.astype(float)
        return self.scale * np.where(inside, np.interp(s, self.breakpoints, self.values), 0.0)

    def powered_cumulative(self, p: float, u) -> np.ndarray:
        """``int_0^u gamma(s)**p ds`` for ``u >= 0`` (vectorised, closed form)."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, None)
        c = self.scale ** p
        if self.shape == "exponential":
            return c * (-np.expm1(-p * u)) / p
        if self.shape == "constant":
            return c * np.minimum(u, 1.0)
        return c * _custom_power_cumulative(self.breakpoints, self.values, p, u)

    def to_dict(self) -> dict:
        d = {"shape": self.shape}
        if self.shape == "custom":
            d["breakpoints"] = list(self.breakpoints)
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Kernel":
        params = dict(d.get("params") or {})
        params.update({k: v for k, v in d.items() if k in ("breakpoints", "values")})
        shape = d.get("shape")
        if shape == "custom":
            if "breakpoints" not in params or "values" not in params:
                raise InvalidScenarioError("custom kernel needs breakpoints and values")
            return cls.custom(params["breakpoints"], params["values"])
        return cls(shape)


def _segment_power_antiderivative(v0, v1, h, p, t):
    """``int_0^t (v0 + (v1 - v0) s / h)**p ds`` for ``0 <= t <= h``."""
    m = (v1 - v0) / h
    flat = np.abs(v1 - v0) <= 1e-13 * np.maximum(np.abs(v0), 1e-300)
    g = np.clip(v0 + m * t, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        sloped = (g ** (p + 1) - v0 ** (p + 1)) / ((p + 1) * m)
    return np.where(flat, v0 ** p * t, sloped)


def _custom_power_cumulative(b, v, p, u):
    b = np.asarray(b)
    v = np.asarray(v)
    h = np.diff(b)
    full = _segment_power_antiderivative(v[:-1], v[1:], h, p, h)
    before = np.concatenate(([0.0], np.cumsum(full)))
    uc = np.minimum(u, 1.0)
    seg = np.clip(np.searchsorted(b, uc, side="right") - 1, 0, len(h) - 1)
    part = _segment_power_antiderivative(v[seg], v[seg + 1], h[seg], p, uc - b[seg])
    return before[seg] + part


def _custom_log_integral(b, v):
    """``int_0^1 ln(gamma(s)) ds`` for a piecewise-linear, strictly positive gamma."""
    total = 0.0
    for b0, b1, v0, v1 in zip(b[:-1], b[1:], v[:-1], v[1:]):
        h = b1 - b0
        if abs(v1 - v0) <= 1e-13 * v0:
            total += h * math.log(v0)
        else:
            # int ln(u) du / slope, with u running from v0 to v1
            total += h * ((v1 * math.log(v1) - v1) - (v0 * math.log(v0) - v0)) / (v1 - v0)
    return total


def lp_norm(k: Kernel, p: float) -> float:
    """``(int gamma(s)**p ds)**(1/p)`` over the kernel's support."""
    if math.isinf(p):
        return k.gamma_max
    if not p > 0:
        raise InvalidScenarioError("lp_norm needs p > 0; use l0_geometric_norm for p = 0")
    if k.shape == "exponential":
        return k.scale * (1.0 / p) ** (1.0 / p)
    if k.shape == "constant":
        return k.scale
    integral = float(k.powered_cumulative(p, 1.0))
    if not (integral > 0 and math.isfinite(integral)):
        raise InvalidScenarioError("kernel p-th power is not integrable")
    return integral ** (1.0 / p)


def l0_geometric_norm(k: Kernel) -> float:
    """``exp(int_0^1 ln gamma(s) ds)``, the p -> 0 limit of the L^p quasi-norm."""
    if not k.finite_support:
        raise UnsupportedError("the geometric-mean norm needs a finitely supported kernel")
    if k.gamma_min <= 0:
        raise InvalidScenarioError("kernel touches zero on its support; log diverges")
    if k.shape == "constant":
        return k.scale
    return k.scale * math.exp(_custom_log_integral(k.breakpoints, k.values))


def normalize(k: Kernel, p: float) -> Kernel:
    """Rescale `k` to unit norm for exponent `p` (``0.0`` -> geometric, ``inf`` -> sup)."""
    if p == 0:
        norm = l0_geometric_norm(k)
    else:
        norm = lp_norm(k, p)
    if not (norm > 0 and math.isfinite(norm)):
        raise InvalidScenarioError(f"kernel norm {norm} cannot be normalised")
    return replace(k, scale=k.scale / norm, normalized_for=p)


def norm_for(k: Kernel, p: float) -> float:
    return l0_geometric_norm(k) if p == 0 else lp_norm(k, p)


def require_normalized(k: Kernel, p: float) -> None:
    if abs(norm_for(k, p) - 1.0) > NORM_TOL:
        raise InvalidScenarioError(f"kernel is not normalised for p = {p}")


def effective_reach(k: Kernel, eta: float) -> float:
    """Distance downstream over which the kernel is felt, used for boundary bookkeeping.

    Finitely supported kernels reach exactly ``eta``; the exponential kernel is
    charged one e-folding length.
    """
    return eta
