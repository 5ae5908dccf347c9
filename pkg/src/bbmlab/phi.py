"""Nondecreasing bounded profiles for the threshold functional, with the
integrability audit int_0^inf phi(t) t^{-1-p} dt in [1/C, C]."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class PhiSpec:
    """Profile phi: step (0 below a threshold, b above), clamp (b*min(t^gamma, 1)),
    or a piecewise-linear nondecreasing table that starts at 0."""

    kind: str  # "step" | "clamp" | "table"
    b: float = 1.0
    threshold: float = 1.0
    gamma: float = 1.0
    knots: np.ndarray | None = None
    table: np.ndarray | None = None


def make_phi(kind: str, **params) -> PhiSpec:
    b = float(params.get("b", 1.0))
    if b <= 0:
        raise ValueError("bound b must be positive")
    if kind == "step":
        thr = float(params.get("threshold", 1.0))
        if thr < 0:
            raise ValueError("threshold must be nonnegative")
        return PhiSpec(kind="step", b=b, threshold=thr)
    if kind == "clamp":
        gamma = float(params.get("gamma", 1.0))
        if gamma <= 0:
            raise ValueError("clamp exponent must be positive")
        return PhiSpec(kind="clamp", b=b, gamma=gamma)
    if kind == "table":
        knots = np.asarray(params["knots"], dtype=np.float64)
        table = np.asarray(params["values"], dtype=np.float64)
        if knots.ndim != 1 or knots.shape != table.shape or knots.size < 2:
            raise ValueError("table needs matching knot and value arrays")
        if np.any(np.diff(knots) <= 0) or knots[0] <= 0:
            raise ValueError("knots must be positive and ascending")
        if np.any(np.diff(table) < 0):
            raise ValueError("table must be nondecreasing")
        if np.any(table < 0) or np.any(table > b):
            raise ValueError("table values must lie in [0, b]")
        return PhiSpec(kind="table", b=b, knots=knots, table=table)
    raise ValueError(f"unknown phi kind {kind!r}")


def phi_eval(spec: PhiSpec, t):
    """Vectorized phi(t)."""
    t = np.asarray(t, dtype=np.float64)
    if spec.kind == "step":
        return np.where(t > spec.threshold, spec.b, 0.0)
    if spec.kind == "clamp":
        return spec.b * np.minimum(np.power(np.maximum(t, 0.0), spec.gamma), 1.0)
    below = t < spec.knots[0]
    out = np.interp(t, spec.knots, spec.table)
    return np.where(below, 0.0, out)


@dataclass
class PhiAudit:
    monotone: bool
    b: float
    integral: float
    c_phi: float


def audit_phi(spec: PhiSpec, p: float) -> PhiAudit:
    """Closed-form pieces plus analytic tails for the audit integral; the only
    quadrature is exact per-segment integration of the linear table pieces.

    Raises on divergence (step with phi(0+) > 0, clamp with gamma <= p, or a
    table whose first value is positive) and on an identically-zero profile.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if spec.kind == "step":
        if spec.threshold <= 0:
            raise ValueError("divergent audit integral: step with phi(0+) > 0")
        integral = spec.b * spec.threshold ** (-p) / p
    elif spec.kind == "clamp":
        if spec.gamma <= p:
            raise ValueError("divergent audit integral: clamp exponent must exceed p")
        integral = spec.b * (1.0 / (spec.gamma - p) + 1.0 / p)
    else:
        if spec.table[0] > 0:
            raise ValueError("divergent audit integral: table must start at 0")
        integral = 0.0
        for k in range(spec.knots.size - 1):
            t0, t1 = spec.knots[k], spec.knots[k + 1]
            v0, v1 = spec.table[k], spec.table[k + 1]
            slope = (v1 - v0) / (t1 - t0)
            a = v0 - slope * t0
            # int (a + slope t) t^{-1-p} dt
            if p == 1.0:
                integral += a * (1.0 / t0 - 1.0 / t1) + slope * math.log(t1 / t0)
            else:
                integral += a * (t0**-p - t1**-p) / p + slope * (
                    t0 ** (1.0 - p) - t1 ** (1.0 - p)
                ) / (p - 1.0)
        integral += spec.table[-1] * spec.knots[-1] ** (-p) / p
    if integral <= 0.0:
        raise ValueError("audit constant infeasible: integral is zero")
    return PhiAudit(
        monotone=True,
        b=spec.b,
        integral=float(integral),
        c_phi=float(max(integral, 1.0 / integral)),
    )
