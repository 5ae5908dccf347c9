"""Closed-form measure primitives shared by the space module and the kernel engines.

Everything here is exact arithmetic on piecewise-constant densities: prefix
integrals on weighted intervals and disc/rectangle intersection areas on the
plane. The scalar versions are numba-compiled so the pair engines can call
them inside hot loops.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def prefix_at(x, piece_bounds, piece_prefix, piece_weights):
    """W(x) = integral of the piecewise-constant weight over [0, x], clipped to the domain."""
    if x <= piece_bounds[0]:
        return 0.0
    if x >= piece_bounds[-1]:
        return piece_prefix[-1]
    k = np.searchsorted(piece_bounds, x, side="right") - 1
    return piece_prefix[k] + piece_weights[k] * (x - piece_bounds[k])


@njit(cache=True)
def interval_ball_mass(c, r, piece_bounds, piece_prefix, piece_weights):
    """mu(B(c, r) ∩ domain) for a weighted interval; exact for piecewise-constant w."""
    return prefix_at(c + r, piece_bounds, piece_prefix, piece_weights) - prefix_at(
        c - r, piece_bounds, piece_prefix, piece_weights
    )


@njit(cache=True)
def _chord_primitive(u, r):
    # antiderivative of sqrt(r^2 - t^2), evaluated at u in [-r, r]
    s = r * r - u * u
    if s < 0.0:
        s = 0.0
    q = u / r
    if q > 1.0:
        q = 1.0
    elif q < -1.0:
        q = -1.0
    return 0.5 * (u * np.sqrt(s) + r * r * np.arcsin(q))


@njit(cache=True)
def disc_quadrant_area(X, Y, r):
    """Area of {u^2 + v^2 < r^2, u <= X, v <= Y} for a disc of radius r at the origin."""
    if X <= -r or Y <= -r:
        return 0.0
    Xc = min(X, r)
    if Y >= r:
        return 2.0 * (_chord_primitive(Xc, r) - _chord_primitive(-r, r))
    t = np.sqrt(max(r * r - Y * Y, 0.0))
    if Y >= 0.0:
        area = 0.0
        b = min(Xc, -t)
        if b > -r:
            area += 2.0 * (_chord_primitive(b, r) - _chord_primitive(-r, r))
        hi = min(Xc, t)
        if hi > -t:
            area += Y * (hi + t) + (_chord_primitive(hi, r) - _chord_primitive(-t, r))
        if Xc > t:
            area += 2.0 * (_chord_primitive(Xc, r) - _chord_primitive(t, r))
        return area
    hi = min(Xc, t)
    if hi <= -t:
        return 0.0
    return Y * (hi + t) + (_chord_primitive(hi, r) - _chord_primitive(-t, r))


@njit(cache=True)
def disc_rect_area(cx, cy, r, x0, x1, y0, y1):
    """Area of B((cx, cy), r) ∩ [x0, x1] x [y0, y1], by inclusion-exclusion of quadrants."""
    return (
        disc_quadrant_area(x1 - cx, y1 - cy, r)
        - disc_quadrant_area(x0 - cx, y1 - cy, r)
        - disc_quadrant_area(x1 - cx, y0 - cy, r)
        + disc_quadrant_area(x0 - cx, y0 - cy, r)
    )


@njit(cache=True)
def disc_unit_square_area(cx, cy, r):
    return disc_rect_area(cx, cy, r, 0.0, 1.0, 0.0, 1.0)


@njit(cache=True)
def kahan_sum(values):
    """Compensated serial sum (Kahan-Babuska/Neumaier variant); the deterministic
    reduction used everywhere."""
    acc = 0.0
    comp = 0.0
    for i in range(values.shape[0]):
        v = values[i]
        t = acc + v
        if abs(acc) >= abs(v):
            comp += (acc - t) + v
        else:
            comp += (v - t) + acc
        acc = t
    return acc + comp
