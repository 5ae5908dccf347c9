"""Naive all-pairs reference engines.

These re-implement the engines' discrete convention (clipped cell masses at
kernel discontinuities, locally-affine diagonal cell, plain numpy summation)
with none of the neighbor-list, ring-decomposition or parallel machinery, so
they serve as the equivalence oracle for the optimized paths on small spaces.
Guarded to modest node counts.
"""

from __future__ import annotations

import numpy as np

from .funcspace import SampledFunction
from .geometry import disc_rect_area
from .mollifier import MollifierSpec
from .phi import PhiSpec, phi_eval
from .space import GRID, INTERVAL, Space, ball_measure, ball_measures

MAX_REFERENCE_NODES = 5000


def _check_size(space: Space):
    if space.n_nodes > MAX_REFERENCE_NODES:
        raise ValueError("reference engine is limited to small spaces")


def _profile_edges(spec: MollifierSpec) -> np.ndarray:
    if spec.family in ("flat-window", "window-power"):
        return np.array([0.0, spec.r])
    if spec.family == "euclidean-radial":
        return spec.profile_bounds
    return None  # no discontinuity (fractional / custom)


def _ring_value(spec: MollifierSpec, d: float) -> float:
    if spec.family == "euclidean-radial":
        k = int(np.searchsorted(spec.profile_bounds, d, side="right")) - 1
        if k < 0 or k >= spec.profile_values.size:
            return 0.0
        return float(spec.profile_values[k])
    return 1.0


def _clip_weight_1d(space: Space, xi: int, lo: float, hi: float) -> float:
    a = max(space.cell_bounds[xi], lo)
    b = min(space.cell_bounds[xi + 1], hi)
    return float(space.density[xi] * max(b - a, 0.0))


def reference_inner(space: Space, f: SampledFunction, e: float,
                    spec: MollifierSpec, maskx: np.ndarray, masky: np.ndarray | None = None):
    """Per-node inner integrals, naive quadratic loop."""
    _check_size(space)
    if masky is None:
        masky = maskx
    n = space.n_nodes
    inner = np.zeros(n)
    pairs = np.zeros(n, dtype=np.int64)
    diag = np.zeros(n, dtype=np.int64)
    if space.kind == INTERVAL:
        for yi in range(n):
            if not masky[yi]:
                continue
            inner[yi], pairs[yi], diag[yi] = _inner_1d(space, f, e, spec, maskx, yi)
    else:
        for yi in range(n):
            if not masky[yi]:
                continue
            inner[yi], pairs[yi], diag[yi] = _inner_2d(space, f, e, spec, maskx, yi)
    return inner, pairs, diag


def _inner_1d(space, f, e, spec, mask, yi):
    y = float(space.nodes[yi])
    fy = float(f.values[yi])
    edges = _profile_edges(spec)
    mu_b = None
    if spec.family in ("flat-window", "window-power"):
        mu_b = ball_measures(space, space.nodes, spec.r)
    acc = 0.0
    npair = 0
    ndiag = 0
    for xi in range(space.n_nodes):
        if not mask[xi]:
            continue
        d = abs(float(space.nodes[xi]) - y)
        if xi == yi:
            ndiag += 1
            acc += _diag_1d(space, f, e, spec, yi, mu_b)
            continue
        if spec.family == "custom-kernel":
            kern = float(spec.kernel(d, space.nodes[xi], space.nodes[yi]))
            wgt = float(space.cell_mass[xi])
            if kern == 0.0:
                continue
            t = abs(float(f.values[xi]) - fy) / d
            acc += wgt * kern * (t**e if e != 0.0 else 1.0)
            npair += 1
            continue
        if spec.family == "fractional":
            mu = ball_measure(space, y if spec.anchor == "y-ball" else space.nodes[xi], d)
            kern = (1.0 - spec.s) * d ** (spec.p * (1.0 - spec.s)) / mu
            wgt = float(space.cell_mass[xi])
        else:
            # clipped mass per profile ring, quotient factors at the node
            wgt = 0.0
            kern = 1.0
            cl, cr = space.cell_bounds[xi], space.cell_bounds[xi + 1]
            for k in range(edges.size - 1):
                t0, t1 = edges[k], edges[k + 1]
                v = _ring_value(spec, 0.5 * (t0 + t1))
                for lo, hi in ((y + t0, y + t1), (y - t1, y - t0)):
                    a, b = max(cl, lo), min(cr, hi)
                    if b > a:
                        wgt += v * space.density[xi] * (b - a)
            if spec.family in ("flat-window", "window-power"):
                anchor_idx = yi if spec.anchor == "y-ball" else xi
                kern = 1.0 / mu_b[anchor_idx]
                if spec.family == "window-power":
                    kern *= (d / spec.r) ** spec.q
            if wgt == 0.0:
                continue
        t = abs(float(f.values[xi]) - fy) / d
        acc += wgt * kern * t**e if e != 0.0 else wgt * kern
        npair += 1
    return acc, npair, ndiag


def _diag_1d(space, f, e, spec, yi, mu_b):
    if f.slope is None or spec.family == "custom-kernel":
        return 0.0
    y = float(space.nodes[yi])
    cl, cr = float(space.cell_bounds[yi]), float(space.cell_bounds[yi + 1])
    se = abs(float(f.slope[yi])) ** e if e != 0.0 else 1.0
    w = float(space.density[yi])
    if spec.family == "fractional":
        half = 0.5 * (cr - cl)
        return se * half ** (spec.p * (1.0 - spec.s)) / spec.p
    edges = _profile_edges(spec)
    acc = 0.0
    for k in range(edges.size - 1):
        t0, t1 = edges[k], edges[k + 1]
        v = _ring_value(spec, 0.5 * (t0 + t1))
        dl = max(min(y - cl, t1) - t0, 0.0)
        dr = max(min(cr - y, t1) - t0, 0.0)
        if spec.family == "window-power":
            q = spec.q
            top = min(cr - y, t1)
            bot = min(y - cl, t1)
            acc += v * se * w * (top ** (q + 1.0) + bot ** (q + 1.0)) / ((q + 1.0) * spec.r**q)
        else:
            acc += v * se * w * (dl + dr)
    if spec.family in ("flat-window", "window-power"):
        acc /= mu_b[yi]
    return acc


def _inner_2d(space, f, e, spec, mask, yi):
    cx, cy = map(float, space.nodes[yi])
    fy = float(f.values[yi])
    edges = _profile_edges(spec)
    hx, hy = 1.0 / space.nx, 1.0 / space.ny
    mu_b = None
    if spec.family in ("flat-window", "window-power"):
        mu_b = ball_measures(space, space.nodes, spec.r)
    acc = 0.0
    npair = 0
    for xi in range(space.n_nodes):
        if not mask[xi] or xi == yi:
            continue
        px, py = map(float, space.nodes[xi])
        d = float(np.hypot(px - cx, py - cy))
        if spec.family == "fractional":
            mu = ball_measure(space, (cx, cy) if spec.anchor == "y-ball" else (px, py), d)
            kern = (1.0 - spec.s) * d ** (spec.p * (1.0 - spec.s)) / mu
            wgt = float(space.cell_mass[xi])
        else:
            jx = int(round(px / hx - 0.5))
            jy = int(round(py / hy - 0.5))
            x0, x1 = jx * hx, (jx + 1) * hx
            y0, y1 = jy * hy, (jy + 1) * hy
            wgt = 0.0
            for k in range(edges.size - 1):
                t0, t1 = edges[k], edges[k + 1]
                v = _ring_value(spec, 0.5 * (t0 + t1))
                a1 = disc_rect_area(cx, cy, t1, x0, x1, y0, y1)
                a0 = disc_rect_area(cx, cy, t0, x0, x1, y0, y1) if t0 > 0 else 0.0
                wgt += v * (a1 - a0)
            if spec.family in ("flat-window", "window-power"):
                anchor_idx = yi if spec.anchor == "y-ball" else xi
                kern = 1.0 / mu_b[anchor_idx]
                if spec.family == "window-power":
                    kern *= (d / spec.r) ** spec.q
            else:
                kern = 1.0
            if wgt == 0.0:
                continue
        t = abs(float(f.values[xi]) - fy) / d
        acc += wgt * kern * (t**e if e != 0.0 else 1.0)
        npair += 1
    return acc, npair, 1


def reference_functional(space, f, which, p, spec=None, eps=0.0, q=2.0,
                         delta=None, phi=None, anchor="ahlfors-power", Q=None,
                         omega_mask_arr=None):
    """Naive evaluation of any of the four functionals; returns the value only."""
    _check_size(space)
    mask = (
        np.ones(space.n_nodes, dtype=np.uint8)
        if omega_mask_arr is None
        else omega_mask_arr.astype(np.uint8)
    )
    if which == "Lambda":
        return _reference_lambda_value(space, f, p, delta, phi, anchor, Q, mask, mask)
    e = {"I": p, "Psi": p + eps, "Phi": p * q}[which]
    inner, _, _ = reference_inner(space, f, e, spec, mask, mask)
    if which == "I":
        return float(np.sum(space.cell_mass * inner))
    if which == "Psi":
        raw = float(np.sum(space.cell_mass * inner))
        return raw ** (p / (p + eps)) if raw > 0 else 0.0
    return float(np.sum(space.cell_mass * inner ** (1.0 / q)))


def _reference_lambda_value(space, f, p, delta, phi: PhiSpec, anchor, Q, maskx, masky):
    n = space.n_nodes
    total = 0.0
    big_q = float(Q if Q is not None else (1.0 if space.kind == INTERVAL else 2.0))
    for yi in range(n):
        if not masky[yi]:
            continue
        fy = float(f.values[yi])
        acc = 0.0
        for xi in range(n):
            if xi == yi or not maskx[xi]:
                continue
            if space.kind == INTERVAL:
                d = abs(float(space.nodes[xi] - space.nodes[yi]))
            else:
                d = float(np.hypot(*(space.nodes[xi] - space.nodes[yi])))
            ph = float(phi_eval(phi, abs(float(f.values[xi]) - fy) / delta))
            if ph == 0.0:
                continue
            if anchor == "ahlfors-power":
                norm = d ** (big_q + p)
            else:
                c = space.nodes[yi] if anchor == "y-ball" else space.nodes[xi]
                norm = ball_measure(space, c, d) * d**p
            acc += float(space.cell_mass[xi]) * delta**p * ph / norm
        total += float(space.cell_mass[yi]) * acc
    return total


def reference_lambda(space, f, p, delta, phi, anchor, Q, maskx, masky=None):
    """FunctionalValue-shaped fallback used by eval_Lambda for unsupported combos."""
    from .functional import FunctionalValue

    if masky is None:
        masky = maskx
    value = _reference_lambda_value(space, f, p, delta, phi, anchor, Q, maskx, masky)
    return FunctionalValue(
        which="Lambda", value=value, p=p,
        params={"delta": delta, "anchor": anchor, "Q": Q, "method": "reference"},
        pair_count=0, diag_excluded=0,
    )
