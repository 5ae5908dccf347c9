"""Functions on a Space: energies, total variation, Lip_r, maximal functions.

The p=1 energy on weighted intervals is the relaxed total variation computed
with the essential-infimum weight envelope: the absolutely continuous part
integrates |f'| against the density, while jumps are charged the envelope
weight at the jump point (the minimum of the adjacent piece weights when the
jump sits on a weight breakpoint).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import GRID, INTERVAL, Space, ball_measures


@dataclass
class SampledFunction:
    """Node values plus piecewise-analytic derivative data.

    derivative holds |f'| (1D) or |grad f| (2D) per node where f is piecewise
    smooth; jump_set lists (position, |jump|) atoms for piecewise-constant parts.
    """

    values: np.ndarray
    derivative: np.ndarray | None = None
    jump_set: list[tuple[float, float]] = field(default_factory=list)
    label: str = ""
    # signed slope per cell for 1D piecewise-linear functions; enables the
    # exact segment quadrature and the diagonal-cell correction
    slope: np.ndarray | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("function values must be finite")


@dataclass
class EnergyValue:
    p: float
    value: float
    kind: str  # "variation" for p = 1, "p-energy" otherwise

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("energy must be nonnegative")


def sample_function(space: Space, kind: str, **params) -> SampledFunction:
    """Sample one of the analytic descriptors on the space nodes."""
    x = space.nodes
    if kind == "affine":
        if space.kind == INTERVAL:
            a = float(params.get("a", 1.0))
            b = float(params.get("b", 0.0))
            vals = a * x + b
            return SampledFunction(
                vals,
                derivative=np.full(space.n_nodes, abs(a)),
                slope=np.full(space.n_nodes, a),
                label=f"affine(a={a})",
            )
        a = np.asarray(params.get("a", (1.0, 0.0)), dtype=np.float64)
        b = float(params.get("b", 0.0))
        vals = x @ a + b
        return SampledFunction(
            vals,
            derivative=np.full(space.n_nodes, float(np.hypot(a[0], a[1]))),
            label=f"affine2d(a={tuple(a)})",
        )
    if kind == "sin":
        if space.kind != INTERVAL:
            raise ValueError("sin descriptor is 1D")
        amp = float(params.get("amplitude", 1.0))
        freq = float(params.get("frequency", 1.0))
        w = 2.0 * np.pi * freq
        vals = amp * np.sin(w * x)
        sl = amp * w * np.cos(w * x)
        return SampledFunction(vals, derivative=np.abs(sl), slope=sl, label="sin")
    if kind == "custom":
        f = params["f"]
        df = params.get("df")
        vals = np.asarray(f(x), dtype=np.float64)
        deriv = None if df is None else np.abs(np.asarray(df(x), dtype=np.float64))
        return SampledFunction(vals, derivative=deriv, label="custom")
    if kind == "piecewise-linear":
        if space.kind != INTERVAL:
            raise ValueError("piecewise-linear descriptor is 1D")
        xs = np.asarray(params["xs"], dtype=np.float64)
        ys = np.asarray(params["ys"], dtype=np.float64)
        if np.any(np.diff(xs) <= 0):
            raise ValueError("knots must be ascending")
        vals = np.interp(x, xs, ys)
        seg = np.searchsorted(xs, x, side="right") - 1
        seg = np.clip(seg, 0, xs.size - 2)
        slopes = (ys[1:] - ys[:-1]) / (xs[1:] - xs[:-1])
        sl = np.where((x <= xs[0]) | (x >= xs[-1]), 0.0, slopes[seg])
        return SampledFunction(vals, derivative=np.abs(sl), slope=sl, label="pw-linear")
    if kind == "indicator":
        if space.kind != INTERVAL:
            raise ValueError("indicator descriptor is 1D")
        a, b = float(params["a"]), float(params["b"])
        vals = ((x > a) & (x < b)).astype(np.float64)
        jumps = [(a, 1.0)] if a > 0 else []
        if b < 1:
            jumps.append((b, 1.0))
        return SampledFunction(
            vals,
            derivative=np.zeros(space.n_nodes),
            slope=np.zeros(space.n_nodes),
            jump_set=jumps,
            label="indicator",
        )
    if kind == "bump":
        if space.kind != INTERVAL:
            raise ValueError("bump descriptor is 1D")
        amp = float(params.get("amplitude", 1.0))
        if amp == 0.0:
            raise ValueError("bump amplitude must be nonzero")
        a, b = params.get("support", (0.375, 0.625))
        mid = 0.5 * (a + b)
        s = amp / (mid - a)
        vals = np.where(
            (x <= a) | (x >= b), 0.0, np.where(x <= mid, s * (x - a), s * (b - x))
        )
        sl = np.where((x <= a) | (x >= b), 0.0, np.where(x <= mid, s, -s))
        return SampledFunction(vals, derivative=np.abs(sl), slope=sl, label="bump")
    if kind == "cantor-primitive":
        from .cantor import cantor_values

        model = params["model"]
        vals, sl = cantor_values(model, x)
        return SampledFunction(
            vals, derivative=np.abs(sl), slope=sl, label=f"cantor(m={model.m})"
        )
    raise ValueError(f"unknown function descriptor {kind!r}")


def weight_envelope(space: Space, positions=None) -> np.ndarray:
    """essinf-envelope of the density: min of adjacent piece weights at breakpoints,
    the piece weight elsewhere. Node positions never sit on breakpoints, so the
    per-node envelope equals the density; pointwise queries matter for jump atoms."""
    if space.kind != INTERVAL:
        raise ValueError("weight envelope is defined for 1D spaces only")
    if positions is None:
        return space.density.copy()
    pos = np.atleast_1d(np.asarray(positions, dtype=np.float64))
    bp, w = space.piece_bounds, space.piece_weights
    out = np.empty(pos.size)
    for i, p in enumerate(pos):
        k = int(np.searchsorted(bp, p, side="right")) - 1
        k = min(max(k, 0), w.size - 1)
        if p == bp[k] and k > 0:
            out[i] = min(w[k - 1], w[k])
        elif k + 1 < bp.size and p == bp[k + 1] and k + 1 < w.size + 1:
            out[i] = min(w[k], w[min(k + 1, w.size - 1)])
        else:
            out[i] = w[k]
    return out


def energy(space: Space, f: SampledFunction, p: float) -> EnergyValue:
    """E_p: integral of the (minimal upper) gradient^p for p > 1; relaxed total
    variation for p = 1 (envelope rule on weighted intervals)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if f.derivative is None:
        raise ValueError("energy needs derivative data")
    if p > 1:
        if f.jump_set:
            raise ValueError("p > 1 energy is infinite for jump functions")
        val = float(np.sum(f.derivative**p * space.cell_mass))
        return EnergyValue(p=p, value=val, kind="p-energy")
    val = float(np.sum(f.derivative * space.cell_mass))
    if f.jump_set:
        if space.kind != INTERVAL:
            raise ValueError("jump parts are supported on 1D spaces only")
        pos = np.array([j[0] for j in f.jump_set])
        mag = np.array([abs(j[1]) for j in f.jump_set])
        val += float(np.sum(mag * weight_envelope(space, pos)))
    return EnergyValue(p=1.0, value=val, kind="variation")


def coarea_tv(space: Space, f: SampledFunction) -> float:
    """Independent p=1 oracle for continuous piecewise-monotone f on w ≡ 1:
    integrates the level-set boundary count over t by summing the image lengths
    of the maximal monotone runs."""
    if space.kind != INTERVAL:
        raise ValueError("coarea oracle is 1D")
    if not np.allclose(space.piece_weights, 1.0):
        raise ValueError("coarea oracle requires Lebesgue measure")
    if f.jump_set:
        raise ValueError("coarea oracle requires a continuous function")
    v = f.values
    total = 0.0
    i = 0
    n = v.size
    while i < n - 1:
        j = i
        if v[j + 1] >= v[j]:
            while j < n - 1 and v[j + 1] >= v[j]:
                j += 1
        else:
            while j < n - 1 and v[j + 1] <= v[j]:
                j += 1
        total += abs(float(v[j] - v[i]))
        i = j
    return total


def _sliding_extrema(values: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Max and min of values over index windows [lo[i], hi[i]) with monotone ends."""
    n = values.size
    out_max = np.empty(n)
    out_min = np.empty(n)
    from collections import deque

    dq_max: deque[int] = deque()
    dq_min: deque[int] = deque()
    right = 0
    for i in range(n):
        while right < hi[i]:
            while dq_max and values[dq_max[-1]] <= values[right]:
                dq_max.pop()
            dq_max.append(right)
            while dq_min and values[dq_min[-1]] >= values[right]:
                dq_min.pop()
            dq_min.append(right)
            right += 1
        while dq_max and dq_max[0] < lo[i]:
            dq_max.popleft()
        while dq_min and dq_min[0] < lo[i]:
            dq_min.popleft()
        out_max[i] = values[dq_max[0]]
        out_min[i] = values[dq_min[0]]
    return out_max, out_min


def lip_field(space: Space, f: SampledFunction, r: float) -> np.ndarray:
    """Lip_r f per node: sup over nodes in the open r-ball of |f(y) - f(x)| / r,
    exact over the node set."""
    if r <= 0:
        raise ValueError("r must be positive")
    v = f.values
    if space.kind == INTERVAL:
        from .space import open_ball_range

        n = space.n_nodes
        lo = np.empty(n, dtype=np.int64)
        hi = np.empty(n, dtype=np.int64)
        for i in range(n):
            lo[i], hi[i] = open_ball_range(space.nodes, float(space.nodes[i]), r)
        vmax, vmin = _sliding_extrema(v, lo, hi)
        return np.maximum(vmax - v, v - vmin) / r
    out = np.empty(space.n_nodes)
    xy = space.nodes
    r2 = r * r
    for i in range(space.n_nodes):
        d2 = (xy[:, 0] - xy[i, 0]) ** 2 + (xy[:, 1] - xy[i, 1]) ** 2
        sel = d2 < r2
        out[i] = float(np.max(np.abs(v[sel] - v[i]))) / r
    return out


def _cell_prefix(space: Space, g: np.ndarray) -> np.ndarray:
    """Prefix integral of the piecewise-constant field g * density over cell edges."""
    seg = g * space.density * np.diff(space.cell_bounds)
    return np.concatenate(([0.0], np.cumsum(seg)))


def _integral_to(space: Space, prefix: np.ndarray, gw: np.ndarray, x: float) -> float:
    edges = space.cell_bounds
    if x <= edges[0]:
        return 0.0
    if x >= edges[-1]:
        return float(prefix[-1])
    k = int(np.searchsorted(edges, x, side="right")) - 1
    return float(prefix[k] + gw[k] * (x - edges[k]))


def ball_average(space: Space, g: np.ndarray, center: float, r: float) -> float:
    """Exact mu-average of a per-node (piecewise-constant) field over B(center, r) ∩ X."""
    if space.kind != INTERVAL:
        raise ValueError("exact ball averages are 1D")
    prefix = _cell_prefix(space, g)
    gw = g * space.density
    num = _integral_to(space, prefix, gw, center + r) - _integral_to(
        space, prefix, gw, center - r
    )
    den = ball_measures(space, np.array([center]), r)[0]
    return num / den


def restricted_maximal(space: Space, g: np.ndarray, R: float) -> np.ndarray:
    """M_R g per node: sup of ball averages over 0 < r <= R.

    1D: the average is a Mobius function of r between radii where a ball end
    crosses a cell edge, so scanning the crossing radii plus R is exact; the
    r -> 0 limit contributes g(x) itself. 2D: geometric ladder, approximate.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    g = np.asarray(g, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("g must be nonnegative")
    if space.kind == GRID:
        out = np.maximum(g, 0.0).copy()
        radii = np.geomspace(min(1.0 / space.nx, R) / 2, R, 12)
        for r in radii:
            mu = ball_measures(space, space.nodes, float(r))
            for i in range(space.n_nodes):
                sel = (space.nodes[:, 0] - space.nodes[i, 0]) ** 2 + (
                    space.nodes[:, 1] - space.nodes[i, 1]
                ) ** 2 < r * r
                out[i] = max(out[i], float(np.sum(g[sel] * space.cell_mass[sel])) / mu[i])
        return out

    edges = space.cell_bounds
    prefix = _cell_prefix(space, g)
    gw = g * space.density
    bp, pw, pp = space.piece_bounds, space.piece_weights, space.piece_prefix
    out = np.empty(space.n_nodes)
    for i, x in enumerate(space.nodes):
        dist = np.abs(edges - x)
        cand = dist[(dist > 0) & (dist <= R)]
        cand = np.unique(np.concatenate((cand, [R])))
        best = g[i]  # r -> 0 limit at the cell interior
        for r in cand:
            num = _integral_to(space, prefix, gw, x + r) - _integral_to(
                space, prefix, gw, x - r
            )
            den = interval_ball_mass_py(x, float(r), bp, pp, pw)
            best = max(best, num / den)
        out[i] = best
    return out


def interval_ball_mass_py(c, r, bp, pp, pw):
    hi = min(c + r, bp[-1])
    lo = max(c - r, bp[0])
    khi = min(max(int(np.searchsorted(bp, hi, side="right")) - 1, 0), pw.size - 1)
    klo = min(max(int(np.searchsorted(bp, lo, side="right")) - 1, 0), pw.size - 1)
    whi = pp[khi] + pw[khi] * (hi - bp[khi])
    wlo = pp[klo] + pw[klo] * (lo - bp[klo])
    return float(whi - wlo)


@dataclass
class TelescopeReport:
    constant: float
    argmax_position: float
    skipped: int


def audit_telescope(
    space: Space,
    f: SampledFunction,
    g: np.ndarray,
    r: float,
    lam: float = 1.0,
    exponent: float = 1.0,
    sample_stride: int = 1,
) -> TelescopeReport:
    """Measured constant in |f(y) - f_B(y,r)| <= const * r * (M_{lam r} g^e (y))^{1/e}.

    g must be an upper gradient for f on the model space (|f'| <= g). Nodes where
    the maximal function vanishes are skipped and counted.
    """
    if space.kind != INTERVAL:
        raise ValueError("telescope audit is 1D")
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    ge = np.asarray(g, dtype=np.float64) ** exponent
    mg = restricted_maximal(space, ge, lam * r)
    prefix = _cell_prefix(space, f.values)
    gw = f.values * space.density
    mu = ball_measures(space, space.nodes, r)
    skipped = 0
    best = 0.0
    best_pos = float(space.nodes[0])
    for i in range(0, space.n_nodes, sample_stride):
        x = float(space.nodes[i])
        avg = (
            _integral_to(space, prefix, gw, x + r) - _integral_to(space, prefix, gw, x - r)
        ) / mu[i]
        denom = r * mg[i] ** (1.0 / exponent)
        if denom <= 0.0:
            skipped += 1
            continue
        val = abs(f.values[i] - avg) / denom
        if val > best:
            best = val
            best_pos = x
    return TelescopeReport(constant=best, argmax_position=best_pos, skipped=skipped)
