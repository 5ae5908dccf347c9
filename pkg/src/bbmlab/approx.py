"""Ball covers, subordinate partitions of unity, and discrete convolutions.

A cover at scale s is a maximal s-separated set of nodes of the inflated set
U(5s), so the s-balls automatically cover U(5s). The partition of unity is
built from tent bumps of width 2s normalized by their sum; the measured
Lipschitz constant is reported instead of the (very loose) theoretical one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcspace import SampledFunction, ball_average
from .space import INTERVAL, Space, ball_measures


@dataclass
class Cover:
    scale: float
    centers: np.ndarray          # node indices of the ball centers
    u_mask: np.ndarray           # the set U (node mask)
    inflated_mask: np.ndarray    # U(5s)
    multiplicity: int            # measured max overlap of the 5B balls
    discarded: int               # centers dropped because 5B left the ambient set

    @property
    def n_balls(self) -> int:
        return int(self.centers.size)


def _as_mask(space: Space, u) -> np.ndarray:
    if isinstance(u, tuple) and len(u) == 2 and np.isscalar(u[0]):
        lo, hi = float(u[0]), float(u[1])
        return (space.nodes >= lo) & (space.nodes <= hi)
    arr = np.asarray(u, dtype=bool)
    if arr.shape != (space.n_nodes,):
        raise ValueError("U must be an interval or a node mask")
    return arr


def build_cover(space: Space, u, s: float, ambient=None) -> Cover:
    """Greedy maximal s-separated net of U(5s); every retained 5-ball must fit in
    the ambient set (the whole space by default; centers violating this near the
    ambient boundary are discarded and counted)."""
    if space.kind != INTERVAL:
        raise ValueError("covers are implemented for 1D spaces")
    u_mask = _as_mask(space, u)
    if not u_mask.any():
        raise ValueError("U is empty")
    if ambient is None:
        amb_lo, amb_hi = 0.0, 1.0
        if s >= space.diameter / 10.0 or s <= 0:
            raise ValueError("scale must lie in (0, diam/10)")
    else:
        amb_lo, amb_hi = float(ambient[0]), float(ambient[1])
        u_pos = space.nodes[u_mask]
        gap = min(float(u_pos.min()) - amb_lo, amb_hi - float(u_pos.max()))
        if s >= gap / 10.0 or s <= 0:
            raise ValueError("scale must lie in (0, dist(U, boundary)/10)")

    pos = space.nodes
    u_pos = pos[u_mask]
    dist_to_u = np.full(space.n_nodes, np.inf)
    idx = np.searchsorted(u_pos, pos)
    left_ok = idx > 0
    right_ok = idx < u_pos.size
    dist_to_u[left_ok] = np.abs(pos[left_ok] - u_pos[idx[left_ok] - 1])
    dist_to_u[right_ok] = np.minimum(
        dist_to_u[right_ok], np.abs(pos[right_ok] - u_pos[np.minimum(idx[right_ok], u_pos.size - 1)])
    )
    inflated = dist_to_u < 5.0 * s

    centers = []
    discarded = 0
    last = -np.inf
    for i in np.nonzero(inflated)[0]:
        if pos[i] - last < s:
            continue
        if ambient is not None and (pos[i] - 5 * s < amb_lo or pos[i] + 5 * s > amb_hi):
            discarded += 1
            continue
        centers.append(i)
        last = pos[i]
    centers = np.asarray(centers, dtype=np.int64)
    if centers.size == 0:
        raise ValueError("cover is empty; U(5s) has no admissible centers")

    # measured multiplicity of the inflated balls {5B_j}
    counts = np.zeros(space.n_nodes, dtype=np.int64)
    for i in centers:
        lo = np.searchsorted(pos, pos[i] - 5 * s, side="right")
        hi = np.searchsorted(pos, pos[i] + 5 * s, side="left")
        counts[lo:hi] += 1
    return Cover(
        scale=s,
        centers=centers,
        u_mask=u_mask,
        inflated_mask=inflated,
        multiplicity=int(counts.max()),
        discarded=discarded,
    )


@dataclass
class PartitionOfUnity:
    cover: Cover
    lip_const: float  # measured max slope over all bumps

    def raw_bump(self, j: int, positions: np.ndarray) -> np.ndarray:
        c = self.cover
        s = c.scale
        center = positions[c.centers[j]] if positions.ndim == 1 else None
        d = np.abs(positions - center)
        return np.maximum(0.0, 1.0 - d / (2.0 * s))

    def bump_values(self, space: Space) -> np.ndarray:
        """Dense (n_balls, n_nodes) array of the normalized bumps (small covers only)."""
        c = self.cover
        pos = space.nodes
        raw = np.zeros((c.n_balls, space.n_nodes))
        for j, i in enumerate(c.centers):
            raw[j] = np.maximum(0.0, 1.0 - np.abs(pos - pos[i]) / (2.0 * c.scale))
        tot = raw.sum(axis=0)
        safe = np.where(tot > 0, tot, 1.0)
        return raw / safe


def build_pou(space: Space, cover: Cover) -> PartitionOfUnity:
    """Tent bumps of half-width 2s normalized by their sum. On U(5s) the raw sum
    is at least 1/2 (some center lies within s), so the normalization is safe."""
    pos = space.nodes
    raw_sum = np.zeros(space.n_nodes)
    for i in cover.centers:
        raw_sum += np.maximum(0.0, 1.0 - np.abs(pos - pos[i]) / (2.0 * cover.scale))
    if np.any(raw_sum[cover.inflated_mask] <= 0):
        raise ValueError("degenerate cover: bump sum vanishes on U(5s)")
    pou = PartitionOfUnity(cover=cover, lip_const=0.0)
    vals = pou.bump_values(space)
    dpos = np.diff(pos)
    # measured over U(5s), where the partition property is claimed; outside the
    # cover's reach the normalization of a vanishing sum is meaningless
    both_in = cover.inflated_mask[:-1] & cover.inflated_mask[1:]
    slopes = np.abs(np.diff(vals, axis=1)) / dpos[None, :]
    pou.lip_const = float(np.max(slopes[:, both_in]))
    return pou


def discrete_convolution(space: Space, f: SampledFunction, cover: Cover,
                         pou: PartitionOfUnity) -> SampledFunction:
    """h = sum_j (mu-average of f over B_j) * phi_j; reproduces constants exactly."""
    vals = pou.bump_values(space)
    averages = np.array(
        [ball_average(space, f.values, float(space.nodes[i]), cover.scale) for i in cover.centers]
    )
    h = averages @ vals
    pos = space.nodes
    slopes = np.diff(h) / np.diff(pos)
    deriv = np.zeros_like(h)
    deriv[:-1] = np.abs(slopes)
    deriv[1:] = np.maximum(deriv[1:], np.abs(slopes))
    return SampledFunction(values=h, derivative=deriv, label="discrete-convolution")


@dataclass
class LipChainReport:
    lhs: float                 # integral over U of (Lip h)^p
    rhs_pointwise: float       # same integral for the double-average majorant
    rhs_functional: float      # the windowed-functional bound with its huge constant
    slack_pointwise: float
    slack_functional: float
    pair_violations: int
    pairs_audited: int
    c_doubling: float


def lip_chain_report(space: Space, f: SampledFunction, cover: Cover,
                     pou: PartitionOfUnity, p: float, q: float,
                     pair_budget: int = 10000, rng_stride: int = 7) -> LipChainReport:
    """Audit the discrete-convolution gradient chain.

    lhs integrates (Lip h)^p over U. The pointwise route bounds Lip h on each
    B_j by (6 C_d^19 / s) times the double ball-average of |f(x)-f(y)| over
    5B_j; the functional route multiplies the windowed q-mean functional at
    radius 10s by (60 C_d^37)^p. Pairs (x, y) in a common B_j are audited
    against |h(x)-h(y)| <= (6 C_d^19 d(x,y)/s) * double-average: the report
    counts violations (expected zero; the constants are far from tight)."""
    from .space import audit_doubling

    s = cover.scale
    pos = space.nodes
    cd = audit_doubling(space)
    h = discrete_convolution(space, f, cover, pou)

    u_idx = np.nonzero(cover.u_mask)[0]
    lip_h = np.zeros(space.n_nodes)
    dpos = np.diff(pos)
    sl = np.abs(np.diff(h.values) / dpos)
    lip_h[:-1] = sl
    lip_h[1:] = np.maximum(lip_h[1:], sl)
    lhs = float(np.sum(lip_h[u_idx] ** p * space.cell_mass[u_idx]))

    # double ball-averages over the inflated balls
    dbl = np.empty(cover.n_balls)
    mass5 = ball_measures(space, pos[cover.centers], 5 * s)
    for j, i in enumerate(cover.centers):
        lo = np.searchsorted(pos, pos[i] - 5 * s, side="right")
        hi = np.searchsorted(pos, pos[i] + 5 * s, side="left")
        w = space.cell_mass[lo:hi]
        v = f.values[lo:hi]
        dbl[j] = float(np.abs(v[None, :] - v[:, None]) @ w @ w) / mass5[j] ** 2

    c_point = 6.0 * cd**19 / s
    majorant = np.zeros(space.n_nodes)
    for j, i in enumerate(cover.centers):
        lo = np.searchsorted(pos, pos[i] - s, side="right")
        hi = np.searchsorted(pos, pos[i] + s, side="left")
        majorant[lo:hi] += c_point * dbl[j]
    rhs_pointwise = float(np.sum(majorant[u_idx] ** p * space.cell_mass[u_idx]))

    # pointwise pair audit inside the s-balls; the floor absorbs last-ulp noise
    # in h when the double average is exactly zero (locally constant f)
    atol = 1e-10 * (1.0 + float(np.max(np.abs(f.values))))
    violations = 0
    audited = 0
    for j, i in enumerate(cover.centers):
        lo = np.searchsorted(pos, pos[i] - s, side="right")
        hi = np.searchsorted(pos, pos[i] + s, side="left")
        if hi - lo < 2:
            continue
        span = np.arange(lo, hi)
        for a in span[:: rng_stride]:
            for b in span[:: rng_stride]:
                if a >= b:
                    continue
                if audited >= pair_budget:
                    break
                audited += 1
                bound = c_point * abs(pos[a] - pos[b]) * dbl[j]
                if abs(h.values[a] - h.values[b]) > bound * (1 + 1e-12) + atol:
                    violations += 1

    # functional route at radius 10s
    r10 = 10.0 * s
    e = p * q
    mu10 = ball_measures(space, pos, r10)
    inner = np.zeros(space.n_nodes)
    for k in range(space.n_nodes):
        lo = np.searchsorted(pos, pos[k] - r10, side="right")
        hi = np.searchsorted(pos, pos[k] + r10, side="left")
        w = space.cell_mass[lo:hi]
        v = np.abs(f.values[lo:hi] - f.values[k]) / r10
        inner[k] = float(np.sum(v**e * w)) / mu10[k]
    j_func = float(np.sum(inner ** (1.0 / q) * space.cell_mass))
    rhs_functional = (60.0 * cd**37) ** p * j_func

    return LipChainReport(
        lhs=lhs,
        rhs_pointwise=rhs_pointwise,
        rhs_functional=rhs_functional,
        slack_pointwise=rhs_pointwise / lhs if lhs > 0 else np.inf,
        slack_functional=rhs_functional / lhs if lhs > 0 else np.inf,
        pair_violations=violations,
        pairs_audited=audited,
        c_doubling=cd,
    )
