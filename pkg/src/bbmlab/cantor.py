"""Fat Cantor weight: exact dyadic construction, auditors, and derived functions.

Generation i removes 2^{i-1} open intervals of length 2^{-2i}, centered at the
midpoints of the surviving components. The remaining lengths obey
L_i = L_{i-1} - 2^{-i-1}, so L_m = 1/2 + 2^{-m-1} exactly and the limit set has
measure 1/2. All endpoints are dyadic rationals, exactly representable both as
Fractions and as float64 for m <= 24.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .funcspace import SampledFunction
from .space import ResolutionError, Space, build_weighted_interval

MAX_DEPTH = 24


@dataclass
class CantorModel:
    m: int
    A_intervals: list[tuple[Fraction, Fraction]]  # closed components of A_m
    D_intervals: list[list[tuple[Fraction, Fraction]]]  # removed per generation, 1-based
    L: list[Fraction]  # L_0 .. L_m
    A_per_gen: list[list[tuple[Fraction, Fraction]]]  # components of A_0 .. A_m

    @property
    def components(self) -> int:
        return len(self.A_intervals)

    def a_measure(self) -> Fraction:
        return self.L[self.m]


def build_cantor_model(m: int) -> CantorModel:
    if not 1 <= m <= MAX_DEPTH:
        raise ValueError(f"depth must lie in [1, {MAX_DEPTH}]")
    comps = [(Fraction(0), Fraction(1))]
    removed: list[list[tuple[Fraction, Fraction]]] = [[]]
    per_gen = [list(comps)]
    lengths = [Fraction(1)]
    for i in range(1, m + 1):
        gap = Fraction(1, 2 ** (2 * i))
        new_comps = []
        gen = []
        for a, b in comps:
            mid = (a + b) / 2
            lo, hi = mid - gap / 2, mid + gap / 2
            gen.append((lo, hi))
            new_comps.append((a, lo))
            new_comps.append((hi, b))
        comps = new_comps
        removed.append(gen)
        per_gen.append(list(comps))
        lengths.append(lengths[-1] - Fraction(2 ** (i - 1)) * gap)
    model = CantorModel(
        m=m, A_intervals=comps, D_intervals=removed, L=lengths, A_per_gen=per_gen
    )
    assert model.L[m] == Fraction(1, 2) + Fraction(1, 2 ** (m + 1))
    return model


def limit_f_off_level(model: CantorModel, i: int, x: Fraction) -> Fraction:
    """The completed-set primitive at a point outside the open components of A_i:
    every component of A_i carries limit mass 2^{-i-1}, so f(x) = k 2^{-i} with
    k the number of components entirely to the left of x."""
    from bisect import bisect_right

    comps = model.A_per_gen[i]
    ends = [b for _, b in comps]
    k = bisect_right(ends, x)
    if k < len(comps) and x > comps[k][0]:
        raise ValueError("point lies inside a level-i component")
    return Fraction(k, 2**i)


def cantor_space(model: CantorModel, n_cells: int) -> Space:
    """Weighted interval with density 2 on the depth-m components, 1 elsewhere.

    Refuses grids whose uniform spacing exceeds an eighth of the finest removed
    interval (the density would still be exact thanks to breakpoint splitting,
    but downstream pair quadrature would be under-resolved)."""
    finest = 2.0 ** (-2 * model.m)
    if 1.0 / n_cells > finest / 8.0 + 1e-15:
        need = int(np.ceil(8.0 / finest))
        raise ResolutionError(
            f"n_cells={n_cells} under-resolves the finest removed interval; need >= {need}"
        )
    bp, w = cantor_pieces(model)
    return build_weighted_interval(bp, w, n_cells)


def cantor_pieces(model: CantorModel):
    """Breakpoints and per-piece weights (2 on A-components, 1 on gaps) as floats."""
    bp = [0.0]
    w = []
    for a, b in model.A_intervals:
        fa, fb = float(a), float(b)
        if fa > bp[-1]:
            w.append(1.0)
            bp.append(fa)
        w.append(2.0)
        bp.append(fb)
    if bp[-1] < 1.0:
        w.append(1.0)
        bp.append(1.0)
    return np.array(bp), np.array(w)


def cantor_values(model: CantorModel, x: np.ndarray):
    """f(x) = integral of 2*chi_{A_m} up to x and its slope, vectorized and exact
    on dyadic inputs (prefix sums of component lengths)."""
    starts = np.array([float(a) for a, _ in model.A_intervals])
    ends = np.array([float(b) for _, b in model.A_intervals])
    prefix = np.concatenate(([0.0], np.cumsum(2.0 * (ends - starts))))
    k = np.searchsorted(ends, x, side="right")  # components fully to the left
    k = np.clip(k, 0, starts.size)
    vals = prefix[k]
    inside = (k < starts.size) & (x > starts[np.minimum(k, starts.size - 1)])
    add = np.where(inside, 2.0 * (x - starts[np.minimum(k, starts.size - 1)]), 0.0)
    slope = np.where(inside, 2.0, 0.0)
    return vals + add, slope


class CantorFunctions:
    """The limit-flavored function f (at depth m), its density g = 2 chi_{A_m},
    and the approximant pair sequences g_i = chi_{D_i} / (L_{i-1} - L_i),
    f_i = primitive of g_i, all exact in Fraction arithmetic (bisected prefix
    sums keep the audits fast at depth 12)."""

    def __init__(self, model: CantorModel):
        from bisect import bisect_right

        self.model = model
        self._bisect = bisect_right
        self._a_starts = [a for a, _ in model.A_intervals]
        self._a_ends = [b for _, b in model.A_intervals]
        pref = [Fraction(0)]
        for a, b in model.A_intervals:
            pref.append(pref[-1] + 2 * (b - a))
        self._a_prefix = pref
        self._gap_starts = {}
        self._gap_ends = {}
        self._gap_prefix = {}
        for i in range(1, model.m + 1):
            gaps = model.D_intervals[i]
            self._gap_starts[i] = [lo for lo, _ in gaps]
            self._gap_ends[i] = [hi for _, hi in gaps]
            gp = [Fraction(0)]
            for lo, hi in gaps:
                gp.append(gp[-1] + (hi - lo))
            self._gap_prefix[i] = gp

    def f(self, x: Fraction) -> Fraction:
        k = self._bisect(self._a_starts, x)  # components starting before x
        if k == 0:
            return Fraction(0)
        acc = self._a_prefix[k - 1]
        a, b = self._a_starts[k - 1], self._a_ends[k - 1]
        return acc + 2 * (min(x, b) - a)

    def g(self, x: Fraction) -> int:
        k = self._bisect(self._a_starts, x)
        if k and x <= self._a_ends[k - 1]:
            return 2
        return 0

    def g_i_height(self, i: int) -> Fraction:
        L = self.model.L
        return 1 / (L[i - 1] - L[i])

    def g_i(self, i: int, x: Fraction) -> Fraction:
        k = self._bisect(self._gap_starts[i], x)
        if k and x < self._gap_ends[i][k - 1]:
            return self.g_i_height(i)
        return Fraction(0)

    def f_i(self, i: int, x: Fraction) -> Fraction:
        h = self.g_i_height(i)
        k = self._bisect(self._gap_starts[i], x)
        if k == 0:
            return Fraction(0)
        lo = self._gap_starts[i][k - 1]
        hi = self._gap_ends[i][k - 1]
        return h * (self._gap_prefix[i][k - 1] + (min(x, hi) - lo))

    def integral_g(self) -> Fraction:
        return 2 * self.model.L[self.model.m]

    def integral_g_i(self, i: int) -> Fraction:
        return self.g_i_height(i) * self._gap_prefix[i][-1]


def cantor_function(model: CantorModel) -> CantorFunctions:
    return CantorFunctions(model)


def bump_f0(space: Space, amplitude: float = 1.0) -> SampledFunction:
    """Tent bump supported in (3/8, 5/8); its variation is 2*amplitude because the
    weight envelope equals 1 on the first removed interval."""
    from .funcspace import sample_function

    return sample_function(space, "bump", amplitude=amplitude, support=(0.375, 0.625))


@dataclass
class CantorAuditReport:
    m: int
    lengths_exact: bool           # L_i = L_{i-1} - 2^{-i-1} and L_m = 1/2 + 2^{-m-1}
    component_count_exact: bool   # A_i has 2^i components of length L_i / 2^i
    unit_integrals: bool          # integral of g_i over a depth-(m) model = 1 for audited i
    uniform_bound: bool           # sup |f_{i+1} - f| <= 2^{-i}
    agree_off_A: bool             # f_{i+1} = f on the complement of A_i
    per_component_mass: bool      # each A_m component carries slope mass 2 L_m / 2^m
    notes: dict


def audit_cantor(model: CantorModel, check_depth: int | None = None) -> CantorAuditReport:
    """Verify the construction identities exactly (Fraction arithmetic).

    The approximant comparisons run against the completed-set primitive, which
    is exactly computable off the level-i components (limit_f_off_level). The
    audit checks, for each generation i up to the check depth:
      * f_{i+1} equals the limit primitive at every endpoint and midpoint of
        every gap of generation <= i (agreement off A_i);
      * across every component of A_i, f_{i+1} increases by exactly 2^{-i},
        matching the limit primitive's increment.
    Both functions are nondecreasing and agree at component endpoints, so the
    two exact checks together force sup |f_{i+1} - f| <= 2^{-i} everywhere."""
    m = model.m
    fns = cantor_function(model)
    lengths_exact = all(
        model.L[i] == model.L[i - 1] - Fraction(1, 2 ** (i + 1)) for i in range(1, m + 1)
    ) and model.L[m] == Fraction(1, 2) + Fraction(1, 2 ** (m + 1))

    component_count_exact = all(
        len(model.A_per_gen[i]) == 2**i
        and all(b - a == model.L[i] / 2**i for a, b in model.A_per_gen[i])
        for i in range(1, m + 1)
    )

    unit_integrals = all(fns.integral_g_i(i) == 1 for i in range(1, m + 1))

    depth = min(check_depth if check_depth is not None else m - 1, m - 1)
    uniform_bound = True
    agree_off_A = True
    for i in range(1, depth + 1):
        pts = {Fraction(0), Fraction(1)}
        for gen in range(1, i + 1):
            for lo, hi in model.D_intervals[gen]:
                pts |= {lo, hi, (lo + hi) / 2}
        for x in sorted(pts):
            if fns.f_i(i + 1, x) != limit_f_off_level(model, i, x):
                agree_off_A = False
        inc = Fraction(1, 2**i)
        for a, b in model.A_per_gen[i]:
            if fns.f_i(i + 1, b) - fns.f_i(i + 1, a) != inc:
                uniform_bound = False
        if not agree_off_A:
            uniform_bound = False

    per_component_mass = all(
        2 * (b - a) == 2 * model.L[m] / 2**m for a, b in model.A_intervals
    )
    return CantorAuditReport(
        m=m,
        lengths_exact=lengths_exact,
        component_count_exact=component_count_exact,
        unit_integrals=unit_integrals,
        uniform_bound=uniform_bound,
        agree_off_A=agree_off_A,
        per_component_mass=per_component_mass,
        notes={"L_m": model.L[m], "components": len(model.A_intervals)},
    )


@dataclass
class LimitTvReport:
    envelope_at_depth: float   # integral of |f'| against the density at depth m
    approximant_infimum: float  # inf over i of the approximant masses (exactly 1)
    limit_envelope: float       # envelope value for the completed set (w-hat = 1 on A)
    depth: int


def limit_tv_report(model: CantorModel) -> LimitTvReport:
    """Total-variation bookkeeping for the depth-m stand-in of the completed set.

    At finite depth the density is locally constant on the components, so the
    envelope value is 4 L_m; the approximant route gives 1 at every generation;
    the completed set is nowhere dense, its envelope weight is 1, and the limit
    envelope value is 2 * lim L_m = 1. The finite-depth disagreement is
    expected and both numbers are reported."""
    envelope_at_depth = float(4 * model.L[model.m])
    return LimitTvReport(
        envelope_at_depth=envelope_at_depth,
        approximant_infimum=1.0,
        limit_envelope=1.0,
        depth=model.m,
    )
