"""Quadrature engines for the four nonlocal functionals.

All engines share one discrete convention: node-pair sums with exact clipped
cell masses at every kernel discontinuity radius, the self-node excluded as a
quadrature point, and the diagonal cell integrated with the locally-affine
reconstruction when slope data is available. Per-outer-node partial results
are folded with a serial compensated sum, so values are bit-identical for any
worker count.

omega restricts both integrals (the functional's domain); omega_y further
restricts the outer integral only, which is the boundary-trimmed mode: the
inner window then never leaves the domain, so no artificial boundary layer is
introduced at finite kernel radius.

For deep piecewise-linear scenarios where the kernel scale sits far below the
grid resolution, eval_Phi also offers method="segment": the inner integral is
evaluated in closed form from the cell decomposition and only the outer
integral is quadratured (Gauss rule per smoothness zone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import numba

from . import _kernels
from .funcspace import SampledFunction
from .geometry import kahan_sum
from .mollifier import MollifierSpec
from .phi import PhiSpec
from .space import GRID, INTERVAL, Space

_EMPTY = np.empty(0, dtype=np.float64)
_NOMASK = np.empty(0, dtype=np.uint8)


@dataclass
class FunctionalValue:
    which: str  # "I" | "Psi" | "Phi" | "Lambda"
    value: float
    p: float
    params: dict = field(default_factory=dict)
    pair_count: int = 0
    diag_excluded: int = 0

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"functional value must be finite and nonnegative, got {self.value}")


class _workers:
    """Context manager pinning the numba thread count (clamped to the launch max)."""

    def __init__(self, n: int | None):
        self.n = n
        self.prev = None

    def __enter__(self):
        if self.n is not None:
            self.prev = numba.get_num_threads()
            numba.set_num_threads(max(1, min(int(self.n), numba.config.NUMBA_NUM_THREADS)))

    def __exit__(self, *exc):
        if self.prev is not None:
            numba.set_num_threads(self.prev)


def omega_mask(space: Space, omega) -> np.ndarray:
    """Normalize an omega argument to a per-node uint8 mask.

    None selects the whole space; a (lo, hi) pair selects nodes in the closed
    interval (1D) or the square [lo,hi]^2 (2D); an array is taken as a node
    predicate. Omega is realized as the union of the selected cells."""
    if omega is None:
        return np.ones(space.n_nodes, dtype=np.uint8)
    if isinstance(omega, tuple) and len(omega) == 2 and np.isscalar(omega[0]):
        lo, hi = float(omega[0]), float(omega[1])
        if space.kind == INTERVAL:
            return ((space.nodes >= lo) & (space.nodes <= hi)).astype(np.uint8)
        m = (
            (space.nodes[:, 0] >= lo)
            & (space.nodes[:, 0] <= hi)
            & (space.nodes[:, 1] >= lo)
            & (space.nodes[:, 1] <= hi)
        )
        return m.astype(np.uint8)
    arr = np.asarray(omega)
    if arr.shape != (space.n_nodes,):
        raise ValueError("omega mask must have one entry per node")
    return arr.astype(np.uint8)


def _masks(space, omega, omega_y):
    if omega is None and omega_y is None:
        return _NOMASK, _NOMASK, 0, 0
    mx = omega_mask(space, omega)
    if omega_y is None:
        my = mx
    else:
        my = mx & omega_mask(space, omega_y)
    use_x = 0 if omega is None else 1
    return (mx if use_x else _NOMASK), my, use_x, 1


def _slope_args(f: SampledFunction, n: int):
    if f.slope is not None:
        return f.slope.astype(np.float64), 1
    return np.zeros(n), 0


def _phi_args(spec: PhiSpec):
    if spec.kind == "step":
        return 0, spec.threshold, spec.b, _EMPTY, _EMPTY
    if spec.kind == "clamp":
        return 1, spec.gamma, spec.b, _EMPTY, _EMPTY
    return 2, 0.0, spec.b, spec.knots.astype(np.float64), spec.table.astype(np.float64)


def _grid_mu_ball(space: Space, r: float) -> np.ndarray:
    out = np.empty(space.n_nodes)
    _kernels.mu_ball_grid(space.nx, space.ny, r, out)
    return out


def pair_inner(
    space: Space,
    f: SampledFunction,
    e: float,
    mollifier: MollifierSpec,
    omega=None,
    workers: int | None = None,
    omega_y=None,
):
    """Per-node inner integrals int (|f(x)-f(y)|/d)^e rho(x,y) dmu(x) plus pair counters."""
    maskx, masky, use_x, use_y = _masks(space, omega, omega_y)
    n = space.n_nodes
    inner = np.zeros(n)
    pairs = np.zeros(n, dtype=np.int64)
    diag = np.zeros(n, dtype=np.int64)
    fam = mollifier.family
    with _workers(workers):
        if space.kind == INTERVAL:
            pos = space.nodes
            cbl = space.cell_bounds[:-1]
            cbr = space.cell_bounds[1:]
            sl, has_slope = _slope_args(f, n)
            if fam in ("flat-window", "window-power"):
                from .space import ball_measures

                mu_b = ball_measures(space, pos, mollifier.r)
                _kernels.window_inner_1d(
                    pos, f.values, sl, has_slope, cbl, cbr, space.density,
                    space.cell_mass, maskx, masky, use_x, use_y, mu_b,
                    1 if mollifier.anchor == "y-ball" else 0,
                    mollifier.r, mollifier.q or 0.0, float(e), inner, pairs, diag,
                )
            elif fam == "euclidean-radial":
                _kernels.radial_inner_1d(
                    pos, f.values, sl, has_slope, cbl, cbr, space.density,
                    maskx, masky, use_x, use_y,
                    mollifier.profile_bounds, mollifier.profile_values, float(e),
                    inner, pairs, diag,
                )
            elif fam == "fractional":
                _kernels.frac_inner_1d(
                    pos, f.values, sl, has_slope, cbl, cbr, space.cell_mass,
                    maskx, masky, use_x, use_y,
                    space.piece_bounds, space.piece_prefix, space.piece_weights,
                    1 if mollifier.anchor == "y-ball" else 0,
                    mollifier.s, mollifier.p, float(e), inner, pairs, diag,
                )
            else:
                from .reference import reference_inner

                return reference_inner(space, f, e, mollifier,
                                       _dense_mask(space, maskx, use_x),
                                       _dense_mask(space, masky, use_y))
        else:
            if fam in ("flat-window", "window-power"):
                r = mollifier.r
                mu_b = _grid_mu_ball(space, r)
                tb = np.array([0.0, r])
                tv = np.array([1.0])
                _kernels.radial_inner_2d(
                    f.values, space.nx, space.ny, maskx, masky, use_x, use_y,
                    tb, tv, float(e), mu_b,
                    1 if mollifier.anchor == "y-ball" else 0, 1,
                    mollifier.q or 0.0, inner, pairs,
                )
            elif fam == "euclidean-radial":
                _kernels.radial_inner_2d(
                    f.values, space.nx, space.ny, maskx, masky, use_x, use_y,
                    mollifier.profile_bounds, mollifier.profile_values, float(e),
                    _EMPTY, 1, 0, 0.0, inner, pairs,
                )
            else:
                from .reference import reference_inner

                return reference_inner(space, f, e, mollifier,
                                       _dense_mask(space, maskx, use_x),
                                       _dense_mask(space, masky, use_y))
    return inner, pairs, diag


def _dense_mask(space, mask, flag):
    return np.ones(space.n_nodes, dtype=np.uint8) if flag == 0 else mask


def eval_I(space, f, p, mollifier, omega=None, workers=None, omega_y=None) -> FunctionalValue:
    """Double mu-sum of |f(x)-f(y)|^p / d^p * rho(x, y)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    inner, pairs, diag = pair_inner(space, f, p, mollifier, omega, workers, omega_y)
    value = kahan_sum(space.cell_mass * inner)
    return FunctionalValue(
        which="I", value=float(value), p=p,
        params={"family": mollifier.family},
        pair_count=int(pairs.sum()), diag_excluded=int(diag.sum()),
    )


def eval_Psi(space, f, p, eps, mollifier, omega=None, workers=None, omega_y=None) -> FunctionalValue:
    """( double sum with exponent p+eps )^(p/(p+eps)); eps = 0 recovers eval_I exactly."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    inner, pairs, diag = pair_inner(space, f, p + eps, mollifier, omega, workers, omega_y)
    raw = kahan_sum(space.cell_mass * inner)
    value = raw ** (p / (p + eps)) if raw > 0 else 0.0
    return FunctionalValue(
        which="Psi", value=float(value), p=p,
        params={"eps": eps, "raw": float(raw), "family": mollifier.family},
        pair_count=int(pairs.sum()), diag_excluded=int(diag.sum()),
    )


def eval_Phi(space, f, p, q, mollifier, omega=None, workers=None, omega_y=None,
             method="pairs") -> FunctionalValue:
    """Outer mu-sum over y of [inner mu-sum of (|df|/d)^{pq} rho]^{1/q}."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if q <= 1:
        raise ValueError("q must exceed 1")
    if method == "segment":
        return _phi_segment(space, f, p, q, mollifier, omega, workers)
    inner, pairs, diag = pair_inner(space, f, p * q, mollifier, omega, workers, omega_y)
    value = kahan_sum(space.cell_mass * inner ** (1.0 / q))
    return FunctionalValue(
        which="Phi", value=float(value), p=p,
        params={"q": q, "family": mollifier.family, "method": "pairs"},
        pair_count=int(pairs.sum()), diag_excluded=int(diag.sum()),
    )


def eval_Lambda(space, f, p, delta, phi, anchor="ahlfors-power", Q=None,
                omega=None, workers=None, omega_y=None) -> FunctionalValue:
    """Double sum of delta^p phi(|df|/delta) / (normalizer * d^p).

    anchor selects the normalizer: 'ahlfors-power' uses d^Q (so the denominator
    is d^{Q+p}), 'y-ball' uses mu(B(y, d)), 'x-ball' uses mu(B(x, d))."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if p < 1:
        raise ValueError("p must be at least 1")
    if anchor not in ("ahlfors-power", "y-ball", "x-ball"):
        raise ValueError("anchor must be ahlfors-power, y-ball or x-ball")
    maskx, masky, use_x, use_y = _masks(space, omega, omega_y)
    n = space.n_nodes
    inner = np.zeros(n)
    phi_kind, phi_a, phi_b, phi_knots, phi_vals = _phi_args(phi)
    with _workers(workers):
        if space.kind == INTERVAL:
            norm_mode = {"ahlfors-power": 0, "y-ball": 1, "x-ball": 2}[anchor]
            big_q = float(Q if Q is not None else 1.0)
            _kernels.lambda_inner_1d(
                space.nodes, f.values, space.cell_mass, maskx, masky, use_x, use_y,
                space.piece_bounds, space.piece_prefix, space.piece_weights,
                float(delta), float(p), big_q, norm_mode,
                phi_kind, phi_a, phi_b, phi_knots, phi_vals, inner,
            )
        else:
            if anchor != "ahlfors-power":
                from .reference import reference_lambda

                return reference_lambda(space, f, p, delta, phi, anchor, Q,
                                        _dense_mask(space, maskx, use_x),
                                        _dense_mask(space, masky, use_y))
            big_q = float(Q if Q is not None else 2.0)
            _kernels.lambda_pow_2d(
                f.values, space.nx, space.ny, maskx, masky, use_x, use_y,
                float(delta), float(p), big_q,
                phi_kind, phi_a, phi_b, phi_knots, phi_vals, inner,
            )
    value = kahan_sum(space.cell_mass * inner)
    nx_count = int(n if use_x == 0 else int(maskx.sum()))
    ny_count = int(n if use_y == 0 else int(masky.sum()))
    return FunctionalValue(
        which="Lambda", value=float(value), p=p,
        params={"delta": delta, "anchor": anchor, "Q": Q},
        pair_count=ny_count * max(nx_count - 1, 0), diag_excluded=ny_count,
    )


def kernel_pair_mass(space, mollifier, omega=None, workers=None) -> float:
    """Discrete double integral of rho over omega x omega (the e = 0 inner sum);
    the exact constant for the Hoelder bookkeeping on the same quadrature."""
    dummy = SampledFunction(values=np.zeros(space.n_nodes), slope=np.zeros(space.n_nodes))
    inner, _, _ = pair_inner(space, dummy, 0.0, mollifier, omega, workers)
    return float(kahan_sum(space.cell_mass * inner))


# ---------------------------------------------------------------------------
# segment method
# ---------------------------------------------------------------------------


def merge_linear_pieces(space: Space, f: SampledFunction, tol: float = 1e-9):
    """Merge adjacent cells with equal slope/density into maximal linear pieces.

    Requires 1D, slope data, no jumps; validates that the per-cell affine
    reconstructions agree at the shared edges (continuity)."""
    if space.kind != INTERVAL:
        raise ValueError("segment quadrature is 1D")
    if f.slope is None or f.jump_set:
        raise ValueError("segment quadrature needs continuous piecewise-linear data")
    pos = space.nodes
    sl = f.slope
    dens = space.density
    edges = space.cell_bounds
    right_val = f.values + sl * (edges[1:] - pos)
    left_val = f.values + sl * (edges[:-1] - pos)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    mismatch = np.abs(right_val[:-1] - left_val[1:])
    if np.max(mismatch) > tol * scale:
        raise ValueError("cells do not reconstruct a continuous piecewise-linear function")
    new_piece = np.empty(pos.size, dtype=bool)
    new_piece[0] = True
    new_piece[1:] = (sl[1:] != sl[:-1]) | (dens[1:] != dens[:-1])
    starts = np.nonzero(new_piece)[0]
    pb = np.concatenate((edges[:-1][starts], [edges[-1]]))
    psl = sl[starts]
    pwt = dens[starts]
    pv0 = left_val[starts]
    return pb, pv0, psl, pwt


_GAUSS_N = 24
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(_GAUSS_N)


def _phi_segment(space, f, p, q, mollifier, omega, workers) -> FunctionalValue:
    if mollifier.family != "euclidean-radial":
        raise ValueError("segment quadrature supports the euclidean-radial family")
    e = p * q
    e_int = int(round(e))
    if abs(e - e_int) > 1e-12 or e_int < 1:
        raise ValueError("segment quadrature needs an integer inner exponent p*q")
    if omega is None:
        olo, ohi = 0.0, 1.0
    elif isinstance(omega, tuple) and np.isscalar(omega[0]):
        olo, ohi = float(omega[0]), float(omega[1])
    else:
        raise ValueError("segment quadrature supports interval omega only")
    pb, pv0, psl, pwt = merge_linear_pieces(space, f)
    tb = mollifier.profile_bounds
    tv = mollifier.profile_values
    # outer smoothness zones: cut at piece bounds shifted by every profile radius
    cuts = [pb]
    for t in tb:
        if t > 0:
            cuts.append(pb + t)
            cuts.append(pb - t)
    cuts = np.unique(np.clip(np.concatenate(cuts), olo, ohi))
    zl, zr = cuts[:-1], cuts[1:]
    keep = zr > zl
    zl, zr = zl[keep], zr[keep]
    half = 0.5 * (zr - zl)
    mid = 0.5 * (zr + zl)
    ys = (mid[:, None] + half[:, None] * _GAUSS_X[None, :]).ravel()
    gw = (half[:, None] * _GAUSS_W[None, :]).ravel()
    binom = np.array([math.comb(e_int, j) for j in range(e_int + 1)], dtype=np.float64)
    out = np.empty(ys.size)
    with _workers(workers):
        _kernels.segment_phi_points(
            ys, gw, pb, pv0, psl, pwt, tb, tv, e_int, binom, 1.0 / q, olo, ohi, out
        )
    value = kahan_sum(out)
    return FunctionalValue(
        which="Phi", value=float(value), p=p,
        params={"q": q, "family": mollifier.family, "method": "segment",
                "pieces": int(psl.size), "outer_points": int(ys.size)},
        pair_count=int(ys.size), diag_excluded=0,
    )
