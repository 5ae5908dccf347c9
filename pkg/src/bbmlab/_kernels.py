"""Compiled inner loops for the pair-sum engines.

Every kernel fills a per-node output array indexed by the outer node, so the
result is bit-identical for any thread count; the caller folds the array with
a serial compensated sum. Window supports and piecewise-constant radial
profiles are integrated exactly across cell boundaries (partial cells get
their clipped mass), and the diagonal cell is handled by the locally-affine
reconstruction when slope data is available: the node itself is excluded as a
quadrature point, but its cell's measure is not dropped.

maskx restricts the inner (x) integration, masky the outer; flags use_maskx /
use_masky skip the loads entirely on whole-space runs.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .geometry import disc_rect_area, prefix_at


@njit(cache=True)
def _pow(t, e):
    if e == 1.0:
        return t
    if e == 2.0:
        return t * t
    if e == 0.0:
        return 1.0
    return t**e


@njit(cache=True)
def _window_edge_cell(
    xi, yi, y, fy, lo, hi, pos, fv, sl, has_slope, cbl, cbr, dens, r, qk, e, anchor_y, mu_b
):
    """Clipped contribution of one (possibly partial, possibly diagonal) cell."""
    a = max(cbl[xi], lo)
    b = min(cbr[xi], hi)
    if b <= a:
        return 0.0, 0, 0
    if xi == yi:
        if has_slope == 0:
            return 0.0, 0, 1
        dl = y - a
        dr = b - y
        se = _pow(abs(sl[xi]), e)
        if qk == 0.0:
            contrib = se * dens[xi] * (dl + dr)
        else:
            contrib = se * dens[xi] * (dl ** (qk + 1.0) + dr ** (qk + 1.0)) / (
                (qk + 1.0) * r**qk
            )
        if anchor_y == 0:
            contrib /= mu_b[xi]
        return contrib, 0, 1
    wgt = dens[xi] * (b - a)
    d = abs(pos[xi] - y)
    te = _pow(abs(fv[xi] - fy) / d, e)
    if qk != 0.0:
        te *= _pow(d / r, qk)
    if anchor_y == 0:
        wgt /= mu_b[xi]
    return wgt * te, 1, 0


@njit(cache=True, parallel=True)
def window_inner_1d(
    pos, fv, sl, has_slope, cbl, cbr, dens, mass,
    maskx, masky, use_maskx, use_masky,
    mu_b, anchor_y, r, qk, e, inner, pairs, diag,
):
    """inner[y] = sum over cells meeting the window (y-r, y+r) of
    clipped_mass * (|f(x)-f(y)| / d)^e * (d/r)^qk / mu(B(anchor, r)).
    qk = 0 is the flat window. Partial cells occur only at the two window ends,
    so the core runs branch-light left/right loops around the diagonal."""
    n = pos.shape[0]
    for yi in prange(n):
        if use_masky == 1 and masky[yi] == 0:
            continue
        y = pos[yi]
        fy = fv[yi]
        lo = y - r
        hi = y + r
        i0 = np.searchsorted(cbr, lo, side="right")
        i1 = np.searchsorted(cbl, hi, side="left")
        core_lo = i0 + (1 if cbl[i0] < lo else 0)
        core_hi = i1 - (1 if cbr[i1 - 1] > hi else 0)
        if core_hi < core_lo:
            core_hi = core_lo
        acc = 0.0
        npair = 0
        ndiag = 0
        # edge cells (clipped) and, if the window sits inside one cell, the diagonal
        for xi in range(i0, core_lo):
            if use_maskx == 1 and maskx[xi] == 0:
                continue
            c, np_, nd = _window_edge_cell(
                xi, yi, y, fy, lo, hi, pos, fv, sl, has_slope, cbl, cbr, dens,
                r, qk, e, anchor_y, mu_b,
            )
            acc += c
            npair += np_
            ndiag += nd
        for xi in range(max(core_hi, core_lo), i1):
            if use_maskx == 1 and maskx[xi] == 0:
                continue
            c, np_, nd = _window_edge_cell(
                xi, yi, y, fy, lo, hi, pos, fv, sl, has_slope, cbl, cbr, dens,
                r, qk, e, anchor_y, mu_b,
            )
            acc += c
            npair += np_
            ndiag += nd
        # diagonal cell inside the core
        if core_lo <= yi < core_hi:
            ndiag += 1
            if has_slope == 1:
                dl = y - cbl[yi]
                dr = cbr[yi] - y
                se = _pow(abs(sl[yi]), e)
                if qk == 0.0:
                    c = se * dens[yi] * (dl + dr)
                else:
                    c = se * dens[yi] * (dl ** (qk + 1.0) + dr ** (qk + 1.0)) / (
                        (qk + 1.0) * r**qk
                    )
                if anchor_y == 0:
                    c /= mu_b[yi]
                acc += c
        left_hi = min(yi, core_hi)
        right_lo = max(yi + 1, core_lo)
        if use_maskx == 0:
            if anchor_y == 1 and qk == 0.0 and e == 1.0:
                # hottest path: flat window, first power
                for xi in range(core_lo, left_hi):
                    acc += mass[xi] * (abs(fv[xi] - fy) / (y - pos[xi]))
                for xi in range(right_lo, core_hi):
                    acc += mass[xi] * (abs(fv[xi] - fy) / (pos[xi] - y))
            else:
                for xi in range(core_lo, left_hi):
                    d = y - pos[xi]
                    t = _pow(abs(fv[xi] - fy) / d, e)
                    if qk != 0.0:
                        t *= _pow(d / r, qk)
                    if anchor_y == 0:
                        t /= mu_b[xi]
                    acc += mass[xi] * t
                for xi in range(right_lo, core_hi):
                    d = pos[xi] - y
                    t = _pow(abs(fv[xi] - fy) / d, e)
                    if qk != 0.0:
                        t *= _pow(d / r, qk)
                    if anchor_y == 0:
                        t /= mu_b[xi]
                    acc += mass[xi] * t
            npair += max(left_hi - core_lo, 0) + max(core_hi - right_lo, 0)
        else:
            for xi in range(core_lo, left_hi):
                if maskx[xi] == 0:
                    continue
                d = y - pos[xi]
                t = _pow(abs(fv[xi] - fy) / d, e)
                if qk != 0.0:
                    t *= _pow(d / r, qk)
                if anchor_y == 0:
                    t /= mu_b[xi]
                acc += mass[xi] * t
                npair += 1
            for xi in range(right_lo, core_hi):
                if maskx[xi] == 0:
                    continue
                d = pos[xi] - y
                t = _pow(abs(fv[xi] - fy) / d, e)
                if qk != 0.0:
                    t *= _pow(d / r, qk)
                if anchor_y == 0:
                    t /= mu_b[xi]
                acc += mass[xi] * t
                npair += 1
        if anchor_y == 1:
            acc /= mu_b[yi]
        inner[yi] = acc
        pairs[yi] = npair
        diag[yi] = 1 if ndiag > 0 else 0


@njit(cache=True, parallel=True)
def radial_inner_1d(
    pos, fv, sl, has_slope, cbl, cbr, dens, maskx, masky, use_maskx, use_masky,
    tb, tv, e, inner, pairs, diag,
):
    """Euclidean radial kernel with a piecewise-constant profile: value tv[k] on
    the annulus tb[k] <= d < tb[k+1]; both sides integrated with exact clipping."""
    n = pos.shape[0]
    nring = tv.shape[0]
    for yi in prange(n):
        if use_masky == 1 and masky[yi] == 0:
            continue
        y = pos[yi]
        fy = fv[yi]
        acc = 0.0
        npair = 0
        ndiag = 0
        for k in range(nring):
            v = tv[k]
            if v == 0.0:
                continue
            t0 = tb[k]
            t1 = tb[k + 1]
            for side in range(2):
                if side == 0:
                    lo = y + t0
                    hi = y + t1
                else:
                    lo = y - t1
                    hi = y - t0
                i0 = np.searchsorted(cbr, lo, side="right")
                i1 = np.searchsorted(cbl, hi, side="left")
                for xi in range(i0, i1):
                    if use_maskx == 1 and maskx[xi] == 0:
                        continue
                    a = max(cbl[xi], lo)
                    b = min(cbr[xi], hi)
                    if b <= a:
                        continue
                    if xi == yi:
                        ndiag += 1
                        if has_slope == 1:
                            acc += v * _pow(abs(sl[xi]), e) * dens[xi] * (b - a)
                        continue
                    d = abs(pos[xi] - y)
                    te = _pow(abs(fv[xi] - fy) / d, e)
                    acc += v * dens[xi] * (b - a) * te
                    npair += 1
        inner[yi] = acc
        pairs[yi] = npair
        diag[yi] = 1 if ndiag > 0 else 0


@njit(cache=True, parallel=True)
def frac_inner_1d(
    pos, fv, sl, has_slope, cbl, cbr, mass, maskx, masky, use_maskx, use_masky,
    piece_bounds, piece_prefix, piece_weights, anchor_y, s, kp, e,
    inner, pairs, diag,
):
    """Fractional kernel (1-s) d^{kp(1-s)} / mu(B(anchor, d)); full pair loop."""
    n = pos.shape[0]
    expo = kp * (1.0 - s)
    for yi in prange(n):
        if use_masky == 1 and masky[yi] == 0:
            continue
        y = pos[yi]
        fy = fv[yi]
        acc = 0.0
        npair = 0
        for xi in range(n):
            if use_maskx == 1 and maskx[xi] == 0:
                continue
            if xi == yi:
                if has_slope == 1:
                    # the ball stays inside the center-symmetric cell: mu = 2 u w
                    half = 0.5 * (cbr[xi] - cbl[xi])
                    acc += _pow(abs(sl[xi]), e) * half**expo / kp
                continue
            d = abs(pos[xi] - y)
            anchor = y if anchor_y == 1 else pos[xi]
            mu = interval_mu(anchor, d, piece_bounds, piece_prefix, piece_weights)
            te = _pow(abs(fv[xi] - fy) / d, e)
            acc += mass[xi] * te * (1.0 - s) * d**expo / mu
            npair += 1
        inner[yi] = acc
        pairs[yi] = npair
        diag[yi] = 1


@njit(cache=True)
def interval_mu(c, r, piece_bounds, piece_prefix, piece_weights):
    return prefix_at(c + r, piece_bounds, piece_prefix, piece_weights) - prefix_at(
        c - r, piece_bounds, piece_prefix, piece_weights
    )


@njit(cache=True)
def _phi_scalar(t, kind, a, b, knots, vals):
    # kind 0: step with threshold a, height b
    # kind 1: clamp b * min(t^a, 1)
    # kind 2: piecewise-linear table, 0 below the first knot, flat after the last
    if kind == 0:
        return b if t > a else 0.0
    if kind == 1:
        u = t**a
        if u > 1.0:
            u = 1.0
        return b * u
    if t < knots[0]:
        return 0.0
    if t >= knots[-1]:
        return vals[-1]
    k = np.searchsorted(knots, t, side="right") - 1
    w = (t - knots[k]) / (knots[k + 1] - knots[k])
    return vals[k] * (1.0 - w) + vals[k + 1] * w


@njit(cache=True, parallel=True)
def lambda_inner_1d(
    pos, fv, mass, maskx, masky, use_maskx, use_masky,
    piece_bounds, piece_prefix, piece_weights,
    delta, kp, big_q, norm_mode, phi_kind, phi_a, phi_b, phi_knots, phi_vals,
    inner,
):
    """Threshold functional: delta^kp phi(|df|/delta) / (norm * d^kp) summed over pairs.

    norm_mode 0: norm = d^big_q (power kernel)
              1: norm = mu(B(y, d));  2: norm = mu(B(x, d))
    The step profile gets a dedicated branch-light path."""
    n = pos.shape[0]
    expo = big_q + kp
    for yi in prange(n):
        if use_masky == 1 and masky[yi] == 0:
            continue
        y = pos[yi]
        fy = fv[yi]
        acc = 0.0
        coef = delta**kp * phi_b
        if phi_kind == 0 and norm_mode == 0 and use_maskx == 0:
            thr_abs = phi_a * delta
            if expo == 2.0:
                for xi in range(n):
                    if xi == yi:
                        continue
                    if abs(fv[xi] - fy) <= thr_abs:
                        continue
                    d = pos[xi] - y
                    acc += mass[xi] * coef / (d * d)
            else:
                for xi in range(n):
                    if xi == yi:
                        continue
                    if abs(fv[xi] - fy) <= thr_abs:
                        continue
                    d = abs(pos[xi] - y)
                    acc += mass[xi] * coef / d**expo
        else:
            dkp = delta**kp
            for xi in range(n):
                if xi == yi:
                    continue
                if use_maskx == 1 and maskx[xi] == 0:
                    continue
                ph = _phi_scalar(
                    abs(fv[xi] - fy) / delta, phi_kind, phi_a, phi_b, phi_knots, phi_vals
                )
                if ph == 0.0:
                    continue
                d = abs(pos[xi] - y)
                if norm_mode == 0:
                    norm = d**expo
                else:
                    anchor = y if norm_mode == 1 else pos[xi]
                    norm = (
                        interval_mu(anchor, d, piece_bounds, piece_prefix, piece_weights)
                        * d**kp
                    )
                acc += mass[xi] * dkp * ph / norm
        inner[yi] = acc


# ---------------------------------------------------------------------------
# 2D kernels (regular grid on the unit square, density 1)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rect_dist2(cx, cy, x0, x1, y0, y1):
    dx_min = max(max(x0 - cx, cx - x1), 0.0)
    dy_min = max(max(y0 - cy, cy - y1), 0.0)
    dx_max = max(abs(cx - x0), abs(cx - x1))
    dy_max = max(abs(cy - y0), abs(cy - y1))
    return dx_min * dx_min + dy_min * dy_min, dx_max * dx_max + dy_max * dy_max


@njit(cache=True, parallel=True)
def mu_ball_grid(nx, ny, r, out):
    """mu(B(node, r) ∩ unit square) for every grid node."""
    hx = 1.0 / nx
    hy = 1.0 / ny
    for iy in prange(ny):
        cy = (iy + 0.5) * hy
        for ix in range(nx):
            cx = (ix + 0.5) * hx
            out[iy * nx + ix] = disc_rect_area(cx, cy, r, 0.0, 1.0, 0.0, 1.0)


@njit(cache=True, parallel=True)
def radial_inner_2d(
    fv, nx, ny, maskx, masky, use_maskx, use_masky,
    tb, tv, e, mu_b, anchor_y, use_mu, rq, inner, pairs,
):
    """Radial-profile kernel on the grid with exact ring clipping.

    use_mu = 1 marks the window families: tv is then the plain indicator ring
    and the 1/mu(B(anchor, r)) factor comes from mu_b; rq is the (d/r)^q
    prefactor exponent. The diagonal cell is skipped (weight O((h/R)^2))."""
    hx = 1.0 / nx
    hy = 1.0 / ny
    cell_area = hx * hy
    rmax = tb[tb.shape[0] - 1]
    nring = tv.shape[0]
    n = nx * ny
    for yi in prange(n):
        if use_masky == 1 and masky[yi] == 0:
            continue
        iy = yi // nx
        ix = yi - iy * nx
        cy = (iy + 0.5) * hy
        cx = (ix + 0.5) * hx
        fy = fv[yi]
        acc = 0.0
        npair = 0
        jy0 = max(0, int(np.floor((cy - rmax) / hy)))
        jy1 = min(ny - 1, int(np.floor((cy + rmax) / hy)))
        jx0 = max(0, int(np.floor((cx - rmax) / hx)))
        jx1 = min(nx - 1, int(np.floor((cx + rmax) / hx)))
        for jy in range(jy0, jy1 + 1):
            y0 = jy * hy
            y1 = y0 + hy
            py = (jy + 0.5) * hy
            dy = py - cy
            for jx in range(jx0, jx1 + 1):
                xi = jy * nx + jx
                if xi == yi:
                    continue
                if use_maskx == 1 and maskx[xi] == 0:
                    continue
                x0 = jx * hx
                x1 = x0 + hx
                px = (jx + 0.5) * hx
                dmin2, dmax2 = _rect_dist2(cx, cy, x0, x1, y0, y1)
                if dmin2 >= rmax * rmax:
                    continue
                dx = px - cx
                d = np.sqrt(dx * dx + dy * dy)
                te = _pow(abs(fv[xi] - fy) / d, e)
                if rq != 0.0:
                    te *= _pow(d / rmax, rq)
                wgt = 0.0
                for k in range(nring):
                    t0 = tb[k]
                    t1 = tb[k + 1]
                    if dmin2 >= t1 * t1 or dmax2 <= t0 * t0:
                        continue
                    if dmin2 >= t0 * t0 and dmax2 <= t1 * t1:
                        wgt += tv[k] * cell_area
                    else:
                        a1 = disc_rect_area(cx, cy, t1, x0, x1, y0, y1)
                        a0 = disc_rect_area(cx, cy, t0, x0, x1, y0, y1) if t0 > 0.0 else 0.0
                        wgt += tv[k] * (a1 - a0)
                if wgt == 0.0:
                    continue
                if use_mu == 1:
                    wgt /= mu_b[yi] if anchor_y == 1 else mu_b[xi]
                acc += wgt * te
                npair += 1
        inner[yi] = acc
        pairs[yi] = npair


@njit(cache=True, parallel=True)
def lambda_pow_2d(
    fv, nx, ny, maskx, masky, use_maskx, use_masky,
    delta, kp, big_q, phi_kind, phi_a, phi_b, phi_knots, phi_vals,
    inner,
):
    """Threshold functional with the power kernel delta^kp / d^{Q+kp} on the grid."""
    hx = 1.0 / nx
    hy = 1.0 / ny
    cell_area = hx * hy
    n = nx * ny
    expo = big_q + kp
    for yi in prange(n):
        if use_masky == 1 and masky[yi] == 0:
            continue
        iy = yi // nx
        ix = yi - iy * nx
        cy = (iy + 0.5) * hy
        cx = (ix + 0.5) * hx
        fy = fv[yi]
        acc = 0.0
        coef = delta**kp * phi_b
        if phi_kind == 0 and use_maskx == 0:
            thr_abs = phi_a * delta
            for xi in range(n):
                if xi == yi:
                    continue
                if abs(fv[xi] - fy) <= thr_abs:
                    continue
                jy = xi // nx
                jx = xi - jy * nx
                dx = (jx + 0.5) * hx - cx
                dy = (jy + 0.5) * hy - cy
                d2 = dx * dx + dy * dy
                if expo == 3.0:
                    norm = d2 * np.sqrt(d2)
                else:
                    norm = d2 ** (0.5 * expo)
                acc += cell_area * coef / norm
        else:
            dkp = delta**kp
            for xi in range(n):
                if xi == yi:
                    continue
                if use_maskx == 1 and maskx[xi] == 0:
                    continue
                ph = _phi_scalar(
                    abs(fv[xi] - fy) / delta, phi_kind, phi_a, phi_b, phi_knots, phi_vals
                )
                if ph == 0.0:
                    continue
                jy = xi // nx
                jx = xi - jy * nx
                dx = (jx + 0.5) * hx - cx
                dy = (jy + 0.5) * hy - cy
                d = np.sqrt(dx * dx + dy * dy)
                acc += cell_area * dkp * ph / d**expo
        inner[yi] = acc


# ---------------------------------------------------------------------------
# exact segment quadrature for 1D piecewise-linear functions
# ---------------------------------------------------------------------------


@njit(cache=True)
def _seg_piece_integral(A, S, ua, ub, e_int, binom):
    """integral over [ua, ub] of |A + S u|^e / u^e du, for integer e >= 1.

    The integrand's sign pattern is resolved by splitting at the root of
    A + S u; each signed piece expands binomially with closed-form power/log
    antiderivatives. Requires ua > 0 unless A == 0 (segment adjacent to the
    base point, where the quotient is exactly |S|)."""
    if ub <= ua:
        return 0.0
    if A == 0.0:
        return abs(S) ** e_int * (ub - ua)
    total = 0.0
    if S != 0.0:
        root = -A / S
        if ua < root < ub:
            total += _seg_signed(A, S, ua, root, e_int, binom)
            total += _seg_signed(A, S, root, ub, e_int, binom)
            return total
    return _seg_signed(A, S, ua, ub, e_int, binom)


@njit(cache=True)
def _seg_signed(A, S, lo, hi, e_int, binom):
    mid = 0.5 * (lo + hi)
    sigma = 1.0 if (A + S * mid) >= 0.0 else -1.0
    acc = 0.0
    for j in range(e_int + 1):
        coef = binom[j] * A ** (e_int - j) * S**j
        k = j - e_int  # power of u
        if k == -1:
            acc += coef * np.log(hi / lo)
        else:
            acc += coef * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
    return sigma**e_int * acc


@njit(cache=True)
def segment_inner(y, fy, pb, pv0, psl, pwt, tb, tv, e_int, binom, olo, ohi):
    """Exact inner integral of rho(|x-y|) (|f(x)-f(y)|/|x-y|)^e w(x) dx over
    the omega interval, for piecewise-linear f given by pieces."""
    acc = 0.0
    npieces = psl.shape[0]
    for k in range(tv.shape[0]):
        v = tv[k]
        if v == 0.0:
            continue
        t0 = tb[k]
        t1 = tb[k + 1]
        for side in range(2):
            if side == 0:
                lo = y + t0
                hi = y + t1
            else:
                lo = y - t1
                hi = y - t0
            lo = max(lo, olo)
            hi = min(hi, ohi)
            if hi <= lo:
                continue
            j0 = min(max(np.searchsorted(pb, lo, side="right") - 1, 0), npieces - 1)
            j1 = min(max(np.searchsorted(pb, hi, side="left") - 1, 0), npieces - 1)
            for j in range(j0, j1 + 1):
                a = max(pb[j], lo)
                b = min(pb[j + 1], hi)
                if b <= a:
                    continue
                s = psl[j]
                if side == 0:
                    ua = a - y
                    ub = b - y
                    fa = pv0[j] + s * (a - pb[j])
                    A = (fa - fy) - s * ua
                    Su = s
                else:
                    ua = y - b
                    ub = y - a
                    fb = pv0[j] + s * (b - pb[j])
                    A = (fb - fy) + s * ua
                    Su = -s
                if ua < 0.0:
                    ua = 0.0
                val = _seg_piece_integral(A, Su, ua, ub, e_int, binom)
                acc += v * pwt[j] * val
    return acc


@njit(cache=True, parallel=True)
def segment_phi_points(ys, gw, pb, pv0, psl, pwt, tb, tv, e_int, binom, invq, olo, ohi, out):
    """Per-point contributions gw * [inner(y)]^invq * w(y) for the outer quadrature."""
    npieces = psl.shape[0]
    for i in prange(ys.shape[0]):
        y = ys[i]
        j = min(max(np.searchsorted(pb, y, side="right") - 1, 0), npieces - 1)
        fy = pv0[j] + psl[j] * (y - pb[j])
        val = segment_inner(y, fy, pb, pv0, psl, pwt, tb, tv, e_int, binom, olo, ohi)
        out[i] = gw[i] * pwt[j] * val**invq
