import math

import numpy as np
import pytest

from bbmlab.cantor import build_cantor_model, cantor_space
from bbmlab.mollifier import (
    audit_minorize,
    dyadic_majorant,
    kernel_mass_bound,
    kernel_value,
    make_mollifier,
)
from bbmlab.space import ball_measure, build_lebesgue_interval, build_weighted_interval


@pytest.fixture(scope="module")
def space():
    return build_lebesgue_interval(1000)


class TestMakeAndEval:
    def test_flat_window_values(self, space):
        spec = make_mollifier("flat-window", r=0.1)
        yi = int(np.argmin(np.abs(space.nodes - 0.5)))
        xi = int(np.argmin(np.abs(space.nodes - 0.55)))
        assert kernel_value(spec, space, xi, yi) == pytest.approx(5.0, rel=1e-9)
        far = int(np.argmin(np.abs(space.nodes - 0.75)))
        assert kernel_value(spec, space, far, yi) == 0.0

    def test_window_power_value(self, space):
        spec = make_mollifier("window-power", r=0.1, q=2.0)
        yi = 500
        xi = 550  # exactly d = 0.05 on the uniform grid
        assert kernel_value(spec, space, xi, yi) == pytest.approx(1.25, rel=1e-9)

    def test_radial_profile(self, space):
        spec = make_mollifier("euclidean-radial", index=100, dim=1)
        assert spec.profile_values[0] == pytest.approx(100.0)
        yi, xi = 500, 503
        assert kernel_value(spec, space, xi, yi) == pytest.approx(100.0)

    def test_fractional_factor_and_singularity(self, space):
        spec = make_mollifier("fractional", s=0.9, p=1.0)
        yi = 500
        xi = 600
        d = abs(space.nodes[xi] - space.nodes[yi])
        expect = 0.1 * d ** (1.0 * 0.1) / ball_measure(space, space.nodes[yi], d)
        assert kernel_value(spec, space, xi, yi) == pytest.approx(expect, rel=1e-12)
        with pytest.raises(ValueError):
            kernel_value(spec, space, yi, yi)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_mollifier("flat-window", r=-0.1)
        with pytest.raises(ValueError):
            make_mollifier("fractional", s=1.5)
        with pytest.raises(ValueError):
            make_mollifier("euclidean-radial", bounds=[0.0, 0.1], values=[3.0], dim=1)
        with pytest.raises(ValueError):
            make_mollifier("gauss")
        # valid custom table: value 10 on [0, 0.1] integrates to 1 in 1D
        spec = make_mollifier("euclidean-radial", bounds=[0.0, 0.1], values=[10.0], dim=1)
        assert spec.support_radius == pytest.approx(0.1)

    def test_kernel_nonnegative(self, space):
        for spec in (
            make_mollifier("flat-window", r=0.05),
            make_mollifier("window-power", r=0.05, q=1.5),
            make_mollifier("euclidean-radial", index=50, dim=1),
        ):
            for xi in (100, 400, 900):
                assert kernel_value(spec, space, xi, 450) >= 0.0


class TestKernelMass:
    def test_flat_window_mass_exact(self, space):
        from bbmlab.functional import pair_inner
        from bbmlab.funcspace import sample_function

        f = sample_function(space, "affine", a=1.0)
        spec = make_mollifier("flat-window", r=0.05)
        inner, _, _ = pair_inner(space, f, 0.0, spec)
        assert np.allclose(inner, 1.0, atol=1e-13)

    def test_radial_mass_two_interior(self, space):
        from bbmlab.functional import pair_inner
        from bbmlab.funcspace import sample_function

        f = sample_function(space, "affine", a=1.0)
        spec = make_mollifier("euclidean-radial", index=50, dim=1)
        inner, _, _ = pair_inner(space, f, 0.0, spec)
        interior = (space.nodes > 0.05) & (space.nodes < 0.95)
        assert np.allclose(inner[interior], 2.0, atol=1e-12)
        # boundary node: window clipped to [0, node + r], mass 50 * (r + h/2)
        clipped = 50.0 * (0.02 + float(space.nodes[0]))
        assert inner[0] == pytest.approx(clipped, rel=1e-12)

    def test_mass_bound_helper(self, space):
        assert kernel_mass_bound(make_mollifier("flat-window", r=0.01), space) == 1.0


class TestMinorize:
    def test_flat_window_exactly_one(self, space):
        assert audit_minorize(make_mollifier("flat-window", r=0.01), space, p=1.0) == 1.0
        assert audit_minorize(make_mollifier("flat-window", r=0.01), space, p=2.7) == 1.0

    def test_window_power_cases(self, space):
        spec = make_mollifier("window-power", r=0.01, q=2.0)
        assert audit_minorize(spec, space, p=2.0) == 1.0
        assert audit_minorize(spec, space, p=3.0) == 1.0
        assert audit_minorize(spec, space, p=1.0) == math.inf

    def test_fractional_ladder(self, space):
        spec = make_mollifier("fractional", s=0.9, p=1.0)
        vals = [audit_minorize(spec, space, p=1.0, r_probe=rp) for rp in (0.05, 0.1, 0.2)]
        assert all(np.isfinite(v) for v in vals)
        # weak probe dependence near s = 1: r^{-p(1-s)} spans less than 30%
        assert max(vals) / min(vals) < 1.5


class TestDyadicMajorant:
    def test_window_power_bound_and_domination(self, space):
        q = 2.0
        spec = make_mollifier("window-power", r=0.01, q=q)
        maj = dyadic_majorant(spec, space)
        assert maj.violations == 0
        cd = maj.constants["C_d"]
        assert maj.total <= 2.0 ** (q + 1) * cd + 1e-12
        assert maj.tail(maj.j_max + 1) == 0.0
        tails = [maj.tail(m) for m in range(maj.j_max - 6, maj.j_max + 2)]
        assert all(tails[i] >= tails[i + 1] - 1e-15 for i in range(len(tails) - 1))

    def test_flat_window_bound(self, space):
        spec = make_mollifier("flat-window", r=0.01)
        maj = dyadic_majorant(spec, space)
        assert maj.violations == 0
        assert np.isfinite(maj.bound)
        assert maj.total <= maj.bound + 1e-12
        assert set(maj.constants) == {"C0", "sigma"}

    def test_on_weighted_spaces(self):
        cspace = cantor_space(build_cantor_model(2), 512)
        wspace = build_weighted_interval([0.0, 0.3, 1.0], [3.0, 1.0], 600)
        for sp in (cspace, wspace):
            for spec in (
                make_mollifier("flat-window", r=0.02),
                make_mollifier("window-power", r=0.02, q=1.0),
            ):
                maj = dyadic_majorant(spec, sp)
                assert maj.violations == 0
                assert np.isfinite(maj.total)

    def test_vanishing_tail_as_radius_shrinks(self, space):
        # tail(M) at fixed M dies once log2(r) < M
        M = -9
        sums = []
        for r in (0.05, 0.01, 0.001):
            maj = dyadic_majorant(make_mollifier("flat-window", r=r), space)
            sums.append(maj.tail(M))
        assert sums[-1] == 0.0  # log2(0.001) ~ -9.97 < -9
        assert sums[0] > 0.0

    def test_fractional_unsupported(self, space):
        with pytest.raises(ValueError):
            dyadic_majorant(make_mollifier("fractional", s=0.5), space)
