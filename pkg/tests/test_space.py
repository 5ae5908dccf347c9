import numpy as np
import pytest

from bbmlab.geometry import disc_rect_area, disc_unit_square_area, kahan_sum
from bbmlab.space import (
    audit_ahlfors,
    audit_doubling,
    audit_upper_mass_bound,
    ball_measure,
    ball_measures,
    build_lebesgue_interval,
    build_planar_grid,
    build_weighted_interval,
    neighbors_within,
)


def brute_disc_rect(cx, cy, r, x0, x1, y0, y1, n=1500):
    xs = np.linspace(x0, x1, n + 1)[:-1] + (x1 - x0) / (2 * n)
    ys = np.linspace(y0, y1, n + 1)[:-1] + (y1 - y0) / (2 * n)
    gx, gy = np.meshgrid(xs, ys)
    return ((gx - cx) ** 2 + (gy - cy) ** 2 < r * r).mean() * (x1 - x0) * (y1 - y0)


class TestGeometry:
    def test_disc_rect_against_brute_quadrature(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            cx, cy = rng.uniform(-0.4, 1.4, 2)
            r = rng.uniform(0.03, 0.9)
            exact = disc_rect_area(cx, cy, r, 0.0, 1.0, 0.0, 1.0)
            approx = brute_disc_rect(cx, cy, r, 0, 1, 0, 1)
            assert exact == pytest.approx(approx, abs=2e-5)

    def test_disc_special_positions(self):
        assert disc_unit_square_area(0.5, 0.5, 0.25) == pytest.approx(np.pi * 0.0625, rel=1e-14)
        assert disc_unit_square_area(0.0, 0.0, 0.3) == pytest.approx(np.pi * 0.09 / 4, rel=1e-14)
        assert disc_unit_square_area(0.0, 0.5, 0.2) == pytest.approx(np.pi * 0.04 / 2, rel=1e-14)
        assert disc_unit_square_area(-1.0, -1.0, 0.5) == 0.0

    def test_kahan_sum_matches_exact(self):
        vals = np.array([1e16, 1.0, -1e16, 1.0])
        assert kahan_sum(vals) == 2.0


class TestBuilders:
    def test_unit_interval_mass(self):
        space = build_lebesgue_interval(1000)
        assert space.total_mass == pytest.approx(1.0, abs=1e-15)
        assert np.all(space.cell_mass > 0)
        assert np.all(np.diff(space.nodes) > 0)

    def test_weighted_interval_piecewise_mass(self):
        # density 2 on [0, 3/8] and [5/8, 1], density 1 on the middle
        space = build_weighted_interval(
            [0.0, 0.375, 0.625, 1.0], [2.0, 1.0, 2.0], 500
        )
        assert space.total_mass == pytest.approx(2 * 0.75 + 0.25, abs=1e-15)
        # exact cell/density agreement
        assert np.allclose(space.cell_mass, space.density * np.diff(space.cell_bounds))

    def test_builder_errors(self):
        with pytest.raises(ValueError):
            build_weighted_interval([0.0, 0.5, 0.4, 1.0], [1, 1, 1], 10)
        with pytest.raises(ValueError):
            build_weighted_interval([0.0, 1.0], [-1.0], 10)
        with pytest.raises(ValueError):
            build_weighted_interval([0.0, 1.0], [1.0], 1)
        with pytest.raises(ValueError):
            build_weighted_interval([0.1, 1.0], [1.0], 10)

    def test_planar_grid(self):
        g = build_planar_grid(100, 50)
        assert g.total_mass == 1.0
        assert g.cell_mass[0] == pytest.approx(2e-4, rel=1e-14)
        small = build_planar_grid(2, 2)
        assert small.n_nodes == 4
        assert np.all(small.cell_mass == 0.25)
        with pytest.raises(ValueError):
            build_planar_grid(1, 5)


class TestBallMeasure:
    def test_interior_and_boundary(self):
        space = build_lebesgue_interval(1000)
        assert ball_measure(space, 0.5, 0.1) == pytest.approx(0.2, abs=1e-15)
        assert ball_measure(space, 0.0, 0.1) == pytest.approx(0.1, abs=1e-15)

    def test_cantor_depth1_middle_ball(self):
        # the ball B(0.5, 1/8) sits exactly on the removed middle interval, w = 1
        from bbmlab.cantor import build_cantor_model, cantor_space

        space = cantor_space(build_cantor_model(1), 200)
        assert ball_measure(space, 0.5, 0.125) == pytest.approx(0.25, abs=1e-15)

    def test_grid_independence(self):
        coarse = build_weighted_interval([0.0, 0.3, 1.0], [2.0, 0.5], 37)
        fine = build_weighted_interval([0.0, 0.3, 1.0], [2.0, 0.5], 4099)
        for c, r in [(0.1, 0.05), (0.3, 0.2), (0.9, 0.4)]:
            assert ball_measure(coarse, c, r) == ball_measure(fine, c, r)

    def test_monotone_and_continuous_in_r(self):
        space = build_weighted_interval([0.0, 0.25, 0.7, 1.0], [1.0, 3.0, 0.5], 100)
        radii = np.linspace(1e-4, 1.2, 400)
        vals = np.array([ball_measure(space, 0.4, float(r)) for r in radii])
        assert np.all(np.diff(vals) >= -1e-15)
        # piecewise-linear in r: increments bounded by max density * 2 dr
        assert np.max(np.diff(vals)) <= 2 * 3.0 * (radii[1] - radii[0]) + 1e-12

    def test_full_ball_is_total_mass(self):
        space = build_weighted_interval([0.0, 0.5, 1.0], [2.0, 1.0], 64)
        assert ball_measure(space, 0.5, 2.0) == pytest.approx(space.total_mass, abs=1e-15)

    def test_interior_disc_area_is_pi_r2(self):
        g = build_planar_grid(16, 16)
        r = 0.2
        assert ball_measure(g, (0.5, 0.5), r) == pytest.approx(np.pi * r * r, rel=1e-12)

    def test_radius_must_be_positive(self):
        space = build_lebesgue_interval(10)
        with pytest.raises(ValueError):
            ball_measure(space, 0.5, 0.0)


class TestNeighbors:
    def brute(self, space, center, r):
        if space.kind == "interval":
            d = np.abs(space.nodes - center)
        else:
            d = np.hypot(space.nodes[:, 0] - center[0], space.nodes[:, 1] - center[1])
        return np.nonzero(d < r)[0]

    def test_exactness_1d(self):
        space = build_weighted_interval([0.0, 0.3, 1.0], [1.0, 2.0], 777)
        for c, r in [(0.5, 0.01), (0.0, 0.2), (0.3, 0.05), (0.99, 0.3)]:
            got = neighbors_within(space, c, r)
            expect = self.brute(space, c, r)
            assert np.array_equal(got, expect)

    def test_exactness_2d(self):
        g = build_planar_grid(23, 17)
        for c, r in [((0.5, 0.5), 0.11), ((0.0, 1.0), 0.3), ((0.77, 0.13), 0.04)]:
            assert np.array_equal(neighbors_within(g, c, r), self.brute(g, c, r))

    def test_fine_grid_window_count(self):
        # h = 1e-3 cells, open ball of radius 1e-2 around an interior node
        space = build_lebesgue_interval(1000)
        center = float(space.nodes[500])
        got = neighbors_within(space, center, 1e-2)
        assert np.array_equal(got, self.brute(space, center, 1e-2))
        assert got.size - 1 == 19  # neighbors excluding the center node itself

    def test_small_and_large_radii(self):
        space = build_lebesgue_interval(100)
        h = 1.0 / 100
        between = 0.5 * (space.nodes[50] + space.nodes[51])
        assert neighbors_within(space, float(between), h / 4).size == 0
        allnodes = neighbors_within(space, float(space.nodes[50]), 2.0)
        assert allnodes.size == space.n_nodes


class TestAudits:
    def test_doubling_lebesgue(self):
        space = build_lebesgue_interval(400)
        cd = audit_doubling(space)
        assert 1.0 <= cd <= 2.0 + 1e-12

    def test_doubling_cantor_and_grid(self):
        from bbmlab.cantor import build_cantor_model, cantor_space

        space = cantor_space(build_cantor_model(2), 256)
        assert audit_doubling(space) <= 4.0 + 1e-12
        grid = build_planar_grid(24, 24)
        assert audit_doubling(grid) <= 4.0 + 1e-12

    def test_doubling_scale_invariance(self):
        a = build_weighted_interval([0.0, 0.4, 1.0], [1.0, 3.0], 200)
        b = build_weighted_interval([0.0, 0.4, 1.0], [2.5, 7.5], 200)
        centers = np.linspace(0, 1, 17)
        radii = np.geomspace(0.01, 0.5, 9)
        assert audit_doubling(a, (centers, radii)) == pytest.approx(
            audit_doubling(b, (centers, radii)), rel=1e-12
        )

    def test_doubling_empty_sample(self):
        space = build_lebesgue_interval(64)
        with pytest.raises(ValueError):
            audit_doubling(space, ([], []))

    def test_mass_bound_fit_lebesgue(self):
        space = build_lebesgue_interval(512)
        fit = audit_upper_mass_bound(space)
        assert fit.residual == 0.0
        assert fit.sigma == pytest.approx(1.0, abs=0.05)
        assert fit.C0 <= 2.0 + 1e-9
        # envelope feasibility on a fresh sample
        centers = np.linspace(0.05, 0.95, 9)
        radii = np.geomspace(0.01, 0.25, 6)
        for r in radii:
            for R in radii:
                if r >= R:
                    continue
                mr = ball_measures(space, centers, float(r))
                mR = ball_measures(space, centers, float(R))
                assert np.all(mr / mR <= fit.C0 * (r / R) ** fit.sigma * (1 + 1e-9))

    def test_mass_bound_cantor_feasible(self):
        from bbmlab.cantor import build_cantor_model, cantor_space

        space = cantor_space(build_cantor_model(1), 128)
        fit = audit_upper_mass_bound(space)
        assert fit.residual == 0.0
        assert fit.C0 <= 4.0

    def test_ahlfors(self):
        space = build_lebesgue_interval(256)
        assert audit_ahlfors(space, 1.0) <= 2.0 + 1e-9
        grid = build_planar_grid(20, 20)
        assert audit_ahlfors(grid, 2.0) <= 4.01
        from bbmlab.cantor import build_cantor_model, cantor_space

        cs = cantor_space(build_cantor_model(1), 128)
        assert audit_ahlfors(cs, 1.0) <= 4.0 + 1e-9

    def test_ahlfors_rejects_small_q(self):
        with pytest.raises(ValueError):
            audit_ahlfors(build_lebesgue_interval(16), 0.5)
