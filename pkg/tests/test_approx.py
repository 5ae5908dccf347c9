import numpy as np
import pytest

from bbmlab.approx import build_cover, build_pou, discrete_convolution, lip_chain_report
from bbmlab.cantor import build_cantor_model, cantor_space
from bbmlab.funcspace import sample_function
from bbmlab.space import build_lebesgue_interval


@pytest.fixture(scope="module")
def space():
    return build_lebesgue_interval(4000)


@pytest.fixture(scope="module")
def cover(space):
    return build_cover(space, (0.2, 0.8), s=0.01)


@pytest.fixture(scope="module")
def pou(space, cover):
    return build_pou(space, cover)


class TestCover:
    def test_covering_property(self, space, cover):
        pos = space.nodes
        centers = pos[cover.centers]
        inflated = np.nonzero(cover.inflated_mask)[0]
        for i in inflated:
            assert np.min(np.abs(centers - pos[i])) < cover.scale

    def test_multiplicity_bound(self, cover):
        assert cover.multiplicity <= 11
        assert cover.discarded == 0

    def test_scale_validation(self, space):
        with pytest.raises(ValueError):
            build_cover(space, (0.2, 0.8), s=0.2)
        with pytest.raises(ValueError):
            build_cover(space, (0.2, 0.8), s=0.05, ambient=(0.15, 0.85))

    def test_whole_space(self, space):
        c = build_cover(space, (0.0, 1.0), s=0.02)
        assert c.n_balls >= 40
        assert c.inflated_mask.all()

    def test_separation(self, space, cover):
        centers = np.sort(space.nodes[cover.centers])
        assert np.min(np.diff(centers)) >= cover.scale - 1e-15


class TestPartitionOfUnity:
    def test_sums_to_one(self, space, cover, pou):
        vals = pou.bump_values(space)
        total = vals.sum(axis=0)
        on_u = cover.inflated_mask
        assert np.max(np.abs(total[on_u] - 1.0)) < 1e-12
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0 + 1e-15)

    def test_support_in_double_balls(self, space, cover, pou):
        vals = pou.bump_values(space)
        for j, i in enumerate(cover.centers):
            outside = np.abs(space.nodes - space.nodes[i]) >= 2 * cover.scale
            assert np.all(vals[j][outside] == 0.0)

    def test_bump_count_per_node(self, space, cover, pou):
        vals = pou.bump_values(space)
        support_counts = (vals > 0).sum(axis=0)
        interior = (space.nodes > 0.25) & (space.nodes < 0.75)
        assert support_counts[interior].max() <= 4

    def test_single_ball_cover(self):
        tiny = build_lebesgue_interval(200)
        c = build_cover(tiny, (0.49, 0.51), s=0.05)
        p = build_pou(tiny, c)
        vals = p.bump_values(tiny)
        u = tiny.nodes[(tiny.nodes >= 0.49) & (tiny.nodes <= 0.51)]
        sel = (tiny.nodes >= 0.49) & (tiny.nodes <= 0.51)
        assert np.allclose(vals.sum(axis=0)[sel], 1.0, atol=1e-15)

    def test_lip_const_scale(self, space, cover, pou):
        # tents of half-width 2s normalized by a sum >= 1/2: measured slope O(1/s)
        assert pou.lip_const <= 8.0 / cover.scale


class TestDiscreteConvolution:
    def test_reproduces_constants(self, space, cover, pou):
        f = sample_function(space, "custom", f=lambda x: 0 * x + 3.25)
        h = discrete_convolution(space, f, cover, pou)
        on_u = cover.inflated_mask
        assert np.max(np.abs(h.values[on_u] - 3.25)) < 1e-12

    def test_affine_error_bound(self, space, cover, pou):
        f = sample_function(space, "affine", a=1.0)
        h = discrete_convolution(space, f, cover, pou)
        u = cover.u_mask
        assert np.max(np.abs(h.values[u] - f.values[u])) <= cover.scale + 1e-12

    def test_linearity(self, space, cover, pou):
        f = sample_function(space, "sin")
        g = sample_function(space, "affine", a=0.5)
        import dataclasses

        combo = dataclasses.replace(f, values=2.0 * f.values + 3.0 * g.values)
        hf = discrete_convolution(space, f, cover, pou).values
        hg = discrete_convolution(space, g, cover, pou).values
        hc = discrete_convolution(space, combo, cover, pou).values
        assert np.allclose(hc, 2.0 * hf + 3.0 * hg, atol=1e-12)

    def test_l1_convergence_ladder(self):
        model = build_cantor_model(2)
        space = cantor_space(model, 2048)
        f = sample_function(space, "cantor-primitive", model=model)
        errs = []
        for s in (0.02, 0.01, 0.005, 0.0025):
            c = build_cover(space, (0.0, 1.0), s=s)
            p = build_pou(space, c)
            h = discrete_convolution(space, f, c, p)
            u = c.u_mask
            errs.append(float(np.sum(np.abs(h.values - f.values)[u] * space.cell_mass[u])))
        assert all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
        assert errs[-1] < 0.01


class TestLipChain:
    def test_constant_function(self, space, cover, pou):
        f = sample_function(space, "custom", f=lambda x: 0 * x + 1.0)
        rep = lip_chain_report(space, f, cover, pou, p=1.0, q=2.0, pair_budget=2000)
        assert rep.lhs <= 1e-10  # last-ulp wiggles of the exact constant
        assert rep.pair_violations == 0

    def test_affine(self, space, cover, pou):
        f = sample_function(space, "affine", a=1.0)
        rep = lip_chain_report(space, f, cover, pou, p=1.0, q=2.0, pair_budget=4000)
        # lhs is about the measure of U; the chain bound holds with huge slack
        assert rep.lhs == pytest.approx(0.6, rel=0.1)
        assert rep.lhs <= rep.rhs_pointwise <= rep.rhs_functional
        assert rep.pair_violations == 0
        assert rep.slack_functional > 1e3

    def test_cantor_band(self):
        model = build_cantor_model(2)
        space = cantor_space(model, 2048)
        f = sample_function(space, "cantor-primitive", model=model)
        lhs_vals = []
        for s in (0.02, 0.01, 0.005):
            c = build_cover(space, (0.1, 0.9), s=s)
            p = build_pou(space, c)
            rep = lip_chain_report(space, f, c, p, p=1.0, q=2.0, pair_budget=3000)
            assert rep.pair_violations == 0
            lhs_vals.append(rep.lhs)
        assert all(1.0 <= v <= 4.0 for v in lhs_vals)
