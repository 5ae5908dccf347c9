from fractions import Fraction

import numpy as np
import pytest

from bbmlab.cantor import (
    audit_cantor,
    build_cantor_model,
    bump_f0,
    cantor_function,
    cantor_space,
    cantor_values,
    limit_tv_report,
)
from bbmlab.funcspace import energy, sample_function
from bbmlab.space import ResolutionError


class TestModel:
    def test_depth_one(self):
        m = build_cantor_model(1)
        assert m.D_intervals[1] == [(Fraction(3, 8), Fraction(5, 8))]
        assert m.L[1] == Fraction(3, 4)
        assert m.A_intervals == [
            (Fraction(0), Fraction(3, 8)),
            (Fraction(5, 8), Fraction(1)),
        ]

    def test_depth_two(self):
        m = build_cantor_model(2)
        assert m.L[2] == Fraction(5, 8)
        assert len(m.A_intervals) == 4
        assert all(b - a == Fraction(5, 32) for a, b in m.A_intervals)

    @pytest.mark.parametrize("m", range(1, 13))
    def test_length_closed_form(self, m):
        model = build_cantor_model(m)
        assert model.L[m] - Fraction(1, 2) == Fraction(1, 2 ** (m + 1))

    def test_depth_bounds(self):
        with pytest.raises(ValueError):
            build_cantor_model(0)
        with pytest.raises(ValueError):
            build_cantor_model(25)


class TestSpace:
    def test_total_mass(self):
        model = build_cantor_model(1)
        space = cantor_space(model, 128)
        assert space.total_mass == pytest.approx(1.75, abs=1e-15)
        m10 = build_cantor_model(10)
        s10 = cantor_space(m10, int(np.ceil(8 * 4**10)))
        assert s10.total_mass == pytest.approx(1.0 + float(m10.L[10]), abs=1e-12)

    def test_resolution_refusal(self):
        model = build_cantor_model(5)
        with pytest.raises(ResolutionError):
            cantor_space(model, 1000)  # needs >= 8 * 4^5 = 8192

    def test_density_values(self):
        model = build_cantor_model(2)
        space = cantor_space(model, 256)
        assert set(np.unique(space.density)) == {1.0, 2.0}


class TestFunctions:
    def test_unit_integrals(self):
        model = build_cantor_model(6)
        fns = cantor_function(model)
        assert fns.integral_g() == 2 * model.L[6]
        for i in range(1, 7):
            assert fns.integral_g_i(i) == 1

    def test_f_endpoint_and_lipschitz(self):
        model = build_cantor_model(5)
        fns = cantor_function(model)
        assert fns.f(Fraction(1)) == 2 * model.L[5]
        # Lipschitz constant 2: check increments over a dyadic sample
        pts = [Fraction(k, 256) for k in range(257)]
        vals = [fns.f(x) for x in pts]
        for a, b in zip(pts[:-1], pts[1:]):
            assert abs(fns.f(b) - fns.f(a)) <= 2 * (b - a)
        assert all(v1 >= v0 for v0, v1 in zip(vals[:-1], vals[1:]))

    def test_uniform_approximation_bound(self):
        # against the depth-m stand-in the bound carries the truncation slack 2^{-m}
        model = build_cantor_model(6)
        fns = cantor_function(model)
        for i in (1, 2, 3):
            bound = Fraction(1, 2**i) + Fraction(1, 2**6)
            pts = [Fraction(k, 512) for k in range(513)]
            sup = max(abs(fns.f_i(i + 1, x) - fns.f(x)) for x in pts)
            assert sup <= bound

    def test_limit_agreement_off_components(self):
        from bbmlab.cantor import limit_f_off_level

        model = build_cantor_model(5)
        fns = cantor_function(model)
        for i in (1, 2, 3, 4):
            for gen in range(1, i + 1):
                for lo, hi in model.D_intervals[gen]:
                    mid = (lo + hi) / 2
                    for x in (lo, mid, hi):
                        assert fns.f_i(i + 1, x) == limit_f_off_level(model, i, x)

    def test_vectorized_values_match_fractions(self):
        model = build_cantor_model(4)
        fns = cantor_function(model)
        xs = np.linspace(0, 1, 173)
        vals, slope = cantor_values(model, xs)
        for x, v in zip(xs, vals):
            assert v == pytest.approx(float(fns.f(Fraction(x).limit_denominator(10**12))), abs=1e-9)


class TestAudit:
    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
    def test_full_audit_small_depths(self, m):
        rep = audit_cantor(build_cantor_model(m))
        assert rep.lengths_exact
        assert rep.component_count_exact
        assert rep.unit_integrals
        assert rep.uniform_bound
        assert rep.agree_off_A
        assert rep.per_component_mass

    @pytest.mark.parametrize("m", range(7, 13))
    def test_audit_deeper(self, m):
        rep = audit_cantor(build_cantor_model(m), check_depth=3)
        assert rep.lengths_exact
        assert rep.component_count_exact
        assert rep.unit_integrals
        assert rep.uniform_bound
        assert rep.agree_off_A
        assert rep.per_component_mass


class TestBumpAndTv:
    def test_bump_variation(self):
        model = build_cantor_model(1)
        space = cantor_space(model, 1024)
        f0 = bump_f0(space, amplitude=1.0)
        assert energy(space, f0, 1.0).value == pytest.approx(2.0, abs=1e-12)
        # vanishes on the surviving set
        in_a = space.density == 2.0
        assert np.all(f0.values[in_a] == 0.0)

    def test_limit_tv_report(self):
        model = build_cantor_model(8)
        rep = limit_tv_report(model)
        assert rep.approximant_infimum == 1.0
        assert rep.limit_envelope == 1.0
        assert rep.envelope_at_depth == pytest.approx(4 * float(model.L[8]), abs=1e-14)
        # finite-depth envelope sits above the limit value and decreases with depth
        vals = [limit_tv_report(build_cantor_model(m)).envelope_at_depth for m in (2, 4, 6, 8)]
        assert all(v0 > v1 > 2.0 for v0, v1 in zip(vals[:-1], vals[1:]))

    def test_envelope_energy_matches_report(self):
        model = build_cantor_model(4)
        space = cantor_space(model, 4096)
        f = sample_function(space, "cantor-primitive", model=model)
        assert energy(space, f, 1.0).value == pytest.approx(
            limit_tv_report(model).envelope_at_depth, abs=1e-12
        )
