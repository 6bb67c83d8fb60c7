import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprbsim import (
    SearchSpec,
    SimParams,
    check_violations,
    lg_bound,
    maximize_S,
    min_gamma,
    s_value,
    smax_quantum,
)

unit_e = st.floats(-1.0, 1.0)


class TestSValue:
    def test_extremal_combination(self):
        assert s_value(-1, 1, -1, -1) == -4.0

    def test_quantum_angles(self):
        e = -math.sqrt(2) / 2
        assert abs(abs(s_value(e, -e, e, e)) - 2 * math.sqrt(2)) < 1e-12

    def test_zero(self):
        assert s_value(0, 0, 0, 0) == 0.0

    def test_input_validation(self):
        with pytest.raises(ValueError):
            s_value(1.5, 0, 0, 0)
        with pytest.raises(ValueError):
            s_value(0, 0, 0, -1.01)

    @given(unit_e, unit_e, unit_e, unit_e)
    def test_bounded_by_four(self, a, b, c, d):
        assert abs(s_value(a, b, c, d)) <= 4.0 + 1e-12


class TestLgBound:
    def test_unit_gamma_gives_two(self):
        assert lg_bound(1.0) == 2.0

    def test_three_quarters_meets_trivial_bound(self):
        assert abs(lg_bound(0.75) - 4.0) < 1e-12

    def test_half_gamma_vacuous(self):
        assert abs(lg_bound(0.5) - 8.0) < 1e-12

    def test_rejects_nonpositive_and_above_one(self):
        for bad in (0.0, -0.3, 1.2):
            with pytest.raises(ValueError):
                lg_bound(bad)

    @given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
    def test_strictly_decreasing(self, g1, g2):
        if g1 < g2:
            assert lg_bound(g1) > lg_bound(g2)


class TestCheckViolations:
    def test_ion_trap_arithmetic(self):
        flags = check_violations(2.25, 1.0)
        assert flags.chsh and flags.lg
        assert not flags.super_quantum

    def test_small_window_regime(self):
        flags = check_violations(2.83, 0.00127)
        assert flags.chsh and not flags.lg
        assert flags.super_quantum  # 2.83 just exceeds 2*sqrt(2) = 2.8284

    def test_classical_value(self):
        flags = check_violations(1.0, 1.0)
        assert not (flags.chsh or flags.lg or flags.super_quantum)

    def test_precondition(self):
        with pytest.raises(ValueError):
            check_violations(4.5, 1.0)


FAST = SearchSpec(theta_step=math.pi / 24)


class TestMaximizeS:
    def test_report_structure(self):
        p = SimParams(w_bins=8, t0_ratio=200.0, d=3.0, n_trials=10**5, seed=19)
        rep = maximize_S(p, FAST)
        assert abs(rep.s) <= 4.0
        assert rep.bound_trivial == 4.0 and rep.bound_chsh == 2.0
        assert abs(rep.bound_lg - (6.0 / rep.gamma_inf - 4.0)) < 1e-12
        assert 0.0 < rep.gamma_inf <= 1.0
        assert rep.stderr_s and rep.stderr_s > 0
        assert 0.0 <= rep.gamma_argmin <= math.pi
        for setting in (rep.quad.a, rep.quad.b, rep.quad.c, rep.quad.d):
            assert abs(float(setting.vec @ setting.vec) - 1.0) < 1e-12

    def test_degenerate_grid_rejected(self):
        p = SimParams(w_bins=1, t0_ratio=100.0, d=3.0, n_trials=1000, seed=1)
        with pytest.raises(ValueError):
            maximize_S(p, SearchSpec(theta_step=math.pi / 3))

    def test_interpolated_value_respects_curve_bound(self):
        # combination from any curve bounded by 1 stays within 4
        p = SimParams(w_bins=4, t0_ratio=50.0, d=3.0, n_trials=5 * 10**4, seed=23)
        rep = maximize_S(p, FAST)
        assert abs(rep.s) <= 4.0

    def test_not_decreasing_with_more_trials(self):
        base = SimParams(w_bins=16, t0_ratio=1000.0, d=3.0, n_trials=10**5, seed=29)
        small = maximize_S(base, FAST)
        big = maximize_S(replace(base, n_trials=10**6), FAST)
        sigma = math.hypot(small.stderr_s or 0.0, big.stderr_s or 0.0)
        assert big.s >= small.s - 3 * sigma

    def test_superquantum_exponent(self):
        p = SimParams(w_bins=1, t0_ratio=1000.0, d=5.0, n_trials=10**6, seed=16)
        rep = maximize_S(p)
        assert rep.s > smax_quantum().value
        assert rep.flags.super_quantum


class TestMinGamma:
    def test_argmin_near_right_angle(self):
        p = SimParams(w_bins=1, t0_ratio=1000.0, d=3.0, n_trials=10**6, seed=2)
        inf = min_gamma(p)
        assert abs(inf.gamma - 1.27e-3) <= 0.1 * 1.27e-3
        assert abs(inf.theta - math.pi / 2) < 0.35

    def test_ion_trap_operating_point(self):
        p = SimParams(w_bins=1, t0_ratio=1.025, d=3.0, n_trials=10**6, seed=2)
        inf = min_gamma(p)
        assert inf.gamma >= 0.87

    def test_grid_must_cover_range(self):
        p = SimParams(w_bins=1, t0_ratio=100.0, d=3.0, n_trials=1000, seed=1)
        with pytest.raises(ValueError):
            min_gamma(p, thetas=[0.5, 1.0, 1.5])

    def test_custom_grid_accepted(self):
        p = SimParams(w_bins=1, t0_ratio=50.0, d=3.0, n_trials=2 * 10**4, seed=3)
        inf = min_gamma(p, thetas=[0.0, math.pi / 4, math.pi / 2,
                                   3 * math.pi / 4, math.pi])
        assert 0.0 <= inf.gamma <= 1.0
