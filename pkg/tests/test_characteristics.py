import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqflow import (CharacteristicPath, DomainError, characteristic_point,
                    s0_of_theta, verify_characteristic_odes)

R_EARTH = 6.37e6


class TestEquatorCrossingParameter:
    def test_zero_at_equator(self):
        assert s0_of_theta(0.0) == 0.0

    def test_frozen_value_at_strip_edge(self):
        # 0.5*ln((1+sin x)/(1-sin x)) at x = 0.016, evaluated with 40-digit
        # arithmetic.
        assert s0_of_theta(0.016) == pytest.approx(1.600068271036058e-2, abs=1e-9)

    def test_defining_identity(self):
        for th in (0.001, 0.008, 0.016, -0.01):
            assert np.tanh(s0_of_theta(th)) == pytest.approx(np.sin(th), abs=1e-16)

    @pytest.mark.parametrize("theta", [0.001, 0.008, 0.016])
    def test_round_trip_through_path_angle(self, theta):
        s0 = s0_of_theta(theta)
        _, th_back = characteristic_point(1.0, theta, s0)
        assert abs(th_back - theta) <= 1e-12

    def test_domain_error_at_pole(self):
        with pytest.raises(DomainError):
            s0_of_theta(np.pi / 2)

    @given(st.floats(min_value=1e-6, max_value=1.5))
    @settings(max_examples=50, deadline=None)
    def test_odd(self, theta):
        assert s0_of_theta(-theta) == -s0_of_theta(theta)

    @given(st.floats(min_value=-1.5, max_value=1.5 - 1e-3))
    @settings(max_examples=50, deadline=None)
    def test_strictly_increasing(self, theta):
        assert s0_of_theta(theta + 1e-3) > s0_of_theta(theta)


class TestClosedFormPath:
    def test_launch_point_on_equator(self):
        r, th = 6.3e6, 0.012
        rt, tt = characteristic_point(r, th, 0.0)
        assert rt == pytest.approx(r * np.cos(th), rel=1e-15)
        assert tt == 0.0

    @pytest.mark.parametrize("s", [-0.02, 0.01, 0.016])
    def test_conserved_product(self, s):
        r, th = R_EARTH, 0.013
        rt, tt = characteristic_point(r, th, s)
        assert rt * np.cos(tt) == pytest.approx(r * np.cos(th), rel=1e-12)

    def test_path_passes_through_its_anchor(self):
        r, th = R_EARTH, 0.016
        path = CharacteristicPath.through(r, th)
        rt, tt = path.point(path.s0)
        assert rt == pytest.approx(r, rel=1e-12)
        assert tt == pytest.approx(th, rel=1e-12)

    def test_hyperbolic_constants(self):
        path = CharacteristicPath.through(R_EARTH, 0.01)
        assert path.c1 == path.c2 == pytest.approx(R_EARTH * np.cos(0.01) / 2, rel=1e-15)
        assert np.tanh(path.s0) == pytest.approx(np.sin(0.01), abs=1e-16)

    @given(st.floats(min_value=-0.05, max_value=0.05),
           st.floats(min_value=0.5, max_value=1.5))
    @settings(max_examples=50, deadline=None)
    def test_invariant_everywhere(self, s, r):
        theta = 0.009
        path = CharacteristicPath.through(r, theta)
        assert path.invariant(s) == pytest.approx(r * np.cos(theta), rel=1e-12)

    def test_radial_second_derivative_equals_radius(self):
        # (r(s+h) - 2 r(s) + r(s-h))/h^2 - r(s) shrinks at second order.
        r, th, s = 1.0, 0.01, 0.004
        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            rp = characteristic_point(r, th, s + h)[0]
            r0 = characteristic_point(r, th, s)[0]
            rm = characteristic_point(r, th, s - h)[0]
            errs.append(abs((rp - 2 * r0 + rm) / h ** 2 - r0))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert min(orders) >= 1.9


class TestOdeVerification:
    def test_strip_edge_path_matches_integrator(self):
        s0 = s0_of_theta(0.016)
        dev = verify_characteristic_odes(R_EARTH, 0.016, (0.0, s0), tol=1e-12)
        assert dev <= 1e-8 * R_EARTH

    def test_angle_component_alone(self):
        # With unit launch radius the reported deviation bounds the angle
        # error of arcsin(tanh s) against its defining equation.
        dev = verify_characteristic_odes(1.0, 0.0, (0.0, 0.016), tol=1e-12)
        assert dev <= 1e-10

    def test_degenerate_span(self):
        assert verify_characteristic_odes(R_EARTH, 0.01, (0.0, 0.0)) == 0.0

    def test_negative_span(self):
        s0 = s0_of_theta(0.016)
        dev = verify_characteristic_odes(R_EARTH, 0.01, (0.0, -s0), tol=1e-12)
        assert dev <= 1e-8 * R_EARTH

    def test_invalid_launch_rejected(self):
        with pytest.raises(DomainError):
            verify_characteristic_odes(-1.0, 0.0, (0.0, 0.01))
