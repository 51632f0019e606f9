import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from condapproval.errors import QuadratureError
from condapproval.quadrature import gk15, integrate


class TestPanel:
    @pytest.mark.parametrize("k", range(0, 22))
    def test_polynomial_exactness(self, k):
        # K15 is exact to degree 22 on one panel
        value, _ = gk15(lambda x: x**k, 0.0, 1.0)
        assert value == pytest.approx(1 / (k + 1), rel=1e-14)

    def test_gauss_part_exact_to_13(self):
        _, err = gk15(lambda x: x**13, -1.0, 2.0)
        assert err < 1e-12


class TestAdaptive:
    def test_normal_mass(self):
        dens = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        value, err = integrate(dens, -10, 10)
        assert value == pytest.approx(1.0, abs=1e-12)
        assert err <= 1e-9

    @given(st.floats(0.01, 0.99))
    def test_step_function_with_breakpoint(self, cut):
        value, err = integrate(lambda x: 1.0 if x > cut else 0.0, 0.0, 1.0, points=[cut])
        assert value == pytest.approx(1 - cut, abs=1e-12)
        assert err == 0.0

    def test_step_function_found_by_bisection(self):
        # 0.3 sits between nodes of the first panel, so the jump is visible
        value, _ = integrate(lambda x: 1.0 if x > 0.3 else 0.0, 0.0, 1.0)
        assert value == pytest.approx(0.7, abs=1e-8)

    def test_breakpoints_outside_range_ignored(self):
        assert integrate(math.cos, 0.0, 1.0, points=[-1.0, 0.0, 2.0])[0] == pytest.approx(math.sin(1.0), abs=1e-14)

    def test_reversed_limits(self):
        assert integrate(math.sin, math.pi, 0.0)[0] == pytest.approx(-2.0, abs=1e-12)

    def test_empty(self):
        assert integrate(math.exp, 1.0, 1.0) == (0.0, 0.0)

    def test_peaked(self):
        value, _ = integrate(lambda x: 1e-3 / (x * x + 1e-6), -1.0, 1.0)
        assert value == pytest.approx(2 * math.atan(1e3), abs=1e-9)

    def test_failure_carries_diagnostics(self):
        with pytest.raises(QuadratureError) as info:
            integrate(lambda x: 1 / math.sqrt(abs(x)) if x else 0.0, -1.0, 1.0, tol=1e-14, max_intervals=50)
        assert info.value.intervals >= 50
        assert math.isfinite(info.value.estimate)

    def test_infinite_limits_rejected(self):
        with pytest.raises(QuadratureError):
            integrate(math.exp, 0.0, math.inf)
