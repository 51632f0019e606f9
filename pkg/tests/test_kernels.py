import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from condapproval import _kernels, evidence
from condapproval._accel import NUMBA_AVAILABLE, resolve_backend
from condapproval.specialfn import _ndtri_upper

needs_numba = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
Z_ALPHA = _ndtri_upper(0.025)


def _cell_args(method, w=(1.0, 1.0)):
    return dict(
        n1=84.06, delta2=0.25 / math.sqrt(2), z_power=stats.norm.ppf(0.9), shrinkage=0.0, fraction=0.5,
        method=method, w1=w[0], w2=w[1], c_h=evidence.harmonic_critical_value(0.025**2), z_alpha=Z_ALPHA,
    )


class TestBackendSelection:
    def test_explicit_numpy(self):
        assert resolve_backend("numpy") == "numpy"

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            resolve_backend("cuda")


@needs_numba
class TestBackendsAgree:
    def test_truncnorm(self, rng):
        u = rng.random(50_000)
        a = _kernels.truncnorm_z1(u, -0.5, 2.5, "numba")
        b = _kernels.truncnorm_z1(u, -0.5, 2.5, "numpy")
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_deep_truncation(self, rng):
        # S1: truncation point ~2 sd above the mean, plus a far tail case
        u = rng.random(20_000)
        for a in (Z_ALPHA, 8.0):
            np.testing.assert_allclose(
                _kernels.truncnorm_z1(u, a, 0.0, "numba"), _kernels.truncnorm_z1(u, a, 0.0, "numpy"), atol=1e-10
            )

    def test_normal(self, rng):
        u = rng.random(50_000)
        np.testing.assert_allclose(
            _kernels.normal_from_uniform(u, "numba"), _kernels.normal_from_uniform(u, "numpy"), atol=1e-12
        )

    @pytest.mark.parametrize("method,w", [(_kernels.TWO_TRIALS, (1, 1)), (_kernels.HARMONIC, (1, 1)), (_kernels.HARMONIC, (3, 2))])
    def test_cell(self, rng, method, w):
        n = 20_000
        z1 = _kernels.truncnorm_z1(rng.random(n), Z_ALPHA - 2.0, 2.0, "numpy")
        e1, e2 = rng.standard_normal(n), rng.standard_normal(n)
        a = _kernels.simulate_cell(z1, e1, e2, backend="numba", **_cell_args(method, w))
        b = _kernels.simulate_cell(z1, e1, e2, backend="numpy", **_cell_args(method, w))
        for x, y in zip(a, b):
            if x.dtype == bool:
                # significance can only flip at a numerical tie
                assert np.count_nonzero(x != y) <= 1
            else:
                np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12, equal_nan=True)


class TestTruncnormKernel:
    @given(st.floats(0.001, 0.999), st.floats(-3, 6), st.floats(-2, 4))
    def test_support_and_cdf(self, u, a, mean):
        z = float(_kernels.truncnorm_z1(np.array([u]), a, mean, "numpy")[0])
        assert z >= mean + a - 1e-12
        # the returned point has truncated-cdf value u
        cdf = (stats.norm.sf(a) - stats.norm.sf(z - mean)) / stats.norm.sf(a)
        assert cdf == pytest.approx(u, abs=1e-8)

    def test_cell_support(self, rng):
        n = 5000
        z1 = _kernels.truncnorm_z1(rng.random(n), Z_ALPHA, 0.0, "numpy")
        target, c, n2, n2i, *_ = _kernels.simulate_cell(
            z1, rng.standard_normal(n), rng.standard_normal(n), backend="numpy", **_cell_args(_kernels.HARMONIC)
        )
        ok = n2 > 0
        assert ok.all()
        assert (c[ok] > 0).all() and (n2[ok] >= 1).all()
        assert ((n2i >= 1) & (n2i < n2)).all()
        assert np.array_equal(n2, np.ceil(c * 84.06 - 1e-9).astype(n2.dtype))
