import numpy as np
import pytest
from scipy.integrate import quad

from belljump.quadrature import (
    CeilingExceeded,
    QuadratureError,
    adaptive_simpson,
    composite_simpson,
    partial_panel_integral,
)


def test_matches_scipy_quad_on_vector_integrand():
    f = lambda t: np.stack([np.sin(3 * t) ** 2, np.exp(-t) * np.cos(7 * t), 1 / (1.01 - np.cos(t))], axis=-1)
    panels = adaptive_simpson(f, np.linspace(0, 2, 5), rel_tol=1e-11, abs_tol=1e-14)
    ref = [quad(lambda s, i=i: f(np.array([s]))[0, i], 0, 2, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
           for i in range(3)]
    np.testing.assert_allclose(panels.total(), ref, rtol=1e-9)


def test_log_singularity_near_end():
    # integral of tan(s/2) on [0, u] is -2 log cos(u/2)
    u = np.pi - 1e-6
    panels = adaptive_simpson(lambda t: np.tan(t / 2), [0.0, u], rel_tol=1e-10, abs_tol=1e-13)
    assert panels.total()[0] == pytest.approx(-2 * np.log(np.cos(u / 2)), rel=1e-8)


def test_mask_zeroes_components():
    panels = adaptive_simpson(lambda t: np.stack([t, t], -1), [0.0, 1.0, 2.0],
                              mask=np.array([[True, False], [False, False]]))
    np.testing.assert_allclose(panels.total(), [1.5, 2.0], rtol=1e-12)


def test_ceiling_and_panel_budget():
    with pytest.raises(CeilingExceeded):
        adaptive_simpson(lambda t: 1 / (1 - t) ** 2, [0.0, 1 - 1e-6], ceiling=700.0)
    with pytest.raises(QuadratureError) as err:
        adaptive_simpson(lambda t: np.sin(1 / t), [1e-6, 1.0], rel_tol=1e-14, abs_tol=1e-16, max_panels=64)
    assert err.value.interval is not None


def test_partial_panel_integral_exact_for_quadratics():
    a, b, c = 0.3, -1.2, 2.5
    q = lambda s: a + b * s + c * s * s
    h = 0.7
    for s in (0.0, 0.25, 0.6, 1.0):
        exact = h * (a * s + b * s * s / 2 + c * s**3 / 3)
        assert partial_panel_integral(q(0), q(0.5), q(1), h, s) == pytest.approx(exact, abs=1e-15)


def test_composite_simpson():
    t = np.linspace(0, np.pi, 101)
    assert composite_simpson(np.sin(t), 0, np.pi) == pytest.approx(2.0, abs=1e-7)
    with pytest.raises(ValueError):
        composite_simpson(np.ones(4), 0, 1)
