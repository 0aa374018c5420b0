import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls_blowup.fitting import (
    LOG_CORRECTED,
    POWER_LAW,
    FitError,
    cubic_spline,
    fit_log_corrected,
    fit_power_law,
    log_corrected_model,
)

SIGMA = np.linspace(1.1, 1.2, 9)


def pts(sigma, y):
    return np.column_stack([sigma, y])


class TestPowerLaw:
    def test_roundtrip(self):
        fit = fit_power_law(pts(SIGMA, 4.0 * (SIGMA - 1) ** 1.2))
        assert fit.model == POWER_LAW
        assert fit.coefficients[0] == pytest.approx(4.0, abs=1e-10)
        assert fit.exponent == pytest.approx(1.2, abs=1e-10)
        assert fit.residual_norm < 1e-12
        assert fit.window == (1.1, 1.2) and fit.n_points == 9

    @settings(max_examples=60, deadline=None)
    @given(
        c=st.floats(0.01, 100.0),
        alpha=st.floats(-2.0, 3.0),
        lam=st.floats(1e-3, 1e3),
        seed=st.integers(0, 2**16),
    )
    def test_scale_equivariant(self, c, alpha, lam, seed):
        rng = np.random.default_rng(seed)
        y = c * (SIGMA - 1) ** alpha * np.exp(0.05 * rng.standard_normal(SIGMA.size))
        base = fit_power_law(pts(SIGMA, y))
        scaled = fit_power_law(pts(SIGMA, lam * y))
        assert scaled.coefficients[0] == pytest.approx(lam * base.coefficients[0], rel=1e-9)
        assert scaled.exponent == pytest.approx(base.exponent, abs=1e-9)
        assert scaled.residual_norm == pytest.approx(base.residual_norm, rel=1e-6, abs=1e-12)

    def test_window(self):
        sigma = np.linspace(1.05, 1.5, 10)
        y = np.where(sigma <= 1.2, 2 * (sigma - 1) ** 0.5, 1.0)
        fit = fit_power_law(pts(sigma, y), window=(1.0, 1.2))
        assert fit.exponent == pytest.approx(0.5, abs=1e-12)
        assert fit.window[1] <= 1.2

    @pytest.mark.parametrize(
        "points",
        [
            pts(SIGMA, -np.ones(9)),
            pts(np.r_[1.0, SIGMA[1:]], np.ones(9)),
            pts(SIGMA[:2], np.ones(2)),
            np.ones((4, 3)),
            pts(SIGMA, np.r_[np.nan, np.ones(8)]),
        ],
    )
    def test_errors(self, points):
        with pytest.raises(ValueError):
            fit_power_law(points)


class TestLogCorrected:
    def test_roundtrip(self):
        y = log_corrected_model(SIGMA, 8.0, 15.0, 1.0)
        fit = fit_log_corrected(pts(SIGMA, y), init=(7.0, 12.0, 0.9))
        assert fit.model == LOG_CORRECTED
        assert fit.coefficients == pytest.approx((8.0, 15.0), abs=1e-8)
        assert fit.exponent == pytest.approx(1.0, abs=1e-8)
        assert fit.metadata["weights"] == "uniform"

    def test_roundtrip_from_default_init(self):
        y = log_corrected_model(SIGMA, 7.915, 14.859, 1.041)
        fit = fit_log_corrected(pts(SIGMA, y))
        assert fit.coefficients == pytest.approx((7.915, 14.859), abs=1e-8)
        assert fit.exponent == pytest.approx(1.041, abs=1e-8)

    def test_objective_non_increasing(self):
        rng = np.random.default_rng(3)
        y = log_corrected_model(SIGMA, 8.0, 15.0, 1.0) * (1 + 1e-3 * rng.standard_normal(SIGMA.size))
        hist = fit_log_corrected(pts(SIGMA, y), init=(3.0, 0.0, 0.5)).metadata["objective_history"]
        assert len(hist) > 2
        assert all(b <= a for a, b in zip(hist, hist[1:]))

    def test_fixed_c1_reduces_to_power_law(self):
        y = 4.03 * (SIGMA - 1) ** 1.23
        fit = fit_log_corrected(pts(SIGMA, y), init=(3.0, 0.0, 1.0), fix_c1=True)
        pl = fit_power_law(pts(SIGMA, y))
        assert fit.coefficients[1] == 0.0
        assert fit.coefficients[0] == pytest.approx(pl.coefficients[0], rel=1e-8)
        assert fit.exponent == pytest.approx(pl.exponent, abs=1e-8)

    def test_non_convergence_carries_best(self):
        rng = np.random.default_rng(0)
        y = log_corrected_model(SIGMA, 8.0, 15.0, 1.0) * (1 + 0.1 * rng.standard_normal(SIGMA.size))
        with pytest.raises(FitError) as info:
            fit_log_corrected(pts(SIGMA, y), max_iter=1)
        assert len(info.value.best) == 3

    @pytest.mark.parametrize("init", [(1.0, 2.0), (np.nan, 1.0, 1.0)])
    def test_bad_init(self, init):
        with pytest.raises(ValueError):
            fit_log_corrected(pts(SIGMA, np.ones(9)), init=init)

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            fit_log_corrected(pts(SIGMA[:3], np.ones(3)))


class TestSpline:
    def test_gentle_cubic(self):
        x = np.linspace(0, 1, 41)
        f = lambda t: 1 + 0.5 * t + 0.2 * t**2 - 0.1 * t**3
        mid = 0.5 * (x[1:] + x[:-1])
        sp = cubic_spline(x, f(x))
        assert np.max(np.abs(sp(mid) / f(mid) - 1)) <= 1e-3

    def test_exact_at_knots_and_continuous(self):
        rng = np.random.default_rng(1)
        x = np.sort(rng.uniform(0, 5, 12))
        y = rng.standard_normal(12)
        sp = cubic_spline(x, y)
        assert np.allclose(sp(x), y, rtol=0, atol=1e-14)
        k = x[5]
        left, right = np.nextafter(k, -np.inf), np.nextafter(k, np.inf)
        for nu in (0, 1, 2):
            assert sp(left, nu) == pytest.approx(sp(right, nu), abs=1e-8)

    def test_natural_ends(self):
        x = np.linspace(0, 2, 9)
        sp = cubic_spline(x, np.exp(x))
        assert sp(0.0, 2) == pytest.approx(0.0, abs=1e-12)
        assert sp(2.0, 2) == pytest.approx(0.0, abs=1e-12)

    def test_linear_exact(self):
        x = np.linspace(-1, 3, 6)
        xq = np.linspace(-1, 3, 101)
        assert np.allclose(cubic_spline(x, 2 * x - 1)(xq), 2 * xq - 1, rtol=0, atol=1e-13)

    def test_decreasing_knots(self):
        x = np.linspace(2, 1, 8)
        sp = cubic_spline(x, x**2)
        assert sp(1.5) == pytest.approx(2.25, abs=1e-3)

    def test_fourth_order_interior(self):
        errs = []
        for n in (20, 40, 80, 160):
            x = np.linspace(0, np.pi, n + 1)
            sp = cubic_spline(x, np.sin(2 * x))
            xq = np.linspace(1.0, 2.0, 201)
            errs.append(np.max(np.abs(sp(xq) - np.sin(2 * xq))))
        q = np.array(errs[:-1]) / np.array(errs[1:])
        assert np.all((12 <= q) & (q <= 20)), q

    @pytest.mark.parametrize(
        "x,y",
        [
            (np.array([0.0, 1.0, 0.5, 2.0]), np.ones(4)),
            (np.array([0.0, 1.0, 1.0, 2.0]), np.ones(4)),
            (np.arange(3.0), np.ones(3)),
            (np.arange(5.0), np.ones(4)),
        ],
    )
    def test_bad_knots(self, x, y):
        with pytest.raises(ValueError):
            cubic_spline(x, y)

    def test_no_extrapolation(self):
        sp = cubic_spline(np.arange(5.0), np.arange(5.0))
        with pytest.raises(ValueError):
            sp(4.5)
        with pytest.raises(ValueError):
            sp(np.array([0.5, -0.1]))
