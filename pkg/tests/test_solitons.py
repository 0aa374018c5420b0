import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from dnls_blowup.analysis import TailFit, functionals
from dnls_blowup.equation import GridSpec, ProfileState
from dnls_blowup.solitons import (
    SolitonParams,
    bright,
    gauge_phase,
    lump,
    lump_expansion_terms,
    soliton_invariants,
    soliton_residual,
)


def bright_mp(sigma, b, xi, dps=50):
    """Closed form evaluated term by term at extended precision."""
    with mpmath.workdps(dps):
        s, b, xi = mpmath.mpf(sigma), mpmath.mpf(b), mpmath.mpf(xi)
        k2 = 4 - b * b
        val = (s + 1) * k2 / (2 * (mpmath.cosh(s * mpmath.sqrt(k2) * xi) - b / 2))
        return val ** (1 / (2 * s))


class TestBright:
    def test_sigma1_b0_origin(self):
        assert bright(SolitonParams(1.0, 0.0), 0.0) == pytest.approx(2.0, rel=1e-15)

    def test_near_lump_limit(self):
        assert bright(SolitonParams(1.0, 1.99999999), 0.3) == pytest.approx(lump(1.0, 0.3), abs=1e-3)

    @pytest.mark.parametrize("sigma,b,xi", [(1.05, 1.9, 2.0), (1.05, 1.9, 0.0), (1.5, -1.2, 3.7), (2.0, 1.999, 0.4)])
    def test_extended_precision_oracle(self, sigma, b, xi):
        assert bright(SolitonParams(sigma, b), xi) == pytest.approx(float(bright_mp(sigma, b, xi)), rel=1e-13)

    def test_far_field_matches_oracle_where_cosh_overflows(self):
        sigma, b, xi = 1.2, 1.5, 600.0
        assert sigma * math.sqrt(4 - b * b) * xi > 700
        assert bright(SolitonParams(sigma, b), xi) == pytest.approx(float(bright_mp(sigma, b, xi)), rel=1e-12)

    def test_far_field_decay_rate(self):
        b = 1.0
        p = SolitonParams(1.3, b)
        r = bright(p, 801.0) / bright(p, 800.0)
        assert r == pytest.approx(math.exp(-0.5 * math.sqrt(4 - b * b)), rel=1e-12)

    @pytest.mark.parametrize("b", [2.0, -2.0])
    def test_domain_error(self, b):
        with pytest.raises(ValueError):
            bright(SolitonParams(1.0, b), 0.0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SolitonParams(0.9, 0.0)
        with pytest.raises(ValueError):
            SolitonParams(1.0, 2.1)

    def test_positive(self):
        xi = np.linspace(-50, 50, 1001)
        assert np.all(bright(SolitonParams(1.1, 1.95), xi) > 0)

    @settings(max_examples=60, deadline=None)
    @given(
        sigma=st.floats(1.0, 2.0),
        b=st.floats(-1.99, 1.99),
        xi=st.lists(st.floats(0.0, 300.0), min_size=1, max_size=8),
    )
    def test_even(self, sigma, b, xi):
        xi = np.array(xi)
        p = SolitonParams(sigma, b)
        assert np.array_equal(bright(p, xi), bright(p, -xi))

    def test_converges_to_lump_monotonically(self):
        xi = np.linspace(-5, 5, 2001)
        gaps = [np.max(np.abs(bright(SolitonParams(1.0, 2 - 10.0**-k), xi) - lump(1.0, xi))) for k in range(1, 9)]
        assert np.all(np.diff(gaps) < 0)


class TestLump:
    def test_origin(self):
        assert lump(1.0, 0.0) == pytest.approx(math.sqrt(8.0), rel=1e-15)

    def test_l2_norm(self):
        # ||L_1||^2 = 4 pi
        val = 2 * quad(lambda t: lump(1.0, t) ** 2, 0, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
        assert val == pytest.approx(4 * math.pi, abs=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(sigma=st.floats(1.0, 3.0), xi=st.lists(st.floats(0.0, 1e4), min_size=1, max_size=8))
    def test_even(self, sigma, xi):
        xi = np.array(xi)
        assert np.array_equal(lump(sigma, xi), lump(sigma, -xi))

    @pytest.mark.parametrize("sigma", [1.0, 1.1, 1.5, 2.0])
    def test_algebraic_decay(self, sigma):
        assert lump(sigma, 2e3) / lump(sigma, 1e3) == pytest.approx(2.0 ** (-1.0 / sigma), rel=1e-2)

    def test_precondition(self):
        with pytest.raises(ValueError):
            lump(0.5, 1.0)


def _residual_sup(fn, sigma, b, h, half_width=5.0):
    n = int(round(2 * half_width / h))
    xi = np.linspace(-half_width, half_width, n + 1)
    return np.max(np.abs(soliton_residual(sigma, b, fn(xi), xi[1] - xi[0])))


class TestSolitonResidual:
    @pytest.mark.parametrize(
        "fn,sigma,b",
        [
            (lambda x: bright(SolitonParams(1.0, 0.0), x), 1.0, 0.0),
            (lambda x: bright(SolitonParams(1.3, 1.5), x), 1.3, 1.5),
            (lambda x: lump(1.0, x), 1.0, 2.0),
            (lambda x: lump(1.2, x), 1.2, 2.0),
        ],
    )
    def test_second_order(self, fn, sigma, b):
        r = [_residual_sup(fn, sigma, b, h) for h in (4e-3, 2e-3, 1e-3)]
        for coarse, fine in zip(r, r[1:]):
            assert 3.5 <= coarse / fine <= 4.5

    def test_lump_solves_dnls_soliton_equation(self):
        # L'' - L^3 + (3/16) L^5 = 0 at sigma = 1
        h = 1e-3
        xi = np.arange(-4000, 4001) * h
        lv = lump(1.0, xi)
        direct = (lv[2:] - 2 * lv[1:-1] + lv[:-2]) / h**2 - lv[1:-1] ** 3 + 3.0 / 16.0 * lv[1:-1] ** 5
        assert np.allclose(soliton_residual(1.0, 2.0, lv, h), direct, rtol=0, atol=1e-9)
        assert np.max(np.abs(direct)) < 1e-4

    def test_zero_profile(self):
        assert np.all(soliton_residual(1.3, 0.7, np.zeros(20), 0.1) == 0.0)

    def test_too_small(self):
        with pytest.raises(ValueError):
            soliton_residual(1.0, 0.0, np.ones(4), 0.1)


class TestInvariants:
    @pytest.mark.parametrize("b,expected", [(0.0, (0.0, -4.0)), (2.0, (0.0, 0.0)), (1.0, (-math.sqrt(3), -2 * math.sqrt(3)))])
    def test_closed_forms(self, b, expected):
        assert soliton_invariants(1.0, b) == pytest.approx(expected, abs=1e-15)

    def test_sigma_unsupported(self):
        with pytest.raises(NotImplementedError):
            soliton_invariants(1.5, 0.0)

    @pytest.mark.parametrize("b", [-1.0, 0.0, 1.0, 1.5])
    def test_quadrature_of_gauge_complete_soliton(self, b):
        """H and I of B_1 e^{i(b xi/2 - int B^2/4)} by the same quadrature as profiles."""
        grid = GridSpec(40000, 40.0)
        xi = grid.x  # a = 1 so x = xi
        amp = bright(SolitonParams(1.0, b), xi)
        ph = gauge_phase(1.0, b, xi, amp)
        state = ProfileState(1.0, 1.0, b, amp * np.cos(ph), amp * np.sin(ph), amp * np.cos(-ph), amp * np.sin(-ph))
        fun = functionals(state, grid, TailFit(0.0, 0.0, 0.0, 0.0))
        h, i = soliton_invariants(1.0, b)
        assert fun.I_domain == pytest.approx(i, abs=1e-5)
        assert fun.H_domain == pytest.approx(h, abs=1e-5)


class TestExpansionTerms:
    def test_origin_values(self):
        f1, f2 = lump_expansion_terms(0.0)
        assert f2 == pytest.approx(-1.0 / (2.0 * math.sqrt(2.0)), rel=1e-15)
        assert f1 == pytest.approx(-(2.0 * math.log(8.0) - 1.0) / math.sqrt(2.0), rel=1e-15)

    def test_first_order_limit(self):
        d = 1e-6
        xi = np.linspace(-5, 5, 41)
        f1, f2 = lump_expansion_terms(xi)
        limit = (bright(SolitonParams(1.0 + d, 2.0 - d), xi) - lump(1.0, xi) - d * f2) / d
        assert np.max(np.abs(limit - f1)) < 1e-4

    def test_even(self):
        xi = np.linspace(0, 30, 61)
        for a, b in zip(lump_expansion_terms(xi), lump_expansion_terms(-xi)):
            assert np.array_equal(a, b)
