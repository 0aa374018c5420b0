"""Derived quantities of a solved profile.

Everything here works in the original coordinate xi = x / a on the full
line [-x_max/a, x_max/a], with the W half reflected onto xi < 0.  The
profile is split as Q = A e^{i theta}; the gauge-modified profile P shares
the amplitude and has phase derivative

    psi = theta_xi + (a xi - b)/2 + A^(2 sigma)/(2 sigma + 2).

All quadratures are composite trapezoid sums (second order, like the
discretization).
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from .fitting import cubic_spline
from .solitons import SolitonParams, bright, lump, lump_expansion_terms

AMPLITUDE_FLOOR = 1e-300
# minimum number of nodes in each tail-fit window
TAIL_MIN_NODES = 100
TAIL_WINDOW = (0.6, 0.9)


class DegeneratePhaseError(ValueError):
    """The phase is undefined (zero amplitude) where it is needed."""


# ---------------------------------------------------------------- helpers


def _full_line(profile, grid):
    if profile.n_nodes != grid.n + 1:
        raise ValueError(f"profile has {profile.n_nodes} nodes, grid needs {grid.n + 1}")
    if not profile.a > 0:
        raise ValueError("a must be positive")
    x, q = profile.full_line(grid)
    return x / profile.a, q


def window_trapz(xi, y, lo, hi):
    """Trapezoid integral over [lo, hi] of the piecewise-linear interpolant of y.

    Splitting an interval at any point leaves the total unchanged, so
    adjacent windows add up exactly.
    """
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = max(lo, xi[0]), min(hi, xi[-1])
    if hi <= lo:
        return 0.0
    i0 = int(np.searchsorted(xi, lo, side="right"))
    i1 = int(np.searchsorted(xi, hi, side="left"))
    ylo, yhi = np.interp(lo, xi, y), np.interp(hi, xi, y)
    if i1 <= i0:
        return 0.5 * (ylo + yhi) * (hi - lo)
    inner = np.trapezoid(y[i0:i1], xi[i0:i1]) if i1 - i0 > 1 else 0.0
    return float(inner + 0.5 * (ylo + y[i0]) * (xi[i0] - lo) + 0.5 * (y[i1 - 1] + yhi) * (hi - xi[i1 - 1]))


def _cumtrapz_from_zero(xi, y):
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(xi))])
    return cum - cum[int(np.argmin(np.abs(xi)))]


# ------------------------------------------------------- tail coefficients


@dataclass(frozen=True)
class TailFit:
    A_plus: float
    A_minus: float
    residual_plus: float
    residual_minus: float
    plus_at_floor: bool = False
    minus_at_floor: bool = False


def tail_model(xi, sigma, a, b):
    """Shape |xi|^(-1/(2 sigma)) (1 + b/(2 a sigma xi)) of the far-field amplitude."""
    xi = np.asarray(xi, dtype=float)
    return np.abs(xi) ** (-1.0 / (2.0 * sigma)) * (1.0 + b / (2.0 * a * sigma * xi))


def fit_tail_amplitude(xi, amp, sigma, a, b):
    """Linear least-squares amplitude of ``tail_model`` and the relative rms misfit."""
    m = tail_model(xi, sigma, a, b)
    coef = float(m @ amp / (m @ m))
    resid = amp - coef * m
    scale = float(np.sqrt(np.mean(amp**2)))
    return coef, float(np.sqrt(np.mean(resid**2)) / scale) if scale > 0 else 0.0


def tail_coefficients(profile, grid):
    """Fit |Q| on |x| in [0.6, 0.9] x_max of each wing to the far-field form."""
    xi, q = _full_line(profile, grid)
    amp = np.abs(q)
    x_window = (TAIL_WINDOW[0] * grid.x_max, TAIL_WINDOW[1] * grid.x_max)
    out = {}
    for sign, key in ((1.0, "plus"), (-1.0, "minus")):
        sel = (sign * xi * profile.a >= x_window[0]) & (sign * xi * profile.a <= x_window[1])
        if np.count_nonzero(sel) < TAIL_MIN_NODES:
            raise ValueError(f"tail window holds {np.count_nonzero(sel)} nodes, need {TAIL_MIN_NODES}")
        if np.any(amp[sel] < AMPLITUDE_FLOOR):
            out[key] = (math.nan, math.nan, True)
            continue
        coef, res = fit_tail_amplitude(xi[sel], amp[sel], profile.sigma, profile.a, profile.b)
        out[key] = (coef, res, False)
    return TailFit(out["plus"][0], out["minus"][0], out["plus"][1], out["minus"][1], out["plus"][2], out["minus"][2])


# ------------------------------------------------------------ functionals


@dataclass(frozen=True)
class Functionals:
    """H and I over the line: domain trapezoid sums plus a tail beyond |xi| = x_max/a.

    ``H``, ``I`` use the exact flux tails; ``*_tail_model`` are the
    estimates from integrating the first-order far-field form.
    """

    H: float
    I: float
    H_domain: float
    I_domain: float
    H_tail: float
    I_tail: float
    H_tail_model: float
    I_tail_model: float
    kinetic: float


def _tail_functionals(amp_coef, sign, sigma, a, b, xi_end):
    """Integrals of the H and I densities of the far-field form beyond |xi| = xi_end."""
    if not amp_coef or not np.isfinite(amp_coef):
        return 0.0, 0.0

    def parts(t):
        xi = sign * t
        shape = 1.0 + b / (2.0 * a * sigma * xi)
        amp2 = amp_coef**2 * t ** (-1.0 / sigma) * shape**2
        # d(log |Q|)/dxi and the phase derivative of the far-field form
        dlog = -1.0 / (2.0 * sigma * xi) - (b / (2.0 * a * sigma * xi**2)) / shape
        dphase = -1.0 / (a * xi) - b / (a * a * xi**2)
        return amp2, dlog, dphase

    def dens_i(t):
        amp2, _, dphase = parts(t)
        return amp2 * dphase

    def dens_h(t):
        amp2, dlog, dphase = parts(t)
        return amp2 * (dlog**2 + dphase**2) + amp2**sigma * amp2 * dphase / (sigma + 1.0)

    i_tail = quad(dens_i, xi_end, np.inf, limit=200)[0]
    h_tail = quad(dens_h, xi_end, np.inf, limit=200)[0]
    return h_tail, i_tail


def functional_fluxes(xi, q, q_xi, sigma, a, b):
    """Fluxes F_H, F_I with h = 2 sigma/(a (sigma+1)) dF_H/dxi and Im(conj(Q) Q_xi) = -(sigma/a) dF_I/dxi.

    Both identities hold pointwise for any solution of the profile
    equation, so the part of H or I beyond a point is a boundary value.
    """
    cross = np.conj(q) * q_xi
    q2, qx2 = np.abs(q) ** 2, np.abs(q_xi) ** 2
    f_h = np.imag(cross) + a / (2.0 * sigma) * np.real(cross) + 0.5 * (a * xi - b) * qx2 + q2 ** (sigma + 1.0) / (2.0 * sigma + 2.0)
    f_i = qx2 - q2
    return f_h, f_i


def functionals(profile, grid, tails=None):
    """Hamiltonian and momentum: domain part plus the tail beyond the domain."""
    xi, q = _full_line(profile, grid)
    dxi = grid.dx / profile.a
    q_xi = np.gradient(q, dxi, edge_order=2)
    mom = np.imag(np.conj(q) * q_xi)
    kinetic = float(np.trapezoid(np.abs(q_xi) ** 2, dx=dxi))
    i_dom = float(np.trapezoid(mom, dx=dxi))
    h_dom = kinetic + float(np.trapezoid(np.abs(q) ** (2 * profile.sigma) * mom, dx=dxi)) / (profile.sigma + 1.0)
    sigma, a = profile.sigma, profile.a
    ends = np.array([0, -1])
    f_h, f_i = functional_fluxes(xi[ends], q[ends], q_xi[ends], sigma, a, profile.b)
    h_tail = 2.0 * sigma / (a * (sigma + 1.0)) * float(f_h[0] - f_h[1])
    i_tail = sigma / a * float(f_i[1] - f_i[0])
    if tails is None:
        tails = tail_coefficients(profile, grid) if np.any(q) else TailFit(0.0, 0.0, 0.0, 0.0)
    xi_end = grid.x_max / a
    h_model = i_model = 0.0
    for coef, sign in ((tails.A_plus, 1.0), (tails.A_minus, -1.0)):
        h, i = _tail_functionals(coef, sign, sigma, a, profile.b, xi_end)
        h_model += h
        i_model += i
    return Functionals(h_dom + h_tail, i_dom + i_tail, h_dom, i_dom, h_tail, i_tail, h_model, i_model, kinetic)


# --------------------------------------------------------- phase/amplitude


@dataclass
class PhaseAmplitude:
    xi: np.ndarray
    A: np.ndarray
    theta_xi: np.ndarray
    psi: np.ndarray
    sigma: float
    a: float
    b: float
    x_max: float

    @property
    def origin(self):
        return int(np.argmin(np.abs(self.xi)))

    @property
    def epsilon(self):
        return 2.0 - self.b

    @classmethod
    def from_amplitude(cls, xi, amp, sigma, a, b, x_max=None, theta_xi=None):
        """Wrap given samples, e.g. a closed-form amplitude, for the integral routines."""
        xi = np.asarray(xi, dtype=float)
        amp = np.asarray(amp, dtype=float)
        theta_xi = np.zeros_like(xi) if theta_xi is None else np.asarray(theta_xi, dtype=float)
        psi = theta_xi + 0.5 * (a * xi - b) + amp ** (2 * sigma) / (2 * sigma + 2)
        x_max = a * float(np.max(np.abs(xi))) if x_max is None else x_max
        return cls(xi, amp, theta_xi, psi, sigma, a, b, x_max)


def phase_amplitude(profile, grid):
    """A = |Q|, theta_xi from node-to-node unwrapped arg Q, and psi."""
    xi, q = _full_line(profile, grid)
    amp = np.abs(q)
    live = amp >= AMPLITUDE_FLOOR
    if not live[grid.n]:
        raise DegeneratePhaseError("amplitude vanishes at the origin")
    # the active region between the turning points must be resolved
    eps = 2.0 - profile.b
    active = (xi >= min(-abs(eps) / profile.a, -1.0)) & (xi <= (4.0 - eps) / profile.a)
    if np.any(active & ~live):
        raise DegeneratePhaseError("amplitude at the floating floor inside the active region")
    step = np.angle(q[1:] * np.conj(q[:-1]))
    ok = live[1:] & live[:-1]
    if np.any(np.abs(step[ok]) >= 0.5 * np.pi):
        raise DegeneratePhaseError("phase increments per node reach pi/2; mesh does not resolve the phase")
    step = np.where(ok, step, 0.0)
    theta = np.concatenate([[0.0], np.cumsum(step)])
    theta += np.angle(q[grid.n]) - theta[grid.n]
    dxi = grid.dx / profile.a
    theta_xi = np.gradient(theta, dxi, edge_order=2)
    theta_xi[~live] = np.nan
    # a derivative stencil touching a floored node is meaningless too
    bad = ~live
    bad[1:] |= ~live[:-1]
    bad[:-1] |= ~live[1:]
    theta_xi[bad] = np.nan
    psi = theta_xi + 0.5 * (profile.a * xi - profile.b) + amp ** (2 * profile.sigma) / (2 * profile.sigma + 2)
    return PhaseAmplitude(xi, amp, theta_xi, psi, profile.sigma, profile.a, profile.b, grid.x_max)


def psi_at_origin(pa):
    return float(pa.psi[pa.origin])


def psi_from_amplitude(pa):
    """psi(xi) = psi(0) A^2(0)/A^2 + a (sigma-1)/(2 sigma A^2) int_0^xi A^2."""
    a2 = pa.A**2
    i0 = pa.origin
    cum = _cumtrapz_from_zero(pa.xi, a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (pa.psi[i0] * a2[i0] + pa.a * (pa.sigma - 1.0) / (2.0 * pa.sigma) * cum) / a2


def amplitude_from_psi(pa, lo, hi):
    """A^2 = (C^2/|psi|) exp{(a (sigma-1)/(2 sigma)) int dxi/psi} on [lo, hi].

    ``psi`` must keep one sign there; C is fixed by the sample at ``lo``.
    Returns (xi, predicted A^2) on the nodes of the interval.
    """
    sel = (pa.xi >= lo) & (pa.xi <= hi)
    xi, psi = pa.xi[sel], pa.psi[sel]
    if psi.size < 2 or not (np.all(psi > 0) or np.all(psi < 0)):
        raise ValueError("psi changes sign or is undefined on the interval")
    rate = pa.a * (pa.sigma - 1.0) / (2.0 * pa.sigma)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (1.0 / psi[1:] + 1.0 / psi[:-1]) * np.diff(xi))])
    c2 = pa.A[sel][0] ** 2 * abs(psi[0])
    return xi, c2 / np.abs(psi) * np.exp(rate * cum)


# ------------------------------------------------------------ mass, regions


@dataclass(frozen=True)
class MassIntegrals:
    k: float
    l: float
    xi0: float
    truncated: bool


def turning_points(a, b):
    eps = 2.0 - b
    return -eps / a, (4.0 - eps) / a


def mass_integrals(pa):
    """k = int_0^xi0 A^2 with xi0 = min(1.2 xi_plus, 0.9 x_max/a); l = int_{-eps/a}^0 A^2."""
    xi_minus, xi_plus = turning_points(pa.a, pa.b)
    edge = pa.x_max / pa.a
    xi0 = min(1.2 * xi_plus, 0.9 * edge)
    a2 = pa.A**2
    k = window_trapz(pa.xi, a2, 0.0, xi0)
    l = window_trapz(pa.xi, a2, xi_minus, 0.0) if xi_minus < 0 else 0.0
    truncated = bool(xi_plus > edge or xi_minus < -edge)
    return MassIntegrals(k, l, xi0, truncated)


def momentum_density_bright(xi, sigma, b):
    """(b/2 - B^(2s)/(2s+2)) B^2, the traveling-wave momentum density."""
    amp = bright(SolitonParams(sigma, b), xi)
    return (0.5 * b - amp ** (2 * sigma) / (2 * sigma + 2)) * amp**2


def momentum_density_lump(xi, sigma):
    amp = lump(sigma, xi)
    return (1.0 - amp ** (2 * sigma) / (2 * sigma + 2)) * amp**2


def wkb_region1_momentum(sigma, a, b, a_minus, x_max, y_min=1.0):
    """Region-1 momentum of the WKB form for y = (b - a xi)/2 in [y_min, (x_max + b)/2].

    With y = cosh t the integrand (2/a) theta_xi A^2 dy collapses to
    a^(1/sigma - 1) A_-^2 e^(-t/sigma) dt.
    """
    y_max = 0.5 * (x_max + b)
    if y_max <= y_min:
        return 0.0
    t_min, t_max = math.acosh(y_min), math.acosh(y_max)
    return sigma * a ** (1.0 / sigma - 1.0) * a_minus**2 * (math.exp(-t_min / sigma) - math.exp(-t_max / sigma))


def wkb_cutoff(a, b):
    """xi where y - 1 = a^(2/3); the WKB form holds for y - 1 >> a^(2/3)."""
    return (b - 2.0 * (1.0 + a ** (2.0 / 3.0))) / a


@dataclass(frozen=True)
class RegionMomenta:
    I1: float
    I2: float
    I3: float
    total: float
    I1_wkb: float
    # region 1 restricted to y >= 1 + a^(2/3), where the WKB form is valid
    I1_outer: float
    I1_outer_wkb: float
    # region 3 split at -1/(2 sqrt eps)
    I3_inner: float
    I3_inner_bright: float
    I3_outer: float
    I3_outer_bright: float
    I3_outer_lump: float
    mu: float
    truncated: tuple


def momentum_regions(profile, pa, grid, a_minus=None):
    """Momentum of regions xi < xi_minus, xi > 0 and xi_minus < xi < 0 with soliton models."""
    xi_minus, _ = turning_points(profile.a, profile.b)
    eps = 2.0 - profile.b
    edge = grid.x_max / profile.a
    dens = np.nan_to_num(pa.theta_xi * pa.A**2)
    lo, hi = float(pa.xi[0]), float(pa.xi[-1])
    cut = max(xi_minus, lo)
    i1 = window_trapz(pa.xi, dens, lo, cut)
    i3 = window_trapz(pa.xi, dens, cut, 0.0)
    i2 = window_trapz(pa.xi, dens, 0.0, hi)
    total = float(np.trapezoid(dens, pa.xi))
    if a_minus is None:
        a_minus = tail_coefficients(profile, grid).A_minus
    i1_wkb = wkb_region1_momentum(profile.sigma, profile.a, profile.b, a_minus, grid.x_max)
    xi_c = wkb_cutoff(profile.a, profile.b)
    i1_out = window_trapz(pa.xi, dens, lo, max(xi_c, lo))
    y_c = 1.0 + profile.a ** (2.0 / 3.0)
    i1_out_wkb = wkb_region1_momentum(profile.sigma, profile.a, profile.b, a_minus, grid.x_max, y_min=y_c)
    nan = math.nan
    inner_w = 1.0 / (2.0 * math.sqrt(eps)) if eps > 0 else nan
    if eps > 0 and eps < 2.0:
        inner_lo = max(-inner_w, cut)
        i3_in = window_trapz(pa.xi, dens, inner_lo, 0.0)
        i3_in_b = quad(momentum_density_bright, inner_lo, 0.0, args=(profile.sigma, profile.b), limit=200)[0]
        i3_out = window_trapz(pa.xi, dens, cut, inner_lo)
        i3_out_b = quad(momentum_density_bright, cut, inner_lo, args=(profile.sigma, profile.b), limit=200)[0]
        i3_out_l = quad(momentum_density_lump, cut, inner_lo, args=(profile.sigma,), limit=200)[0]
        mu = (2.0 * math.pi * (profile.sigma - 1.0) - i3) / math.sqrt(eps)
    else:
        i3_in = i3_in_b = i3_out = i3_out_b = i3_out_l = mu = nan
    truncated = (bool(xi_minus < -edge), False, bool(xi_minus < -edge))
    return RegionMomenta(i1, i2, i3, total, i1_wkb, i1_out, i1_out_wkb, i3_in, i3_in_b, i3_out, i3_out_b, i3_out_l, mu, truncated)


# --------------------------------------------------- closed-form integrals


def expansion_densities(xi):
    """Densities I0, I1, I2 of the momentum of L_1 + (sigma-1) f1 + eps f2."""
    xi = np.asarray(xi, dtype=float)
    l1 = lump(1.0, xi)
    f1, f2 = lump_expansion_terms(xi)
    l2 = l1**2
    d0 = (1.0 - l2 / 4.0) * l2
    d1 = 2.0 * l1 * f1 * (1.0 - l2 / 4.0) - 0.5 * (l1 * f1 + l2 * np.log(l1) - l2 / 4.0) * l2
    d2 = 2.0 * f2 * l1 * (1.0 - l2 / 4.0) - 0.5 * (f2 * l1 + 1.0) * l2
    return d0, d1, d2


def expansion_integrals(epsilon):
    """(J0, J1, J2): integrals of the three densities over [-1/(2 sqrt eps), 0]."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    lo = -0.5 / math.sqrt(epsilon)
    out = []
    for k in range(3):
        val = quad(lambda t: float(expansion_densities(t)[k]), lo, 0.0, limit=400, points=[-1.0, -0.5])[0]
        out.append(val)
    return tuple(out)


def intermediate_density_integral(epsilon):
    """(1/(2 sqrt eps)) int_1^inf (b/2 - B_1^2/4)(B_1^2/2 - 2 B_1^2 log B_1) du, b = 2 - eps."""
    b = 2.0 - epsilon
    k2 = (2.0 - b) * (2.0 + b)

    def dens(u):
        # B_1^2 as a function of u = sqrt(4 - b^2) xi, in a cancellation-free form
        b2 = k2 / (2.0 * math.sinh(0.5 * u) ** 2 + 0.5 * epsilon) if u < 600 else 0.0
        if b2 == 0.0:
            return 0.0
        return (0.5 * b - b2 / 4.0) * (0.5 * b2 - b2 * math.log(b2))

    val = quad(dens, 1.0, 60.0, limit=400)[0] + quad(dens, 60.0, np.inf, limit=100)[0]
    return val / (2.0 * math.sqrt(epsilon))


def intermediate_order_constants(epsilons=None):
    """Fit I_{2,2}(eps) = c1 sqrt(eps) log(eps) + c2 sqrt(eps) on a decreasing eps sequence."""
    eps = np.geomspace(1e-5, 1e-9, 9) if epsilons is None else np.asarray(epsilons, dtype=float)
    vals = np.array([intermediate_density_integral(e) for e in eps])
    design = np.column_stack([np.sqrt(eps) * np.log(eps), np.sqrt(eps)])
    (c1, c2), *_ = np.linalg.lstsq(design, vals, rcond=None)
    return float(c1), float(c2)


# -------------------------------------------------------------- relations


def predicted_a_plus(a, epsilon):
    if not (a > 0 and epsilon > 0):
        return math.nan
    return 4.0 * epsilon**0.75 / math.sqrt(a) * math.exp(-math.pi / a + (2.0 / 3.0) * epsilon**1.5 / a)


def predicted_psi0(sigma, a, k, amp0):
    return -a * (sigma - 1.0) * k / (2.0 * sigma * amp0**2)


def predicted_a_minus(sigma, a, k, l):
    val = a ** (1.0 - 1.0 / sigma) * (k + l) * (1.0 - 1.0 / sigma)
    return math.sqrt(val) if val >= 0 else math.nan


def _gap(measured, predicted):
    if measured is None or not (np.isfinite(measured) and np.isfinite(predicted)) or predicted == 0:
        return None
    return abs(measured / predicted - 1.0)


@dataclass
class AnalysisReport:
    sigma: float
    a: float
    b: float
    epsilon: float
    H: float
    I: float
    H_tail: float
    I_tail: float
    H_tail_model: float
    I_tail_model: float
    kinetic: float
    A_plus: float
    A_minus: float
    A_plus_at_floor: bool
    psi0: float
    A0: float
    k: float
    l: float
    xi0: float
    xi_minus: float
    xi_plus: float
    mass_truncated: bool
    I1: float
    I2: float
    I3: float
    I1_wkb: float
    I1_outer: float
    I1_outer_wkb: float
    I3_inner: float
    I3_inner_bright: float
    I3_outer: float
    I3_outer_bright: float
    I3_outer_lump: float
    mu: float
    N: int
    x_max: float
    relation_gaps: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)

    def check(self):
        """Report invariants; returns the list of violated ones."""
        bad = []
        if not 0 < self.epsilon < 2:
            bad.append("epsilon outside (0, 2)")
        if not self.xi_minus < 0 < self.xi_plus:
            bad.append("turning points not ordered around 0")
        for name, val in self.as_dict().items():
            if isinstance(val, float) and not np.isfinite(val):
                if name == "A_plus" and self.A_plus_at_floor:
                    continue
                if name in {"I3_inner", "I3_inner_bright", "I3_outer", "I3_outer_bright", "I3_outer_lump", "mu"}:
                    if not 0 < self.epsilon < 2:
                        continue
                bad.append(f"{name} not finite")
        return bad


def check_relations(report):
    """Relative gaps |measured/predicted - 1| of the A_+, psi(0) and A_- relations."""
    a_plus = None if report.A_plus_at_floor else report.A_plus
    return {
        "A_plus": _gap(a_plus, predicted_a_plus(report.a, report.epsilon)),
        "psi0": _gap(report.psi0, predicted_psi0(report.sigma, report.a, report.k, report.A0)),
        "A_minus": _gap(report.A_minus, predicted_a_minus(report.sigma, report.a, report.k, report.l)),
    }


def analyze(profile, grid):
    """Full AnalysisReport of one converged profile."""
    tails = tail_coefficients(profile, grid)
    fun = functionals(profile, grid, tails)
    pa = phase_amplitude(profile, grid)
    mass = mass_integrals(pa)
    reg = momentum_regions(profile, pa, grid, a_minus=tails.A_minus)
    xi_minus, xi_plus = turning_points(profile.a, profile.b)
    report = AnalysisReport(
        sigma=profile.sigma,
        a=profile.a,
        b=profile.b,
        epsilon=2.0 - profile.b,
        H=fun.H,
        I=fun.I,
        H_tail=fun.H_tail,
        I_tail=fun.I_tail,
        H_tail_model=fun.H_tail_model,
        I_tail_model=fun.I_tail_model,
        kinetic=fun.kinetic,
        A_plus=tails.A_plus,
        A_minus=tails.A_minus,
        A_plus_at_floor=tails.plus_at_floor,
        psi0=psi_at_origin(pa),
        A0=float(pa.A[pa.origin]),
        k=mass.k,
        l=mass.l,
        xi0=mass.xi0,
        xi_minus=xi_minus,
        xi_plus=xi_plus,
        mass_truncated=mass.truncated,
        I1=reg.I1,
        I2=reg.I2,
        I3=reg.I3,
        I1_wkb=reg.I1_wkb,
        I1_outer=reg.I1_outer,
        I1_outer_wkb=reg.I1_outer_wkb,
        I3_inner=reg.I3_inner,
        I3_inner_bright=reg.I3_inner_bright,
        I3_outer=reg.I3_outer,
        I3_outer_bright=reg.I3_outer_bright,
        I3_outer_lump=reg.I3_outer_lump,
        mu=reg.mu,
        N=grid.n,
        x_max=grid.x_max,
    )
    report.relation_gaps = check_relations(report)
    return report


# ------------------------------------------------------------- Richardson

RICHARDSON_COLUMNS = ("a", "b", "epsilon", "A_plus", "A_minus", "psi0", "k", "l", "I1", "I2", "I3", "H", "I")


def richardson(coarse, fine, columns=RICHARDSON_COLUMNS):
    """(4 fine - coarse)/3 on the fine table's sigma values.

    The coarse table is moved onto those sigma values by a natural cubic
    spline; only fine rows inside the coarse sigma range are kept.
    """
    from .tables import ParameterTable

    if len(coarse) < 4:
        raise ValueError("coarse table needs at least 4 rows for the spline")
    n_c, n_f = coarse.resolution(), fine.resolution()
    if n_f != 2 * n_c:
        raise ValueError(f"fine table must have twice the coarse N ({n_f} vs {n_c})")
    s_c, s_f = coarse.column("sigma"), fine.column("sigma")
    lo, hi = s_c.min(), s_c.max()
    keep = (s_f >= lo) & (s_f <= hi)
    if not np.any(keep):
        raise ValueError("sigma ranges of the two tables do not overlap")
    rows = []
    fine_rows = [r for r, k in zip(fine.rows, keep) if k]
    for name in columns:
        yc = coarse.column(name)
        yf = fine.column(name)[keep]
        if np.all(np.isfinite(yc)):
            yc_on_f = cubic_spline(s_c, yc)(s_f[keep])
            vals = (4.0 * yf - yc_on_f) / 3.0
        else:
            vals = np.full(yf.shape, np.nan)
        for i, v in enumerate(vals):
            if len(rows) <= i:
                rows.append({"sigma": float(s_f[keep][i]), "N": fine_rows[i]["N"], "x_max": fine_rows[i]["x_max"]})
            rows[i][name] = float(v)
    for r in rows:
        if not np.isfinite(r.get("A_plus", math.nan)):
            r["A_plus"] = None
    return ParameterTable(rows, kind="richardson")


# ------------------------------------------------------- reconstruction


def reconstruct_blowup(profile, grid, t_star, x_star, theta0, t, x):
    """Self-similar approximation of the gDNLS solution near the blow-up point."""
    if not t < t_star:
        raise ValueError("t must be before the blow-up time")
    a, b, sigma = profile.a, profile.b, profile.sigma
    lam = math.sqrt(2.0 * a * (t_star - t))
    xi = (np.asarray(x, dtype=float) - x_star) / lam + b / a
    xs, q = profile.full_line(grid)
    xi_nodes = xs / a
    if np.any(xi < xi_nodes[0]) or np.any(xi > xi_nodes[-1]):
        raise ValueError("requested points map outside the sampled profile")
    re = cubic_spline(xi_nodes, q.real)(xi)
    im = cubic_spline(xi_nodes, q.imag)(xi)
    scale = (1.0 / (2.0 * a * (t_star - t))) ** (1.0 / (4.0 * sigma))
    phase = theta0 + math.log(t_star / (t_star - t)) / (2.0 * a)
    return scale * (re + 1j * im) * np.exp(1j * phase)


__all__ = [
    "AnalysisReport",
    "DegeneratePhaseError",
    "Functionals",
    "MassIntegrals",
    "PhaseAmplitude",
    "RegionMomenta",
    "TailFit",
    "amplitude_from_psi",
    "analyze",
    "check_relations",
    "expansion_densities",
    "expansion_integrals",
    "fit_tail_amplitude",
    "functional_fluxes",
    "functionals",
    "intermediate_density_integral",
    "intermediate_order_constants",
    "mass_integrals",
    "momentum_density_bright",
    "momentum_density_lump",
    "momentum_regions",
    "phase_amplitude",
    "predicted_a_minus",
    "predicted_a_plus",
    "predicted_psi0",
    "psi_at_origin",
    "psi_from_amplitude",
    "reconstruct_blowup",
    "richardson",
    "tail_coefficients",
    "tail_model",
    "turning_points",
    "wkb_cutoff",
    "wkb_region1_momentum",
    "window_trapz",
]
