"""Least-squares fits of the near-critical parameter laws, and the spline
used to bring tables onto common sigma values.

Two models are fitted against ``s = sigma - 1``:

* power law ``y = C s^alpha`` by linear least squares in log-log space;
* log-corrected law ``y = (C0 + C1 s log s) s^alpha`` by damped
  Gauss-Newton in linear space, all points weighted equally.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

POWER_LAW = "power_law"
LOG_CORRECTED = "log_corrected"


class FitError(RuntimeError):
    """Nonlinear fit did not converge; ``best`` is the last accepted iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class FitResult:
    model: str
    coefficients: tuple
    exponent: float
    residual_norm: float
    window: tuple
    n_points: int
    metadata: dict = field(default_factory=dict)


def _select(points, window, min_points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (sigma, y) pairs")
    sigma, y = pts[:, 0], pts[:, 1]
    if window is not None:
        lo, hi = window
        keep = (sigma >= lo) & (sigma <= hi)
        sigma, y = sigma[keep], y[keep]
    if sigma.size < min_points:
        raise ValueError(f"need at least {min_points} points in the window, got {sigma.size}")
    if np.any(sigma <= 1.0):
        raise ValueError("all sigma must exceed 1")
    if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(y))):
        raise ValueError("points must be finite")
    return sigma, y


def fit_power_law(points, window=None):
    """Fit ``y = C (sigma-1)^alpha`` by least squares on log y vs log(sigma-1)."""
    sigma, y = _select(points, window, 3)
    if np.any(y <= 0):
        raise ValueError("power-law fit needs positive y")
    ls, ly = np.log(sigma - 1.0), np.log(y)
    design = np.column_stack([np.ones_like(ls), ls])
    (c0, alpha), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ np.array([c0, alpha])
    rms = float(np.sqrt(np.mean(resid**2)))
    return FitResult(
        POWER_LAW,
        (float(np.exp(c0)),),
        float(alpha),
        rms,
        (float(sigma.min()), float(sigma.max())),
        int(sigma.size),
        {"residual_space": "log"},
    )


def log_corrected_model(sigma, c0, c1, alpha):
    s = np.asarray(sigma, dtype=float) - 1.0
    return (c0 + c1 * s * np.log(s)) * s**alpha


def _log_corrected_jac(s, c0, c1, alpha):
    ls = np.log(s)
    pw = s**alpha
    return np.column_stack([pw, s * ls * pw, (c0 + c1 * s * ls) * pw * ls])


def fit_log_corrected(points, window=None, init=(8.0, 15.0, 1.0), max_iter=200, fix_c1=False):
    """Fit ``y = (C0 + C1 s log s) s^alpha``, ``s = sigma - 1``.

    Gauss-Newton with step halving whenever the objective would increase;
    the normal matrix gets a Levenberg shift of ``1e-12 * trace``.  With
    ``fix_c1`` the coefficient C1 is held at its initial value.
    """
    sigma, y = _select(points, window, 4)
    p = np.asarray(init, dtype=float).copy()
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError("init must be three finite numbers")
    s = sigma - 1.0
    free = np.array([True, not fix_c1, True])

    def objective(q):
        r = y - log_corrected_model(sigma, *q)
        return float(r @ r), r

    obj, r = objective(p)
    history = [obj]
    for it in range(max_iter):
        jac = _log_corrected_jac(s, *p)[:, free]
        grad = jac.T @ r
        if np.linalg.norm(grad) <= 1e-10 * (1.0 + obj):
            break
        normal = jac.T @ jac
        normal = normal + 1e-12 * np.trace(normal) * np.eye(normal.shape[0])
        step = np.zeros(3)
        step[free] = np.linalg.solve(normal, grad)
        t = 1.0
        while True:
            trial = p + t * step
            obj_t, r_t = objective(trial)
            if np.isfinite(obj_t) and obj_t <= obj:
                break
            t *= 0.5
            if t < 1e-12:
                # no descent left along the Gauss-Newton direction
                obj_t = None
                break
        if obj_t is None:
            break
        p, obj, r = trial, obj_t, r_t
        history.append(obj)
    else:
        raise FitError(f"log-corrected fit did not converge in {max_iter} iterations", best=tuple(p))
    return FitResult(
        LOG_CORRECTED,
        (float(p[0]), float(p[1])),
        float(p[2]),
        float(np.sqrt(obj / sigma.size)),
        (float(sigma.min()), float(sigma.max())),
        int(sigma.size),
        {"residual_space": "linear", "weights": "uniform", "objective_history": history},
    )


class NaturalSpline:
    """Natural cubic spline that refuses to extrapolate."""

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape[:1]:
            raise ValueError("knots must be 1-D with matching values")
        if x.size < 4:
            raise ValueError("cubic spline needs at least 4 knots")
        dx = np.diff(x)
        if np.all(dx < 0):
            x, y, dx = x[::-1], y[::-1], -dx[::-1]
        if not np.all(dx > 0):
            raise ValueError("spline knots must be strictly monotone")
        self.lo, self.hi = float(x[0]), float(x[-1])
        self._spline = CubicSpline(x, y, bc_type="natural", extrapolate=False)

    def __call__(self, xq, nu=0):
        xq = np.asarray(xq, dtype=float)
        if np.any(xq < self.lo) or np.any(xq > self.hi):
            raise ValueError(f"spline evaluation outside [{self.lo}, {self.hi}]")
        return self._spline(xq, nu)


def cubic_spline(x, y):
    return NaturalSpline(x, y)


__all__ = [
    "FitError",
    "FitResult",
    "LOG_CORRECTED",
    "NaturalSpline",
    "POWER_LAW",
    "cubic_spline",
    "fit_log_corrected",
    "fit_power_law",
    "log_corrected_model",
]
