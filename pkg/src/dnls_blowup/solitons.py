"""Closed-form gDNLS solitons with the frequency fixed to one.

The bright branch ``B_sigma`` exists for ``|b| < 2``; ``b = 2`` gives the
algebraic lump ``L_sigma``.  Both solve

    R'' - (1 - b^2/4) R - (b/2) R^(2s+1) + (2s+1)/(2s+2)^2 R^(4s+1) = 0.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SolitonParams:
    sigma: float
    b: float

    def __post_init__(self):
        if not self.sigma >= 1.0:
            raise ValueError(f"sigma must be >= 1, got {self.sigma}")
        if not abs(self.b) <= 2.0:
            raise ValueError(f"|b| must be <= 2, got {self.b}")


def _log_two_cosh_minus(z, b):
    """log(2 cosh z - b) without overflow or cancellation near b = 2."""
    z = np.abs(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = z < 20.0
    zs = z[small]
    # 2 cosh z - b = 4 sinh^2(z/2) + (2 - b)
    out[small] = np.log(4.0 * np.sinh(0.5 * zs) ** 2 + (2.0 - b))
    zl = z[~small]
    out[~small] = zl + np.log1p(np.exp(-2.0 * zl) - b * np.exp(-zl))
    return out


def bright(params, xi):
    """Bright soliton amplitude B_sigma(xi).

    Evaluated in log space, so the far field underflows gracefully instead of
    overflowing ``cosh``.
    """
    sigma, b = params.sigma, params.b
    if abs(b) >= 2.0:
        raise ValueError("bright soliton requires |b| < 2")
    xi = np.asarray(xi, dtype=float)
    k2 = (2.0 - b) * (2.0 + b)
    z = sigma * np.sqrt(k2) * xi
    log_num = np.log((sigma + 1.0) * k2)
    out = np.exp((log_num - _log_two_cosh_minus(np.atleast_1d(z), b)) / (2.0 * sigma))
    return out.reshape(xi.shape) if xi.ndim else float(out[0])


def lump(sigma, xi):
    """Algebraic lump soliton L_sigma(xi) (the ``b = 2`` member)."""
    if not sigma >= 1.0:
        raise ValueError(f"sigma must be >= 1, got {sigma}")
    xi = np.asarray(xi, dtype=float)
    out = (4.0 * (sigma + 1.0) / (1.0 + 4.0 * sigma**2 * xi**2)) ** (1.0 / (2.0 * sigma))
    return out if xi.ndim else float(out)


def soliton_residual(sigma, b, profile, dxi):
    """Residual of the soliton ODE at the interior nodes of a uniform grid."""
    r = np.asarray(profile, dtype=float)
    if r.ndim != 1 or r.size < 5:
        raise ValueError("profile needs at least 5 samples on a 1-D grid")
    if not dxi > 0:
        raise ValueError("grid spacing must be positive")
    rc = r[1:-1]
    r_xx = (r[2:] - 2.0 * rc + r[:-2]) / dxi**2
    return (
        r_xx
        - (1.0 - 0.25 * b * b) * rc
        - 0.5 * b * rc ** (2 * sigma + 1)
        + (2 * sigma + 1) / (2 * sigma + 2) ** 2 * rc ** (4 * sigma + 1)
    )


def soliton_invariants(sigma=1.0, b=0.0):
    """(Hamiltonian, momentum) of the sigma = 1 bright soliton family."""
    if sigma != 1.0:
        raise NotImplementedError("closed-form invariants are only known for sigma = 1")
    if abs(b) > 2.0:
        raise ValueError("|b| must be <= 2")
    root = np.sqrt(max(4.0 - b * b, 0.0))
    return -b * root, -2.0 * root


def lump_expansion_terms(xi):
    """Corrections f1, f2 in B_sigma ~ L_1 + (sigma - 1) f1 + eps f2, eps = 2 - b."""
    xi = np.asarray(xi, dtype=float)
    s = 4.0 * xi**2 + 1.0
    f1 = -(1.0 / np.sqrt(2.0)) * s**-1.5 * (12.0 * xi**2 + (8.0 * xi**2 + 2.0) * np.log(8.0 / s) - 1.0)
    f2 = -(16.0 * xi**4 + 3.0) / (6.0 * np.sqrt(2.0) * s**1.5)
    if xi.ndim == 0:
        return float(f1), float(f2)
    return f1, f2


def gauge_phase(sigma, b, xi, amplitude):
    """Traveling-wave phase b xi / 2 - (1/(2s+2)) int_0^xi R^(2s) on a sorted grid.

    ``xi`` must contain 0; the cumulative integral is a trapezoid sum from there.
    """
    xi = np.asarray(xi, dtype=float)
    dens = np.asarray(amplitude, dtype=float) ** (2 * sigma)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xi))])
    i0 = int(np.argmin(np.abs(xi)))
    cum -= cum[i0]
    return 0.5 * b * xi - cum / (2 * sigma + 2)
