"""Bordered banded matrices and their direct solve.

The profile Jacobian is a banded core ``A`` (field rows against field
unknowns) bordered by two dense columns ``B`` (the eigenparameters), two
sparse rows ``C`` (the closing conditions) and a 2x2 corner ``D``::

    [ A  B ] [x]   [r]
    [ C  D ] [y] = [s]

It is solved by a partially pivoted band LU of ``A`` (LAPACK ``dgbtrf``)
and a Schur complement for the border.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import lapack


class LinearSolveError(RuntimeError):
    """Raised when the core band or the Schur block is numerically singular."""


# reciprocal condition number below which the Schur block counts as singular
SCHUR_RCOND_MIN = 1e-13


@dataclass
class BorderedBandedMatrix:
    """Square matrix of size ``n + k`` stored as band core plus border.

    ``band`` uses LAPACK general band layout: ``band[ku + i - j, j] = A[i, j]``.
    """

    band: np.ndarray
    kl: int
    ku: int
    cols: np.ndarray  # (n, k)
    rows: np.ndarray  # (k, n)
    corner: np.ndarray  # (k, k)

    @property
    def n_core(self):
        return self.band.shape[1]

    @property
    def shape(self):
        m = self.n_core + self.corner.shape[0]
        return (m, m)

    @classmethod
    def from_dense(cls, mat, kl, ku, k=2):
        mat = np.asarray(mat, dtype=float)
        n = mat.shape[0] - k
        core = mat[:n, :n]
        band = np.zeros((kl + ku + 1, n))
        for j in range(n):
            lo, hi = max(0, j - ku), min(n, j + kl + 1)
            band[ku + lo - j : ku + hi - j, j] = core[lo:hi, j]
        outside = core.copy()
        i, j = np.indices(core.shape)
        outside[(j - i <= ku) & (i - j <= kl)] = 0.0
        if np.any(outside):
            raise ValueError("matrix core has entries outside the declared band")
        return cls(band, kl, ku, mat[:n, n:].copy(), mat[n:, :n].copy(), mat[n:, n:].copy())

    def core_sparse(self):
        n, kl, ku = self.n_core, self.kl, self.ku
        offsets = np.arange(ku, -kl - 1, -1)
        diags = []
        for d, off in zip(self.band, offsets):
            # row i = j - off for column j
            if off >= 0:
                diags.append(d[off:])
            else:
                diags.append(d[: n + off])
        return sparse.diags(diags, offsets, shape=(n, n), format="csr")

    def tosparse(self):
        core = self.core_sparse()
        out = sparse.bmat(
            [[core, sparse.csr_matrix(self.cols)], [sparse.csr_matrix(self.rows), sparse.csr_matrix(self.corner)]],
            format="csr",
        )
        out.eliminate_zeros()
        return out

    def todense(self):
        return self.tosparse().toarray()

    @property
    def nnz(self):
        return self.tosparse().nnz

    def matvec(self, z):
        n = self.n_core
        x, y = z[:n], z[n:]
        top = self.cols @ y
        for r in range(self.kl + self.ku + 1):
            off = self.ku - r
            if off >= 0:
                top[: n - off] += self.band[r, off:] * x[off:]
            else:
                top[-off:] += self.band[r, : n + off] * x[: n + off]
        bottom = self.rows @ x + self.corner @ y
        return np.concatenate([top, bottom])

    def norm_inf(self):
        return float(np.max(abs(self.tosparse()).sum(axis=1)))


def _band_factor(mat):
    kl, ku, n = mat.kl, mat.ku, mat.n_core
    ab = np.zeros((2 * kl + ku + 1, n))
    ab[kl:, :] = mat.band
    lu, piv, info = lapack.dgbtrf(ab, kl, ku, overwrite_ab=1)
    if info > 0:
        raise LinearSolveError(f"band core is singular (zero pivot at {info - 1})")
    if info < 0:
        raise ValueError(f"dgbtrf argument {-info} invalid")
    return lu, piv


def _band_apply(factor, mat, rhs):
    lu, piv = factor
    x, info = lapack.dgbtrs(lu, mat.kl, mat.ku, rhs, piv)
    if info != 0:
        raise LinearSolveError("dgbtrs failed")
    return x


def _solve_once(mat, factor, rhs):
    n = mat.n_core
    k = mat.corner.shape[0]
    r, s = rhs[:n], rhs[n:]
    sol = _band_apply(factor, mat, np.column_stack([r, mat.cols]))
    ar, ab = sol[:, 0], sol[:, 1:]
    schur = mat.corner - mat.rows @ ab
    sv = np.linalg.svd(schur, compute_uv=False)
    if not np.all(np.isfinite(sv)) or sv[-1] <= SCHUR_RCOND_MIN * max(sv[0], np.finfo(float).tiny):
        raise LinearSolveError(f"Schur block is rank deficient (singular values {sv})")
    y = np.linalg.solve(schur, s - mat.rows @ ar)
    x = ar - ab @ y
    return np.concatenate([x, y.reshape(k)])


def bordered_banded_solve(mat, rhs, refine=1):
    """Solve ``mat @ z = rhs`` with ``refine`` steps of iterative refinement."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (mat.shape[0],):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({mat.shape[0]},)")
    factor = _band_factor(mat)
    z = _solve_once(mat, factor, rhs)
    for _ in range(refine):
        z = z + _solve_once(mat, factor, rhs - mat.matvec(z))
    if not np.all(np.isfinite(z)):
        raise LinearSolveError("non-finite solution")
    return z
