"""Discrete profile system on the rescaled half line x = a xi in [0, x_max].

Unknowns are Q(x_j) = u_j + i v_j and W(x_j) = Q(-x_j) = f_j + i g_j for
j = 0..N together with the eigenparameters (a, b).  Q solves

    a^2 Q_xx - Q + i a (Q/(2 sigma) + x Q_x) - i a b Q_x + i a |Q|^(2 sigma) Q_x = 0

and W the mirrored equation (b -> -b, sign of the nonlinear term flipped).
Derivatives are second-order centered differences.  At the origin the
ghost values are u_{-1} = u_1, v_{-1} = g_1, f_{-1} = f_1, g_{-1} = v_1; at
x_max the virtual node N+1 is eliminated with the far-field Robin
conditions, and the two rows at j = N are multiplied by dx/(2 a^2) so that
they read as the Robin conditions themselves (plus an O(dx) remainder)
rather than as a 1/dx-amplified copy of them.  Two closing rows, u_0 - f_0 = 0 and v_0 = 0, square the system.

Flat layout: unknowns interleave (u_j, v_j, f_j, g_j) per node, followed by
(a, b); residual rows interleave (Re Q_j, Im Q_j, Re W_j, Im W_j), followed
by the two closing rows.
"""

from dataclasses import dataclass, field

import numpy as np

from .banded import BorderedBandedMatrix

# |Q|^2 below this is treated as exactly zero in derivative terms
RHO_FLOOR = 1e-300


class SingularEquationError(ValueError):
    """The rescaled equation degenerates (a = 0)."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    x_max: float = 25.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 100:
            raise ValueError(f"n must be an integer >= 100, got {self.n}")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")

    @property
    def dx(self):
        return self.x_max / self.n

    @property
    def x(self):
        return np.arange(self.n + 1) * self.dx


@dataclass
class ProfileState:
    sigma: float
    a: float
    b: float
    u: np.ndarray
    v: np.ndarray
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        for name in ("u", "v", "f", "g"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        sizes = {arr.shape for arr in (self.u, self.v, self.f, self.g)}
        if len(sizes) != 1 or len(next(iter(sizes))) != 1:
            raise ValueError("u, v, f, g must be 1-D arrays of equal length")

    @property
    def n_nodes(self):
        return self.u.size

    @property
    def q(self):
        return self.u + 1j * self.v

    @property
    def w(self):
        return self.f + 1j * self.g

    def to_vector(self):
        nodes = np.column_stack([self.u, self.v, self.f, self.g]).ravel()
        return np.concatenate([nodes, [self.a, self.b]])

    @classmethod
    def from_vector(cls, z, sigma):
        z = np.asarray(z, dtype=float)
        nodes = z[:-2].reshape(-1, 4)
        return cls(sigma, float(z[-2]), float(z[-1]), *(nodes[:, k].copy() for k in range(4)))

    @classmethod
    def zeros(cls, grid, sigma, a, b):
        zero = np.zeros(grid.n + 1)
        return cls(sigma, a, b, zero, zero.copy(), zero.copy(), zero.copy())

    def copy(self):
        return ProfileState(self.sigma, self.a, self.b, self.u.copy(), self.v.copy(), self.f.copy(), self.g.copy())

    def full_line(self, grid):
        """(x, Q) on [-x_max, x_max], the W samples reflected onto x < 0."""
        x = grid.x
        xs = np.concatenate([-x[:0:-1], x])
        qs = np.concatenate([self.w[:0:-1], self.q])
        return xs, qs


@dataclass(frozen=True)
class ResidualLayout:
    n_nodes: int
    kl: int = 5
    ku: int = 7
    fields: tuple = field(default=("u", "v", "f", "g"))

    @property
    def n_core(self):
        return 4 * self.n_nodes

    @property
    def size(self):
        return self.n_core + 2

    @property
    def bandwidth(self):
        return max(self.kl, self.ku)

    @property
    def param_cols(self):
        return (self.n_core, self.n_core + 1)

    @property
    def closing_rows(self):
        return (self.n_core, self.n_core + 1)

    def index(self, name, node):
        return 4 * node + self.fields.index(name)


def robin_coefficients(x, a, b, sigma):
    """Far-field coefficients alpha(x), beta(x) of the rescaled Robin conditions

    u_x + alpha u - beta v = 0,  v_x + beta u + alpha v = 0.
    """
    if x == 0 or a == 0:
        raise ValueError("robin coefficients need x != 0 and a != 0")
    alpha = 1.0 / (2.0 * sigma * x) + b / (2.0 * sigma * x * x)
    beta = 1.0 / (a * x) + b / (a * x * x)
    return alpha, beta


def _check(state, grid):
    if state.n_nodes != grid.n + 1:
        raise ValueError(f"state has {state.n_nodes} nodes, grid needs {grid.n + 1}")
    if state.a == 0:
        raise SingularEquationError("a = 0: the rescaled profile equation is singular")


def _extend(p, q, q_partner1, dx, alpha, beta):
    """Arrays with the ghost node in front and the Robin-eliminated node at the end."""
    pe = np.empty(p.size + 2)
    qe = np.empty(q.size + 2)
    pe[1:-1], qe[1:-1] = p, q
    pe[0], qe[0] = p[1], q_partner1
    pe[-1] = p[-2] - 2.0 * dx * (alpha * p[-1] - beta * q[-1])
    qe[-1] = q[-2] - 2.0 * dx * (beta * p[-1] + alpha * q[-1])
    return pe, qe


def _rho(p, q, sigma):
    m2 = p * p + q * q
    rho = m2**sigma
    # d rho / d(m2), floored to avoid 0**(negative)
    drho = np.where(m2 < RHO_FLOOR, 0.0, sigma * np.where(m2 < RHO_FLOOR, 1.0, m2) ** (sigma - 1.0))
    return rho, drho


def boundary_row_scale(grid, a):
    """Weight of the two residual rows at x_max."""
    return grid.dx / (2.0 * a * a)


def _half_residual(p, q, q_partner1, grid, a, b_eff, s, sigma):
    dx = grid.dx
    alpha, beta = robin_coefficients(grid.x_max, a, b_eff, sigma)
    pe, qe = _extend(p, q, q_partner1, dx, alpha, beta)
    pxx = (pe[2:] - 2.0 * p + pe[:-2]) / dx**2
    qxx = (qe[2:] - 2.0 * q + qe[:-2]) / dx**2
    px = (pe[2:] - pe[:-2]) / (2.0 * dx)
    qx = (qe[2:] - qe[:-2]) / (2.0 * dx)
    rho, _ = _rho(p, q, sigma)
    c = grid.x - b_eff + s * rho
    re = a * a * pxx - p - a * q / (2.0 * sigma) - a * c * qx
    im = a * a * qxx - q + a * p / (2.0 * sigma) + a * c * px
    w = boundary_row_scale(grid, a)
    re[-1] *= w
    im[-1] *= w
    return re, im


def assemble_residual(state, grid):
    """Residual vector of length 4(N+1) + 2 in the flat layout."""
    _check(state, grid)
    a, b, sigma = state.a, state.b, state.sigma
    qre, qim = _half_residual(state.u, state.v, state.g[1], grid, a, b, 1.0, sigma)
    wre, wim = _half_residual(state.f, state.g, state.v[1], grid, a, -b, -1.0, sigma)
    core = np.column_stack([qre, qim, wre, wim]).ravel()
    return np.concatenate([core, [state.u[0] - state.f[0], state.v[0]]])


def _half_jacobian(p, q, q_partner1, grid, a, b_eff, sb, s, sigma, off_p, off_q, off_partner, off_row):
    """Triplets (rows, cols, vals) for one half plus its two parameter columns.

    ``sb`` is d b_eff / d b; ``off_*`` are in-node offsets of the unknowns and
    of the first residual row of this half.
    """
    n = p.size
    N = n - 1
    dx = grid.dx
    x = grid.x
    alpha, beta = robin_coefficients(grid.x_max, a, b_eff, sigma)
    pe, qe = _extend(p, q, q_partner1, dx, alpha, beta)
    pxx = (pe[2:] - 2.0 * p + pe[:-2]) / dx**2
    qxx = (qe[2:] - 2.0 * q + qe[:-2]) / dx**2
    px = (pe[2:] - pe[:-2]) / (2.0 * dx)
    qx = (qe[2:] - qe[:-2]) / (2.0 * dx)
    rho, drho = _rho(p, q, sigma)
    rho_p, rho_q = 2.0 * p * drho, 2.0 * q * drho
    c = x - b_eff + s * rho
    d2 = a * a / dx**2
    hc = a * c / (2.0 * dx)

    # coefficients on (p_{j-1}, p_j, p_{j+1}, q_{j-1}, q_j, q_{j+1}) for each row
    ones = np.ones(n)
    re = {
        "pm": d2 * ones,
        "p0": -2.0 * d2 - 1.0 - a * s * rho_p * qx,
        "pp": d2 * ones,
        "qm": hc,
        "q0": -a / (2.0 * sigma) - a * s * rho_q * qx,
        "qp": -hc,
    }
    im = {
        "pm": -hc,
        "p0": a / (2.0 * sigma) + a * s * rho_p * px,
        "pp": hc,
        "qm": d2 * ones,
        "q0": -2.0 * d2 - 1.0 + a * s * rho_q * px,
        "qp": d2 * ones,
    }

    # parameter derivatives, explicit part
    dc_db = -sb
    da_re = 2.0 * a * pxx - q / (2.0 * sigma) - c * qx
    da_im = 2.0 * a * qxx + p / (2.0 * sigma) + c * px
    db_re = -a * dc_db * qx
    db_im = a * dc_db * px
    # virtual node N+1 depends on (a, b) through the Robin coefficients
    dalpha_da, dbeta_da = 0.0, -beta / a
    dalpha_db = sb / (2.0 * sigma * grid.x_max**2)
    dbeta_db = sb / (a * grid.x_max**2)
    for dal, dbe, tgt_re, tgt_im in ((dalpha_da, dbeta_da, da_re, da_im), (dalpha_db, dbeta_db, db_re, db_im)):
        dpe = -2.0 * dx * (dal * p[N] - dbe * q[N])
        dqe = -2.0 * dx * (dbe * p[N] + dal * q[N])
        tgt_re[N] += re["pp"][N] * dpe + re["qp"][N] * dqe
        tgt_im[N] += im["pp"][N] * dpe + im["qp"][N] * dqe

    node = np.arange(n)
    rows, cols, vals = [], [], []
    for r_off, coef in ((0, re), (1, im)):
        row = 4 * node + off_row + r_off
        # interior stencil
        for key, shift, foff in (
            ("pm", -1, off_p), ("p0", 0, off_p), ("pp", 1, off_p),
            ("qm", -1, off_q), ("q0", 0, off_q), ("qp", 1, off_q),
        ):
            sel = slice(1, N) if shift else slice(0, n)
            rows.append(row[sel])
            cols.append(4 * (node[sel] + shift) + foff)
            vals.append(coef[key][sel])
        # j = 0: ghosts p_{-1} = p_1, q_{-1} = partner q_1; forward neighbors as usual
        rows += [row[:1]] * 4
        cols += [np.array([4 + off_p]), np.array([4 + off_partner]), np.array([4 + off_p]), np.array([4 + off_q])]
        vals += [coef["pm"][:1], coef["qm"][:1], coef["pp"][:1], coef["qp"][:1]]
        # j = N: backward neighbors as usual, forward virtual node eliminated
        rN = row[N:]
        cp, cq = coef["pp"][N], coef["qp"][N]
        rows += [rN] * 5
        cols += [
            np.array([4 * (N - 1) + off_p]),
            np.array([4 * (N - 1) + off_q]),
            np.array([4 * (N - 1) + off_p]),  # p_{N+1} -> p_{N-1}
            np.array([4 * N + off_p]),
            np.array([4 * N + off_q]),
        ]
        vals += [
            coef["pm"][N:],
            coef["qm"][N:],
            np.array([cp]),
            np.array([cp * (-2.0 * dx * alpha) + cq * (-2.0 * dx * beta)]),
            np.array([cp * (2.0 * dx * beta) + cq * (-2.0 * dx * alpha)]),
        ]
        # q_{N+1} -> q_{N-1}
        rows.append(rN)
        cols.append(np.array([4 * (N - 1) + off_q]))
        vals.append(np.array([cq]))

    # rows at x_max carry the weight w(a) = dx/(2 a^2); dw/da = -2 w / a
    w = boundary_row_scale(grid, a)
    res_re_n = a * a * pxx[N] - p[N] - a * q[N] / (2.0 * sigma) - a * c[N] * qx[N]
    res_im_n = a * a * qxx[N] - q[N] + a * p[N] / (2.0 * sigma) + a * c[N] * px[N]
    da_re[N] = w * da_re[N] - 2.0 * w / a * res_re_n
    da_im[N] = w * da_im[N] - 2.0 * w / a * res_im_n
    db_re[N] *= w
    db_im[N] *= w

    pcols = np.zeros((4 * n, 2))
    pcols[4 * node + off_row, 0] = da_re
    pcols[4 * node + off_row + 1, 0] = da_im
    pcols[4 * node + off_row, 1] = db_re
    pcols[4 * node + off_row + 1, 1] = db_im
    rows, vals = np.concatenate(rows), np.concatenate(vals)
    vals = np.where(rows // 4 == N, w * vals, vals)
    return rows, np.concatenate(cols), vals, pcols


def assemble_jacobian(state, grid):
    """Exact Jacobian of :func:`assemble_residual` as a bordered banded matrix."""
    _check(state, grid)
    a, b, sigma = state.a, state.b, state.sigma
    layout = ResidualLayout(grid.n + 1)
    rq, cq, vq, pq = _half_jacobian(state.u, state.v, state.g[1], grid, a, b, 1.0, 1.0, sigma, 0, 1, 3, 0)
    rw, cw, vw, pw = _half_jacobian(state.f, state.g, state.v[1], grid, a, -b, -1.0, -1.0, sigma, 2, 3, 1, 2)
    rows = np.concatenate([rq, rw])
    cols = np.concatenate([cq, cw])
    vals = np.concatenate([vq, vw])
    n = layout.n_core
    kl, ku = layout.kl, layout.ku
    brow = ku + rows - cols
    if brow.min() < 0 or brow.max() > kl + ku:
        raise AssertionError("Jacobian entry outside the declared band")
    band = np.bincount(brow * n + cols, weights=vals, minlength=(kl + ku + 1) * n).reshape(kl + ku + 1, n)
    closing = np.zeros((2, n))
    closing[0, layout.index("u", 0)] = 1.0
    closing[0, layout.index("f", 0)] = -1.0
    closing[1, layout.index("v", 0)] = 1.0
    return BorderedBandedMatrix(band, kl, ku, pq + pw, closing, np.zeros((2, 2)))
