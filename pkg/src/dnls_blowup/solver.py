"""Damped Newton iteration for the discrete profile system."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .banded import LinearSolveError, bordered_banded_solve
from .equation import ProfileState, assemble_jacobian, assemble_residual

log = logging.getLogger(__name__)

# |Q_j| below this is at the floating floor: residual measured absolutely
AMPLITUDE_FLOOR = 1e-300


class NonConvergenceError(RuntimeError):
    """Newton failed; ``best`` holds the iterate with the smallest residual."""

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = history or []


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 50
    damping_min: float = 1.0 / 64.0
    linear_refine: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.damping_min <= 1:
            raise ValueError("damping_min must lie in (0, 1]")


@dataclass
class SolveOutcome:
    state: ProfileState
    iterations: int
    final_residual: float
    diagnostics: dict = field(default_factory=dict)


def pointwise_relative_residual(residual, state):
    """Max over nodes of |R_j| / |Q_j| (and the W analogue) and the closing rows.

    Nodes whose amplitude is below the floating floor are measured absolutely.
    """
    core = residual[:-2].reshape(-1, 4)
    worst = float(np.max(np.abs(residual[-2:])))
    for res, amp in ((np.hypot(core[:, 0], core[:, 1]), np.abs(state.q)), (np.hypot(core[:, 2], core[:, 3]), np.abs(state.w))):
        safe = amp >= AMPLITUDE_FLOOR
        rel = np.where(safe, res / np.where(safe, amp, 1.0), res)
        worst = max(worst, float(np.max(rel)))
    return worst


def observed_order(norms, floor=1e-10):
    """log(e3/e2) / log(e2/e1) over the last three entries above ``floor``.

    Entries at the roundoff floor carry no convergence information and are
    dropped; returns nan if fewer than three remain.
    """
    vals = np.asarray([v for v in norms if v > floor], dtype=float)
    if vals.size < 3:
        return float("nan")
    l1, l2, l3 = np.log(vals[-3:])
    return float((l3 - l2) / (l2 - l1))


def _merit(state, grid):
    if not state.a > 0:
        return np.inf
    r = assemble_residual(state, grid)
    if not np.all(np.isfinite(r)):
        return np.inf
    return pointwise_relative_residual(r, state)


def newton_solve(initial, grid, config=SolverConfig()):
    """Newton with step halving on the max pointwise relative residual.

    At least one Newton step is taken unless the residual is exactly zero
    (then the parameter columns may vanish and the step is undefined, as
    at Q = 0).  A step is accepted once the merit does not increase; if
    halving reaches ``damping_min`` without that, the solve fails.
    """
    if initial.n_nodes != grid.n + 1:
        raise ValueError(f"initial state has {initial.n_nodes} nodes, grid needs {grid.n + 1}")
    if not initial.a > 0:
        raise ValueError("initial a must be positive")
    sigma = initial.sigma
    state = initial.copy()
    merit = _merit(state, grid)
    if not np.isfinite(merit):
        raise NonConvergenceError("initial residual is not finite", best=state)
    history = [merit]
    steps = []
    # 2-norms of the residual and of the Newton correction J^{-1} R per iteration
    res_norms, corr_norms = [], []

    def diagnostics():
        return {
            "v0_minus_g0": float(state.v[0] - state.g[0]),
            "steps": steps,
            "residual_history": history,
            "residual_norms": res_norms,
            "correction_norms": corr_norms,
        }

    if merit == 0.0:
        return SolveOutcome(state, 0, 0.0, diagnostics())
    for it in range(1, config.max_iter + 1):
        z = state.to_vector()
        jac = assemble_jacobian(state, grid)
        res = assemble_residual(state, grid)
        delta = bordered_banded_solve(jac, -res, refine=config.linear_refine)
        res_norms.append(float(np.linalg.norm(res)))
        corr_norms.append(float(np.linalg.norm(delta)))
        s = 1.0
        while True:
            trial = ProfileState.from_vector(z + s * delta, sigma)
            m_trial = _merit(trial, grid)
            if m_trial <= merit:
                break
            s *= 0.5
            if s < config.damping_min:
                raise NonConvergenceError(
                    f"line search stalled at iteration {it} (residual {merit:.3e})", best=state, history=history
                )
        state, merit = trial, m_trial
        history.append(merit)
        steps.append(s)
        log.debug("newton it=%d step=%g residual=%.3e a=%.8g b=%.8g", it, s, merit, state.a, state.b)
        if merit <= config.tol:
            return SolveOutcome(state, it, merit, diagnostics())
    raise NonConvergenceError(f"no convergence in {config.max_iter} iterations (residual {merit:.3e})", best=state, history=history)


__all__ = [
    "AMPLITUDE_FLOOR",
    "LinearSolveError",
    "NonConvergenceError",
    "SolveOutcome",
    "SolverConfig",
    "newton_solve",
    "observed_order",
    "pointwise_relative_residual",
]
