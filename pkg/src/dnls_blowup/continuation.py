"""Continuation of the profile family downward in sigma.

The family is started at sigma = 2 from a soliton-phase ansatz: the bright
soliton amplitude with the phase of the traveling-wave gauge plus the
quadratic self-similar phase.  A small deterministic sweep over (a0, b0)
on a coarse mesh finds a seed that Newton converges from; the solution is
then carried to finer meshes by cubic interpolation.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .banded import LinearSolveError
from .equation import GridSpec, ProfileState, assemble_residual
from .solitons import SolitonParams, bright, gauge_phase
from .solver import NonConvergenceError, SolveOutcome, SolverConfig, newton_solve, pointwise_relative_residual

log = logging.getLogger(__name__)

DSIGMA0 = 0.2
DSIGMA_MIN = 0.00078125
SIGMA_END_MIN = 1.04

# deterministic bootstrap sweep, coarse mesh N = 10^4
SWEEP_A0 = tuple(float(v) for v in np.geomspace(0.1, 1.5, 6))
SWEEP_B0 = (0.0, 0.5, 1.0, 1.5, 1.9)
BOOTSTRAP_N = 10_000

# decimal places kept on sigma so repeated subtraction does not drift
_SIGMA_DIGITS = 12


class ContinuationAbort(RuntimeError):
    """Non-finite iterate; ``state`` is the offending state for dumping."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


def initial_guess(grid, sigma, a0, b0):
    """Soliton-phase ansatz Q = B exp(-i(a xi^2/4 - b xi/2 + int_0^xi B^(2s)/(2s+2)))."""
    if not a0 > 0:
        raise ValueError("a0 must be positive")
    if not abs(b0) < 2:
        raise ValueError("|b0| must be below 2")
    xi = grid.x / a0
    amp = bright(SolitonParams(sigma, b0), xi)
    quad = 0.25 * a0 * xi**2
    # gauge_phase = b xi/2 - int B^(2s)/(2s+2); W(xi) = Q(-xi) flips its sign
    gauge = gauge_phase(sigma, b0, xi, amp)
    ph_q = gauge - quad
    ph_w = -gauge - quad
    return ProfileState(sigma, a0, b0, amp * np.cos(ph_q), amp * np.sin(ph_q), amp * np.cos(ph_w), amp * np.sin(ph_w))


def initial_guess_sigma2(grid, a0, b0):
    return initial_guess(grid, 2.0, a0, b0)


@dataclass
class BootstrapResult:
    outcome: SolveOutcome
    grid: GridSpec
    seed: tuple
    attempts: list


def bootstrap_sigma2(grid=None, config=SolverConfig(), a0_values=SWEEP_A0, b0_values=SWEEP_B0, min_amplitude=1e-3):
    """First seed of the (a0, b0) sweep whose Newton solve converges to a nontrivial profile."""
    grid = grid or GridSpec(BOOTSTRAP_N)
    attempts = []
    for a0 in a0_values:
        for b0 in b0_values:
            try:
                out = newton_solve(initial_guess_sigma2(grid, a0, b0), grid, config)
            except (NonConvergenceError, LinearSolveError) as exc:
                attempts.append((a0, b0, str(exc)))
                continue
            if abs(out.state.q[0]) < min_amplitude:
                attempts.append((a0, b0, "converged to the trivial solution"))
                continue
            attempts.append((a0, b0, "converged"))
            log.info("bootstrap seed a0=%g b0=%g -> a=%.10g b=%.10g", a0, b0, out.state.a, out.state.b)
            return BootstrapResult(out, grid, (a0, b0), attempts)
    raise NonConvergenceError("no seed of the sweep converged", history=attempts)


def promote(state, grid_from, grid_to):
    """Cubic interpolation of (u, v, f, g) onto another mesh of the same half-domain."""
    if state.n_nodes != grid_from.n + 1:
        raise ValueError("state does not match the source grid")
    if not np.isclose(grid_from.x_max, grid_to.x_max, rtol=0, atol=1e-14):
        raise ValueError("mesh promotion needs equal x_max")
    # extend each field to x < 0 by the ghost relations of the discrete
    # system, so the origin is an interior point of the spline
    x_old, x_new = grid_from.x, np.minimum(grid_to.x, grid_from.x[-1])
    x_full = np.concatenate([-x_old[:0:-1], x_old])
    pairs = ((state.u, state.u), (state.v, state.g), (state.f, state.f), (state.g, state.v))
    fields = [CubicSpline(x_full, np.concatenate([mirror[:0:-1], arr]))(x_new) for arr, mirror in pairs]
    return ProfileState(state.sigma, state.a, state.b, *fields)


@dataclass(frozen=True)
class ContinuationPlan:
    sigma_start: float = 2.0
    sigma_end: float = 1.2
    dsigma0: float = DSIGMA0
    dsigma_min: float = DSIGMA_MIN
    grid: GridSpec = field(default_factory=lambda: GridSpec(100_000))
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.sigma_start >= self.sigma_end:
            raise ValueError("sigma_start must not be below sigma_end")
        if not self.sigma_end >= SIGMA_END_MIN:
            raise ValueError(f"sigma_end must be >= {SIGMA_END_MIN}")
        if not self.dsigma0 >= self.dsigma_min > 0:
            raise ValueError("need dsigma0 >= dsigma_min > 0")


@dataclass
class ContinuationEntry:
    sigma: float
    a: float
    b: float
    iterations: int
    final_residual: float
    v0_minus_g0: float
    dsigma: float
    profile_ref: object = None


@dataclass
class ContinuationRecord:
    entries: list = field(default_factory=list)
    truncated: bool = False
    dsigma: float = DSIGMA0
    branch_flags: list = field(default_factory=list)
    final_state: ProfileState = None

    @property
    def sigmas(self):
        return np.array([e.sigma for e in self.entries])

    def column(self, name):
        return np.array([getattr(e, name) for e in self.entries])


def _entry(outcome, dsigma):
    st = outcome.state
    return ContinuationEntry(
        st.sigma, st.a, st.b, outcome.iterations, outcome.final_residual, float(st.v[0] - st.g[0]), dsigma
    )


def _check_branch(record, state):
    if not state.a > 0 or not 2.0 - state.b > 0:
        msg = f"sigma={state.sigma:.12g}: a={state.a:.6g}, eps={2.0 - state.b:.6g}"
        log.warning("branch condition a > 0, eps > 0 violated at %s", msg)
        record.branch_flags.append(msg)


def continue_family(plan, start, on_solution=None, dsigma=None, on_failure=None, emit_start=True):
    """March sigma from ``plan.sigma_start`` down to ``plan.sigma_end``.

    ``start`` is a converged state (or SolveOutcome) at sigma_start.  Every
    converged solution is passed to ``on_solution(entry, state)``, whose
    return value is stored as the entry's profile reference; failed solves
    go to ``on_failure(sigma, exc)``.  ``dsigma`` overrides the initial
    step and ``emit_start=False`` skips the starting entry (both used when
    resuming).
    """
    if isinstance(start, SolveOutcome):
        outcome = start
    else:
        res = pointwise_relative_residual(assemble_residual(start, plan.grid), start)
        outcome = SolveOutcome(start, 0, res, {})
    state = outcome.state
    if state.n_nodes != plan.grid.n + 1:
        raise ValueError("start state does not match the plan grid")
    if not np.isclose(state.sigma, plan.sigma_start, rtol=0, atol=1e-12):
        raise ValueError(f"start state has sigma={state.sigma}, plan starts at {plan.sigma_start}")
    ds = plan.dsigma0 if dsigma is None else float(dsigma)
    record = ContinuationRecord(dsigma=ds)

    def accept(out):
        entry = _entry(out, ds)
        _check_branch(record, out.state)
        if on_solution is not None:
            entry.profile_ref = on_solution(entry, out.state)
        record.entries.append(entry)

    if emit_start:
        accept(outcome)
    sigma = state.sigma
    while sigma > plan.sigma_end:
        target = round(max(sigma - ds, plan.sigma_end), _SIGMA_DIGITS)
        trial = state.copy()
        trial.sigma = target
        try:
            out = newton_solve(trial, plan.grid, plan.solver)
        except (NonConvergenceError, LinearSolveError) as exc:
            best = getattr(exc, "best", None)
            if on_failure is not None:
                on_failure(target, exc)
            if best is not None and not np.all(np.isfinite(best.to_vector())):
                raise ContinuationAbort(f"non-finite iterate at sigma={target}", best) from exc
            ds *= 0.5
            record.dsigma = ds
            log.info("sigma=%.12g failed (%s); dsigma -> %g", target, exc, ds)
            if ds < plan.dsigma_min:
                record.truncated = True
                log.warning("dsigma below %g; family truncated at sigma=%.12g", plan.dsigma_min, sigma)
                break
            continue
        if not np.all(np.isfinite(out.state.to_vector())):
            raise ContinuationAbort(f"non-finite solution at sigma={target}", out.state)
        state, sigma = out.state, target
        log.info("sigma=%.12g a=%.10g b=%.10g its=%d", sigma, state.a, state.b, out.iterations)
        accept(out)
    record.final_state = state
    return record


__all__ = [
    "BOOTSTRAP_N",
    "BootstrapResult",
    "ContinuationAbort",
    "ContinuationEntry",
    "ContinuationPlan",
    "ContinuationRecord",
    "DSIGMA0",
    "DSIGMA_MIN",
    "SWEEP_A0",
    "SWEEP_B0",
    "bootstrap_sigma2",
    "continue_family",
    "initial_guess",
    "initial_guess_sigma2",
    "promote",
]
