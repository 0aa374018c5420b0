import numpy as np
import pytest

from dnls_blowup.continuation import ContinuationPlan, continue_family, initial_guess_sigma2, promote
from dnls_blowup.equation import GridSpec
from dnls_blowup.solver import SolveOutcome, newton_solve

# seed of the sigma = 2 bootstrap sweep that converges on every mesh we use
SEED = (1.5, 1.5)


@pytest.fixture(scope="session")
def sigma2_small():
    """Converged sigma = 2 profile on a 2000-interval mesh: (outcome, grid)."""
    grid = GridSpec(2000)
    out = newton_solve(initial_guess_sigma2(grid, *SEED), grid)
    return out, grid


@pytest.fixture(scope="session")
def sigma2_ladder():
    """The sigma = 2 solution on N = 1000 * 2^k, each seeded from the previous mesh."""
    sols = []
    state, prev = None, None
    for n in (1000, 2000, 4000, 8000, 16000):
        grid = GridSpec(n)
        guess = initial_guess_sigma2(grid, *SEED) if state is None else promote(state, prev, grid)
        out = newton_solve(guess, grid)
        sols.append((out, grid))
        state, prev = out.state, grid
    return sols


@pytest.fixture(scope="session")
def sigma14_small(sigma2_small):
    """sigma = 1.4 profile (eps > 0) continued from sigma2_small: (outcome, grid)."""
    out, grid = sigma2_small
    rec = continue_family(ContinuationPlan(2.0, 1.4, grid=grid), out)
    return SolveOutcome(rec.final_state, rec.entries[-1].iterations, rec.entries[-1].final_residual, {}), grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, filled by test_acceptance and printed at the end
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
