import os
import sys
import tempfile
from pathlib import Path

import pytest

# keep the ground-state cache out of the user's home directory
os.environ.setdefault("INLS_CACHE_DIR", tempfile.mkdtemp(prefix="inls-test-cache-"))
sys.path.insert(0, str(Path(__file__).parent))

from inls import PhysParams, RadialGrid, solve_ground_state  # noqa: E402


@pytest.fixture(scope="session")
def params_2d():
    return PhysParams(2, 0.5, 2.0)


@pytest.fixture(scope="session")
def ground_state_2d(params_2d):
    """Production-resolution profile at (N=2, b=0.5, alpha=2)."""
    return solve_ground_state(params_2d, tol=1e-12, grid=RadialGrid(4096, 20.0, 2))


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the lines are repeated in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def report(number, name, passed, detail, elapsed, budget):
        within = elapsed < budget
        ok = passed and within
        line = (f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail} "
                f"[{elapsed:.1f} s, budget {budget:g} s]")
        print(line)
        lines.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
