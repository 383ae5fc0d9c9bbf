import numpy as np
import pytest

from lsnn.problems import ProblemSpec

UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def constant(value):
    return lambda X: np.full(len(X), float(value))


def simple_problem(beta=(1.0, 0.0), gamma=0.0, f=None, g=None, box=UNIT_SQUARE,
                   exact=None):
    """A hand-made problem with constant ``beta`` and ``gamma``."""
    beta = np.asarray(beta, dtype=np.float64)
    f = f if callable(f) else constant(0.0 if f is None else f)
    g = g if callable(g) else constant(0.0 if g is None else g)
    exact = exact or constant(0.0)
    return ProblemSpec(
        name="test", dim=len(box), box=box,
        beta=lambda X: np.broadcast_to(beta, (len(X), len(beta))).copy(),
        gamma=constant(gamma), f=f, g=g, exact_u=exact, exact_u_beta=constant(0.0),
        region=lambda X: np.ones(len(X), dtype=int), alpha1=0.0, alpha2=0.0,
        discontinuity=(0.0,) * len(box),
    )


@pytest.fixture
def unit_square():
    return UNIT_SQUARE


# --- acceptance summary ---------------------------------------------------

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def verdict(request):
    """``verdict(label, ok, detail)`` records one PASS/FAIL/SKIP line and echoes it."""
    lines = request.config.stash[ACCEPTANCE]

    def record(label, ok, detail=""):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{status} {label}: {detail}".rstrip(": ")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
