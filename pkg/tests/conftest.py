import numpy as np
import pytest

from illposed.spectral import make_grid, random_bandlimited  # noqa: F401  (shared helper)


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture
def grid_pi():
    return make_grid(np.pi, 64)


# acceptance criterion -> (passed, detail); printed once at the end of the run
ACCEPTANCE: dict = {}


def record(criterion: str, passed: bool, detail: str) -> None:
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        passed = passed and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
