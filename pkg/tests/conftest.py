from __future__ import annotations

import pytest

from latentdx.model import REFERENCE_VALUES, paquid_spec
from latentdx.simulate import SimulationDesign, simulate_cohort


@pytest.fixture(scope="session")
def spec():
    return paquid_spec()


@pytest.fixture(scope="session")
def truth(spec):
    return spec.parameters(REFERENCE_VALUES)


@pytest.fixture(scope="session")
def small_cohort(spec, truth):
    cohort, _, _ = simulate_cohort(spec, truth, SimulationDesign(40, seed=11))
    return cohort


_VERDICTS: list[str] = []


def _record(number: int, name: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else "")
    _VERDICTS.append(line)
    print(line)
    return ok


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line; the lines are repeated in the summary."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
