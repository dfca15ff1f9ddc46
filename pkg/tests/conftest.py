import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def reference():
    from squidcoupler.circuit import reference_parameters
    return reference_parameters()


@pytest.fixture(scope="session")
def rate_set(reference):
    from squidcoupler.rates import compute_rate_set
    return compute_rate_set(reference)


@pytest.fixture(scope="session")
def uncoupled():
    """Isolated atom and resonator: the coupler is detached."""
    from squidcoupler.circuit import derive_energies, mode_profiles, reference_parameters, solve_equilibrium
    params = reference_parameters(I0_c=0.0, C_c_total=0.0)
    energies = derive_energies(params)
    eq = solve_equilibrium(energies)
    loaded = energies.with_equilibrium(eq)
    return params, loaded, eq, mode_profiles(loaded)


@pytest.fixture(scope="session")
def fig4_sweep(reference):
    from squidcoupler.sweep import SweepSpec, run_sweep
    return run_sweep(SweepSpec("flux_cpl", -1.0, 1.0, 201, reference, name="fig4"))


ACCEPTANCE: dict[int, tuple[bool, list[str]]] = {}


class CriterionRecorder:
    """Collects every sub-check of a criterion before asserting, so one miss hides nothing."""

    def __init__(self, number: int):
        self.number = number
        self.lines: list[str] = []
        self.ok = True

    def check(self, label: str, value: float, target: float, tol: float) -> None:
        passed = abs(value - target) <= tol
        self.ok &= passed
        self.lines.append(f"{label}: {value:.6g} vs {target:g} ± {tol:g} {'ok' if passed else 'MISS'}")

    def require(self, label: str, passed: bool, detail: str = "") -> None:
        self.ok &= bool(passed)
        self.lines.append(f"{label}{': ' + detail if detail else ''} {'ok' if passed else 'MISS'}")

    def finish(self) -> None:
        ACCEPTANCE[self.number] = (self.ok, self.lines)
        assert self.ok, "; ".join(line for line in self.lines if line.endswith("MISS"))


@pytest.fixture
def criterion():
    return CriterionRecorder


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, lines = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}")
        for line in lines:
            terminalreporter.write_line(f"    {line}")
