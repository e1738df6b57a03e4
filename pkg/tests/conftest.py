from pathlib import Path

import pytest

from reconfcheck.scenario import build_configuration, load

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def scenario_path(group: str, name: str) -> Path:
    return SCENARIOS / group / f"{name}.yaml"


def scenario_config(group: str, name: str):
    return build_configuration(load(scenario_path(group, name)))


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, passed: bool, text: str) -> bool:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {text}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
