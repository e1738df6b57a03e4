import pytest

from reconfcheck.domain import ConfigurationError
from reconfcheck.families import tower_overhang
from reconfcheck.jacobi import SolverSettings
from reconfcheck.scenario import (
    ScenarioError, build_configuration, dump, from_configuration, load, parse,
)

from conftest import SCENARIOS

ALL = sorted(SCENARIOS.glob("*/*.yaml"))

GOOD = """\
id: demo
modules:
  - [0, 0, 0, 0]
  - [1, 0, 0, 1]
virtual_modules:
  - [2, 1, 0, 1]
ground_facets:
  - [0, -z]
centroid: 0
params: {elastic_modulus: 2e8}
solver: {beta: 0.5, gamma: 1e-4, max_iterations: 10}
check: {simplified_stability: true}
"""


def test_parse_good_document():
    doc = parse(GOOD)
    assert doc.id == "demo"
    assert doc.virtual_modules == ((2, 1, 0, 1),)
    assert doc.ground_facets == ((0, "-z", False),)
    assert doc.settings() == SolverSettings(beta=0.5, gamma=1e-4, max_iterations=10)
    assert doc.param_values().elastic_modulus == 2e8
    cfg = build_configuration(doc)
    assert cfg.virtual_ids == [2]


@pytest.mark.parametrize("path", ALL, ids=[f"{p.parent.name}/{p.stem}" for p in ALL])
def test_corpus_round_trips(path):
    doc = load(path)
    assert parse(dump(doc)) == doc
    assert dump(doc) == path.read_text()
    build_configuration(doc)


def test_from_configuration_round_trip():
    cfg = tower_overhang(3, 2, virtual=1)
    doc = from_configuration(cfg, "t", SolverSettings(beta=0.5, max_iterations=40), True, "x")
    again = build_configuration(parse(dump(doc)))
    assert again.modules == cfg.modules
    assert again.ground_facets == cfg.ground_facets
    assert parse(dump(doc)).settings() == SolverSettings(beta=0.5, max_iterations=40)


@pytest.mark.parametrize("edit, line", [
    (("centroid: 0", "centroid: 0\ncolour: red"), 10),
    (("solver: {beta: 0.5,", "solver: {speed: 1, beta: 0.5,"), 11),
    (("  - [1, 0, 0, 1]", "  - [1, 0, 1]"), 4),
    (("  - [0, -z]", "  - [0, down]"), 8),
    (("beta: 0.5", "beta: fast"), 11),
    (("  - [1, 0, 0, 1]", "  - [1, 0, 0, one]"), 4),
    (("centroid: 0", "centroid: 0\nid: again"), 10),
])
def test_errors_carry_line_numbers(edit, line):
    text = GOOD.replace(*edit)
    with pytest.raises(ScenarioError) as info:
        parse(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_required_key():
    with pytest.raises(ScenarioError):
        parse(GOOD.replace("centroid: 0\n", ""))


def test_invalid_yaml_is_a_scenario_error():
    with pytest.raises(ScenarioError):
        parse("modules: [[0, 0, 0, 0]\n")


def test_structural_errors_surface_as_configuration_errors():
    doc = parse(GOOD.replace("  - [1, 0, 0, 1]", "  - [1, 5, 0, 1]"))
    with pytest.raises(ConfigurationError):
        build_configuration(doc)


def test_invalid_solver_values_rejected():
    with pytest.raises(ValueError):
        parse(GOOD.replace("beta: 0.5", "beta: 3")).settings()
