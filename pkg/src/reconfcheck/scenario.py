"""Scenario documents: a small YAML schema describing one reconfiguration step.

Example::

    id: tower-overhang
    description: column of three with a two-block overhang planned
    modules:            # [id, x, y, z] in lattice cells
      - [0, 0, 0, 0]
      - [1, 0, 0, 1]
    virtual_modules:    # planned modules, emulated by a real neighbor
      - [2, 1, 0, 1]
    ground_facets:      # [id, direction] or [id, direction, fixed]
      - [0, -z]
    centroid: 0
    params: {mass: 0.06106}               # optional Params overrides (SI units)
    solver: {max_iterations: 2000, beta: 0.5}
    check: {simplified_stability: true}

Unknown keys and malformed entries raise :class:`ScenarioError` carrying
the 1-based line number of the offending node.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .domain import DIRECTIONS, Configuration, ConfigurationError, GroundFacet, Module, Params, validate
from .jacobi import SolverSettings

TOP_KEYS = ("id", "description", "modules", "virtual_modules", "ground_facets", "centroid", "params", "solver", "check")
SOLVER_KEYS = ("max_iterations", "beta", "gamma", "tolerance", "report_every")
CHECK_KEYS = ("simplified_stability",)
PARAM_KEYS = tuple(f.name for f in dataclasses.fields(Params))


class ScenarioError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ScenarioDoc:
    id: str
    modules: tuple[tuple[int, int, int, int], ...]
    centroid: int
    virtual_modules: tuple[tuple[int, int, int, int], ...] = ()
    ground_facets: tuple[tuple[int, str, bool], ...] = ()
    description: str = ""
    params: tuple[tuple[str, float], ...] = ()
    solver: tuple[tuple[str, float], ...] = ()
    simplified_stability: bool = False

    def settings(self) -> SolverSettings:
        return SolverSettings(**dict(self.solver))

    def param_values(self) -> Params:
        return Params(**dict(self.params))

    def replace(self, **changes) -> "ScenarioDoc":
        return dataclasses.replace(self, **changes)


def build_configuration(doc: ScenarioDoc) -> Configuration:
    mods = [Module(i, (x, y, z)) for i, x, y, z in doc.modules]
    mods += [Module(i, (x, y, z), virtual=True) for i, x, y, z in doc.virtual_modules]
    facets = tuple(GroundFacet(i, d, fixed) for i, d, fixed in doc.ground_facets)
    known = {m.id for m in mods}
    for f in facets:
        if f.module not in known:
            raise ConfigurationError(f"ground facet on unknown module {f.module}")
    if doc.centroid not in known:
        raise ConfigurationError(f"centroid {doc.centroid} is not a module")
    return validate(Configuration(tuple(sorted(mods)), facets, doc.centroid, doc.param_values()))


# ------------------------------------------------------------------ parse


def _line(node) -> int:
    return node.start_mark.line + 1


def _scalar(node, kind, what):
    if not isinstance(node, yaml.ScalarNode):
        raise ScenarioError(f"{what} must be a scalar", _line(node))
    value = yaml.safe_load(yaml.serialize(node))
    if kind is float:
        if isinstance(value, str):
            # YAML 1.1 reads exponent-only literals such as 1e-4 as strings
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{what} must be a number, got {node.value!r}", _line(node))
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{what} must be an integer, got {node.value!r}", _line(node))
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{what} must be true or false, got {node.value!r}", _line(node))
        return value
    return str(node.value)


def _mapping(node, allowed, what) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise ScenarioError(f"{what} must be a mapping", _line(node))
    out = {}
    for k, v in node.value:
        key = k.value
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r} in {what}", _line(k))
        if key in out:
            raise ScenarioError(f"duplicate key {key!r} in {what}", _line(k))
        out[key] = v
    return out


def _sequence(node, what):
    if not isinstance(node, yaml.SequenceNode):
        raise ScenarioError(f"{what} must be a list", _line(node))
    return node.value


def _cells(node, what):
    out = []
    for item in _sequence(node, what):
        vals = _sequence(item, f"{what} entry")
        if len(vals) != 4:
            raise ScenarioError(f"{what} entry must be [id, x, y, z]", _line(item))
        out.append(tuple(_scalar(v, int, f"{what} entry") for v in vals))
    return tuple(out)


def _facets(node):
    out = []
    for item in _sequence(node, "ground_facets"):
        vals = _sequence(item, "ground_facets entry")
        if len(vals) not in (2, 3):
            raise ScenarioError("ground_facets entry must be [id, direction] or [id, direction, fixed]", _line(item))
        mid = _scalar(vals[0], int, "ground facet module")
        d = _scalar(vals[1], str, "ground facet direction")
        if d not in DIRECTIONS:
            raise ScenarioError(f"bad facet direction {d!r}", _line(vals[1]))
        fixed = False
        if len(vals) == 3:
            if vals[2].value != "fixed":
                raise ScenarioError(f"third facet field must be 'fixed', got {vals[2].value!r}", _line(vals[2]))
            fixed = True
        out.append((mid, d, fixed))
    return tuple(out)


def parse(text: str) -> ScenarioDoc:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                            None if mark is None else mark.line + 1) from None
    if root is None:
        raise ScenarioError("empty scenario", 1)
    top = _mapping(root, TOP_KEYS, "scenario")
    for key in ("id", "modules", "centroid"):
        if key not in top:
            raise ScenarioError(f"missing required key {key!r}", _line(root))
    kw = {
        "id": _scalar(top["id"], str, "id"),
        "modules": _cells(top["modules"], "modules"),
        "centroid": _scalar(top["centroid"], int, "centroid"),
    }
    if "description" in top:
        kw["description"] = _scalar(top["description"], str, "description")
    if "virtual_modules" in top:
        kw["virtual_modules"] = _cells(top["virtual_modules"], "virtual_modules")
    if "ground_facets" in top:
        kw["ground_facets"] = _facets(top["ground_facets"])
    if "params" in top:
        m = _mapping(top["params"], PARAM_KEYS, "params")
        kw["params"] = tuple((k, _scalar(v, float, f"params.{k}")) for k, v in sorted(m.items()))
        try:
            Params(**dict(kw["params"]))
        except ValueError as exc:
            raise ScenarioError(str(exc), _line(top["params"])) from None
    if "solver" in top:
        m = _mapping(top["solver"], SOLVER_KEYS, "solver")
        vals = []
        for k, v in sorted(m.items()):
            kind = int if k in ("max_iterations", "report_every") else float
            vals.append((k, _scalar(v, kind, f"solver.{k}")))
        kw["solver"] = tuple(vals)
        try:
            SolverSettings(**dict(vals))
        except ValueError as exc:
            raise ScenarioError(str(exc), _line(top["solver"])) from None
    if "check" in top:
        m = _mapping(top["check"], CHECK_KEYS, "check")
        if "simplified_stability" in m:
            kw["simplified_stability"] = _scalar(m["simplified_stability"], bool, "check.simplified_stability")
    return ScenarioDoc(**kw)


def load(path: str | Path) -> ScenarioDoc:
    return parse(Path(path).read_text())


# ------------------------------------------------------------------- dump


def _num(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def dump(doc: ScenarioDoc) -> str:
    lines = [f"id: {_quote(doc.id)}"]
    if doc.description:
        lines.append(f"description: {_quote(doc.description)}")
    lines.append("modules:")
    lines += [f"  - [{i}, {x}, {y}, {z}]" for i, x, y, z in doc.modules]
    if doc.virtual_modules:
        lines.append("virtual_modules:")
        lines += [f"  - [{i}, {x}, {y}, {z}]" for i, x, y, z in doc.virtual_modules]
    if doc.ground_facets:
        lines.append("ground_facets:")
        lines += [f"  - [{i}, {d}{', fixed' if fixed else ''}]" for i, d, fixed in doc.ground_facets]
    lines.append(f"centroid: {doc.centroid}")
    if doc.params:
        lines.append("params: {" + ", ".join(f"{k}: {_num(v)}" for k, v in doc.params) + "}")
    if doc.solver:
        lines.append("solver: {" + ", ".join(f"{k}: {_num(v)}" for k, v in doc.solver) + "}")
    if doc.simplified_stability:
        lines.append("check: {simplified_stability: true}")
    return "\n".join(lines) + "\n"


def _quote(s: str) -> str:
    return yaml.safe_dump(s, default_style='"', width=10**6).strip().removesuffix("\n...")


def from_configuration(config: Configuration, id: str, settings: SolverSettings | None = None,
                       simplified: bool = False, description: str = "") -> ScenarioDoc:
    """Scenario document describing an existing configuration."""
    real = tuple((m.id, *m.pos) for m in sorted(config.modules) if not m.virtual)
    virt = tuple((m.id, *m.pos) for m in sorted(config.modules) if m.virtual)
    facets = tuple((f.module, f.direction, f.fixed) for f in config.ground_facets)
    defaults = Params()
    params = tuple((f.name, getattr(config.params, f.name)) for f in dataclasses.fields(Params)
                   if getattr(config.params, f.name) != getattr(defaults, f.name))
    solver = ()
    if settings is not None:
        base = SolverSettings()
        solver = tuple(sorted((k, getattr(settings, k)) for k in SOLVER_KEYS if getattr(settings, k) != getattr(base, k)))
    return ScenarioDoc(id, real, config.centroid, virt, facets, description, tuple(sorted(params)), solver, simplified)
