"""Distributed load and stability checking for lattice modular robots."""

from .domain import Configuration, GroundFacet, Module, Params, external_load, validate
from .jacobi import SolverSettings, lockstep, solve
from .pipeline import RunReport, run_check
from .runtime import Runtime
from .scenario import ScenarioDoc, build_configuration, dump, load, parse
from .tree import build_tree

__all__ = [
    "Configuration", "GroundFacet", "Module", "Params", "external_load", "validate",
    "SolverSettings", "lockstep", "solve", "RunReport", "run_check", "Runtime",
    "ScenarioDoc", "build_configuration", "dump", "load", "parse", "build_tree",
]
