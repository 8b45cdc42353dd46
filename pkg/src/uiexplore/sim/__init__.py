"""Deterministic simulated mobile device."""

from .environment import Environment, InvalidAction, TransitionResult, UnknownPredicate, VirtualClock
from .scenario import (
    DanglingReference,
    InvalidProbability,
    Scenario,
    ScenarioError,
    SchemaError,
    ScreenDef,
    load_scenario,
)

__all__ = [
    "DanglingReference",
    "Environment",
    "InvalidAction",
    "InvalidProbability",
    "Scenario",
    "ScenarioError",
    "SchemaError",
    "ScreenDef",
    "TransitionResult",
    "UnknownPredicate",
    "VirtualClock",
    "load_scenario",
]
