"""Swarm collective-perception simulator and neuroevolution workbench."""

from .arena import Color, TileGrid, generate_pattern, invert, problem_difficulty
from .mechanisms import EvolvedANN, MajorityRule, VoterModel, make_mechanism
from .simulation import Scenario, SimParams, simulate, simulate_many

__version__ = "0.1.0"

__all__ = [
    "Color",
    "TileGrid",
    "generate_pattern",
    "invert",
    "problem_difficulty",
    "EvolvedANN",
    "MajorityRule",
    "VoterModel",
    "make_mechanism",
    "Scenario",
    "SimParams",
    "simulate",
    "simulate_many",
]
