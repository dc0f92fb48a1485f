"""Certification and simulation of multi-topic opinion dynamics on directed graphs.

Two linear models couple ``n`` individuals over ``d`` logically dependent
topics through a graph Laplacian ``L`` and a logic matrix ``C``. The package
checks the spectral consensus criteria, computes analytic limits,
integrates the ODEs and compares the two.
"""

from .criteria import (
    ConditionReport,
    StubbornProfile,
    assumption3_check,
    corollary1_alpha_sup,
    corollary2_degree_bound,
    model1_condition,
    model1_stubborn_hurwitz,
    model2_condition,
    model2_stubborn_hurwitz,
    predicted_consensus,
    predicted_limit_stubborn,
)
from .dynamics import assemble, disagreement, integrate, monitor_box_invariance
from .errors import TopicLogicError
from .logic import LogicCertificate, certify_logic, introspection_flow, introspection_limit
from .netgraph import GraphCertificate, SocialGraph, build_graph, certify_graph, graph_from_laplacian
from .scenario import ScenarioConfig, load_fixture, load_scenario, parse_scenario, run, serialize_scenario
from .spectra import Spectrum, eig, eigvals, expm, gershgorin, solve

__version__ = "0.1.0"

__all__ = [
    "ConditionReport", "GraphCertificate", "LogicCertificate", "ScenarioConfig", "SocialGraph",
    "Spectrum", "StubbornProfile", "TopicLogicError", "assemble", "assumption3_check",
    "build_graph", "certify_graph", "certify_logic", "corollary1_alpha_sup",
    "corollary2_degree_bound", "disagreement", "eig", "eigvals", "expm", "gershgorin",
    "graph_from_laplacian", "integrate", "introspection_flow", "introspection_limit",
    "load_fixture", "load_scenario", "model1_condition", "model1_stubborn_hurwitz",
    "model2_condition", "model2_stubborn_hurwitz", "monitor_box_invariance", "parse_scenario",
    "predicted_consensus", "predicted_limit_stubborn", "run", "serialize_scenario", "solve",
]
