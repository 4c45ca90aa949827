#!/usr/bin/env python3
"""
Helpers shared by the command groups: building the named decomposition
families and reading instances back from artifact files.
"""

from typing import Any, Dict, Optional, Tuple

from core.constructions import (
    LogNeededInstance,
    log_needed_construction,
    near_ball_contact_pairs,
    symmetrization_counterexample,
    symmetrization_counterexample_pairs,
)
from core.decompositions import (
    ContactPairDecomposition,
    PsdDecomposition,
    ball_in_cube_pairs,
    cross_polytope_decomposition,
)
from core.serialization import decomposition_from_dict, log_needed_from_dict, read_json


def unwrap(document: Dict[str, Any]) -> Dict[str, Any]:
    """Strip the artifact envelope when present."""
    if "result" in document and "kind" in document:
        return document["result"]
    return document


def load_decomposition(path: str) -> PsdDecomposition:
    """A decomposition from a bare decomposition file or any instance artifact."""
    document = unwrap(read_json(path))
    if document.get("schema") == "decomposition":
        return decomposition_from_dict(document)
    if "decomposition" in document:
        return decomposition_from_dict(document["decomposition"])
    raise ValueError(f"{path} holds no decomposition")


def load_log_needed(path: str) -> LogNeededInstance:
    return log_needed_from_dict(unwrap(read_json(path)))


def psd_family(arguments: Dict[str, Any]) -> Tuple[str, PsdDecomposition]:
    """The decomposition a sampling command runs on."""
    if arguments.get("input"):
        return "input", load_decomposition(arguments["input"])
    family = arguments.get("family") or "cross-polytope"
    d = arguments["dim"]
    if family == "cross-polytope":
        return family, cross_polytope_decomposition(d)
    if family == "log-needed":
        inst = log_needed_construction(d, arguments["gamma"], arguments["eps"], arguments.get("padding", "zero"))
        return family, inst.decomposition()
    if family == "symm-counterexample":
        return family, symmetrization_counterexample(d, arguments.get("delta") or 0.0)
    raise ValueError(f"Unknown decomposition family: {family}")


def pair_family(arguments: Dict[str, Any]) -> Tuple[str, ContactPairDecomposition, Optional[float]]:
    """Contact pairs for the non-symmetric sampler and the distance r of their body when known."""
    family = arguments.get("family") or "ball-in-cube"
    if family == "cross-polytope":
        family = "ball-in-cube"
    d = arguments["dim"]
    if family == "ball-in-cube":
        return family, ball_in_cube_pairs(d), 1.0
    if family == "near-ball":
        cpd, r = near_ball_contact_pairs(d, arguments["delta"])
        return family, cpd, r
    if family == "symm-counterexample":
        return family, symmetrization_counterexample_pairs(d, arguments.get("delta") or 0.0), None
    raise ValueError(f"Unknown contact-pair family: {family}")
