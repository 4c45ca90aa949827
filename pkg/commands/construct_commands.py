#!/usr/bin/env python3
"""
Construction commands
"""

from typing import Any, Dict, List

from config import Config
from core.constructions import (
    cube_simplex_construction,
    cube_simplex_invariants,
    log_needed_construction,
    symmetrization_counterexample,
    symmetrization_counterexample_pairs,
)
from core.decompositions import (
    symmetrize,
    symmetrize_contact_pairs,
    validate_johns_position,
    validate_psd_decomposition,
)
from core.linalg import operator_norm
from core.serialization import (
    cube_simplex_to_dict,
    decomposition_instance_to_dict,
    log_needed_to_dict,
    pairs_to_dict,
)
from utils.logger import get_logger

logger = get_logger(__name__)


class ConstructCommands:
    """Emit the explicit constructions as validated instances."""

    def __init__(self, config: Config):
        self.config = config

    def get_commands(self) -> List[Dict[str, Any]]:
        """Get all construction commands."""
        return [
            {
                "name": "construct_log_needed",
                "description": "Diagonal PSD family needing logarithmically many samples",
                "parameters": {
                    "dim": {"type": "integer", "description": "Target dimension d >= 8"},
                    "gamma": {"type": "number", "description": "Norm scale gamma >= 1"},
                    "eps": {"type": "number", "description": "Accuracy in (0, 1/16)"},
                    "padding": {"type": "string", "default": "zero", "enum": ["zero", "identity"]},
                },
                "required": ["dim", "gamma", "eps"],
            },
            {
                "name": "construct_cube_simplex",
                "description": "Simplices around the cube's facet centres as contact pairs",
                "parameters": {
                    "dim": {"type": "integer", "description": "Dimension d > 2"},
                    "delta": {"type": "number", "description": "Simplex radius in (0, sqrt(d/2 - 1))"},
                },
                "required": ["dim", "delta"],
            },
            {
                "name": "construct_symm_counterexample",
                "description": "Family whose PSD symmetrisation has b > 1",
                "parameters": {
                    "dim": {"type": "integer", "description": "Dimension d >= 3"},
                    "delta": {"type": "number", "default": 0.1},
                },
                "required": ["dim"],
            },
        ]

    async def handle_command(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Handle command requests."""
        if command == "construct_log_needed":
            return await self._log_needed(arguments)
        elif command == "construct_cube_simplex":
            return await self._cube_simplex(arguments)
        elif command == "construct_symm_counterexample":
            return await self._symm_counterexample(arguments)
        else:
            raise ValueError(f"Unknown command: {command}")

    async def _log_needed(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        inst = log_needed_construction(arguments["dim"], arguments["gamma"], arguments["eps"],
                                       arguments.get("padding") or "zero")
        dec = inst.decomposition()
        report = validate_psd_decomposition(dec, self.config.validation.tolerance,
                                            self.config.validation.psd_tolerance)
        gamma = float(inst.gamma)
        max_norm = max(operator_norm(q) for q in dec.matrices)
        expected_trace = inst.gamma * (inst.dim_out if inst.padding == "identity" else inst.dim)
        traces_exact = all(tr == expected_trace for tr in inst.exact_traces()[: inst.t + 1])
        holds = report.valid and max_norm <= 2 * gamma and traces_exact

        document = log_needed_to_dict(inst)
        document["validation"] = report.to_dict()
        document["checks"] = {"max_norm": max_norm, "norm_limit": 2 * gamma,
                              "trace": str(expected_trace), "traces_exact": traces_exact}
        return {
            "success": True,
            "holds": holds,
            "kind": "instance",
            "result": document,
            "summary": {"t": inst.t, "k": inst.k, "members": inst.count, "size_bound": inst.size_bound,
                        "max_norm": max_norm, "valid": report.valid, "traces_exact": traces_exact},
        }

    async def _cube_simplex(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        inst = cube_simplex_construction(arguments["dim"], arguments["delta"])
        tol = self.config.validation.tolerance
        invariants = cube_simplex_invariants(inst)
        pairs_report = validate_johns_position(inst.pairs(), tol)
        balanced_report = validate_johns_position(symmetrize_contact_pairs(inst.pairs()), tol)
        dec_report = validate_psd_decomposition(inst.decomposition(), tol)
        holds = (all(v <= tol for v in invariants.values())
                 and pairs_report.valid and balanced_report.valid and dec_report.valid)

        document = cube_simplex_to_dict(inst)
        document["validation"] = {
            "invariants": invariants,
            "pairs": pairs_report.to_dict(),
            "sign_symmetrised_pairs": balanced_report.to_dict(),
            "decomposition": dec_report.to_dict(),
        }
        return {
            "success": True,
            "holds": holds,
            "kind": "instance",
            "result": document,
            "summary": {"d": inst.d, "d_prime": inst.d_prime, "pairs": inst.count,
                        "identity_residual": dec_report.checked["target_residual"], **invariants},
        }

    async def _symm_counterexample(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        d = arguments["dim"]
        delta = arguments.get("delta")
        delta = 0.1 if delta is None else delta
        dec = symmetrization_counterexample(d, delta)
        report = validate_psd_decomposition(dec, self.config.validation.tolerance)
        data = symmetrize(dec)
        pairs = symmetrization_counterexample_pairs(d, delta)
        pairs_report = validate_johns_position(pairs, self.config.validation.tolerance)
        logger.info(f"symmetrisation of d={d}, delta={delta}: gamma={data.gamma:.6g}, b={data.b:.6g}")

        document = decomposition_instance_to_dict(
            "symm-counterexample", {"d": d, "delta": delta}, dec,
            extra={
                "symmetrization": {"gamma": data.gamma, "b": data.b, "B_diagonal": data.B.diagonal().tolist()},
                "pairs": pairs_to_dict(pairs),
                "validation": {"decomposition": report.to_dict(), "pairs": pairs_report.to_dict()},
            },
        )
        return {
            "success": True,
            "holds": report.valid and pairs_report.valid,
            "kind": "instance",
            "result": document,
            "summary": {"d": d, "delta": delta, "members": dec.count, "gamma": data.gamma, "b": data.b,
                        "b_exceeds_one": data.b > 1.0},
        }
