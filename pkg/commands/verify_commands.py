#!/usr/bin/env python3
"""
Lower-bound verification commands
"""

from typing import Any, Dict, List

from commands.common import load_log_needed
from config import Config
from core.constructions import log_needed_construction
from core.verifiers import (
    cross_check_diagonal_path,
    l1_gap_exhaustive,
    min_error_over_multisets,
    verify_support_bound,
)
from utils.logger import get_logger

logger = get_logger(__name__)


class VerifyCommands:
    """Certify the lower bounds on small instances."""

    def __init__(self, config: Config):
        self.config = config

    def get_commands(self) -> List[Dict[str, Any]]:
        """Get all verification commands."""
        return [
            {
                "name": "verify_log_needed",
                "description": "Minimum sample error over all multisets below the size bound",
                "parameters": {"input": {"type": "string", "description": "Instance file from construct"},
                               "dim": {"type": "integer"}, "gamma": {"type": "number"}, "eps": {"type": "number"},
                               "mode": {"type": "string", "enum": ["auto", "exhaustive", "random"]},
                               "samples": {"type": "integer"}, "seed": {"type": "integer"}},
                "required": [],
            },
            {
                "name": "verify_bm",
                "description": "Best coefficients on random sub-threshold supports of cube-simplex pairs",
                "parameters": {"dim": {"type": "integer"}, "delta": {"type": "number"}, "eps": {"type": "number"},
                               "supports": {"type": "integer"}, "support_size": {"type": "integer"},
                               "iterations": {"type": "integer"}, "seed": {"type": "integer"}},
                "required": ["dim", "delta", "eps"],
            },
            {
                "name": "verify_lemma41",
                "description": "Exact l_1 gap over every multiset of size at most 3k",
                "parameters": {"t": {"type": "integer"}, "k": {"type": "integer"}},
                "required": ["t", "k"],
            },
        ]

    async def handle_command(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Handle command requests."""
        if command == "verify_log_needed":
            return await self._log_needed(arguments)
        elif command == "verify_bm":
            return await self._bm(arguments)
        elif command == "verify_lemma41":
            return await self._lemma41(arguments)
        else:
            raise ValueError(f"Unknown command: {command}")

    async def _log_needed(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        if arguments.get("input"):
            inst = load_log_needed(arguments["input"])
        else:
            inst = log_needed_construction(arguments["dim"], arguments["gamma"], arguments["eps"],
                                           arguments.get("padding") or "zero")
        seed = arguments.get("seed", 0)
        report = min_error_over_multisets(
            inst,
            mode=arguments.get("mode") or "auto",
            threshold=self.config.verifier.exhaustive_threshold,
            samples=arguments.get("samples") or self.config.verifier.random_samples,
            seed=seed,
        )
        fast_path_gap = cross_check_diagonal_path(inst, 100, seed)
        document = report.to_dict()
        document["instance"] = inst.params()
        document["diagonal_path_gap"] = fast_path_gap
        return {
            "success": True,
            "holds": report.holds,
            "kind": "lower-bound",
            "result": document,
            "csv": {"header": ["size", "min_error", "witness"], "rows": report.csv_rows()},
            "summary": {"mode": report.mode, "certified": report.certified, "examined": report.examined,
                        "max_size": inst.max_size, "min_error": report.minimum, "eps": report.eps,
                        "diagonal_path_gap": fast_path_gap},
        }

    async def _bm(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        iterations = arguments.get("iterations")
        report = verify_support_bound(
            arguments["dim"], arguments["delta"], arguments["eps"],
            supports=arguments.get("supports") or self.config.verifier.supports,
            support_size=arguments.get("support_size"),
            seed=arguments.get("seed", 0),
            iterations=self.config.verifier.subgradient_iterations if iterations is None else iterations,
        )
        errors = [t.error for t in report.trials]
        return {
            "success": True,
            "holds": report.holds,
            "kind": "lower-bound",
            "result": report.to_dict(),
            "csv": {"header": ["support_size", "best_error", "certificate", "support_bound"],
                    "rows": report.csv_rows()},
            "summary": {"d": report.d, "bound": report.bound, "support_size": report.support_size,
                        "full_support_error": report.full_support_error,
                        "min_error": min(errors) if errors else None,
                        "all_above_eps": report.all_above_eps, "certificates_sound": report.certificates_sound,
                        "certificates_consistent": report.certificates_consistent},
        }

    async def _lemma41(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        report = l1_gap_exhaustive(arguments["t"], arguments["k"])
        return {
            "success": True,
            "holds": report.holds,
            "kind": "lower-bound",
            "result": report.to_dict(),
            "summary": {"t": report.t, "k": report.k, "examined": report.examined,
                        "minimum": str(report.minimum), "bound": str(report.bound),
                        "violations": report.violations},
        }
