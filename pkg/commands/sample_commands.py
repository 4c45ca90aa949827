#!/usr/bin/env python3
"""
Sampling commands
"""

import math
from typing import Any, Dict, List

import numpy as np

from commands.common import pair_family, psd_family
from config import Config
from core.decompositions import (
    bm_stability_sample_size,
    diads,
    gamma_of,
    lift_pairs,
    lifted_symmetrization_bounds,
    nonsymmetric_sample_size,
    required_sample_size,
    symmetrize,
)
from core.linalg import operator_norm
from core.sampling import (
    find_good_multiset,
    lust_piquard_diagnostic,
    make_rng,
    nonsymm_find_multiset,
    rudelson_experiment,
    symmetrization_check,
)
from utils.logger import get_logger

logger = get_logger(__name__)

REPLICATE_HEADER = ["replicate", "seed", "error"]


class SampleCommands:
    """Randomized sparsification experiments."""

    def __init__(self, config: Config):
        self.config = config

    def get_commands(self) -> List[Dict[str, Any]]:
        """Get all sampling commands."""
        family = {"type": "string", "description": "Decomposition family or --input file"}
        return [
            {
                "name": "sample_rudelson",
                "description": "Monte Carlo error of k-sample averages; with eps, also search for a good multiset",
                "parameters": {"dim": {"type": "integer"}, "k": {"type": "integer"}, "eps": {"type": "number"},
                               "c": {"type": "number"}, "replicates": {"type": "integer"},
                               "seed": {"type": "integer"}, "family": family, "input": {"type": "string"}},
                "required": [],
            },
            {
                "name": "sample_nonsymm",
                "description": "Lift contact pairs and sample until the lifted error is below eps",
                "parameters": {"dim": {"type": "integer"}, "eps": {"type": "number"}, "c": {"type": "number"},
                               "k": {"type": "integer"}, "delta": {"type": "number"}, "family": family,
                               "max_attempts": {"type": "integer"}, "seed": {"type": "integer"}},
                "required": ["dim", "eps"],
            },
            {
                "name": "sample_lust_piquard",
                "description": "Empirical constant of the Rademacher Schatten-norm inequality on random diads",
                "parameters": {"dim": {"type": "integer"}, "k": {"type": "integer"}, "p": {"type": "number"},
                               "trials": {"type": "integer"}, "seed": {"type": "integer"}},
                "required": ["dim"],
            },
            {
                "name": "sample_symmetrization",
                "description": "Both sides of the Rademacher symmetrization bound",
                "parameters": {"dim": {"type": "integer"}, "k": {"type": "integer"},
                               "replicates": {"type": "integer"}, "seed": {"type": "integer"}, "family": family},
                "required": ["k"],
            },
        ]

    async def handle_command(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Handle command requests."""
        if command == "sample_rudelson":
            return await self._rudelson(arguments)
        elif command == "sample_nonsymm":
            return await self._nonsymm(arguments)
        elif command == "sample_lust_piquard":
            return await self._lust_piquard(arguments)
        elif command == "sample_symmetrization":
            return await self._symmetrization(arguments)
        else:
            raise ValueError(f"Unknown command: {command}")

    def _constant(self, arguments: Dict[str, Any]) -> float:
        c = arguments.get("c")
        return self.config.sampling.constant if c is None else c

    def _replicates(self, arguments: Dict[str, Any]) -> int:
        return arguments.get("replicates") or self.config.sampling.replicates

    async def _rudelson(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        family, dec = psd_family(arguments)
        eps = arguments.get("eps")
        seed = arguments.get("seed", 0)
        gamma = gamma_of(dec)
        norm_a = operator_norm(dec.target)
        k = arguments.get("k")
        if k is None:
            k = required_sample_size(dec.dim, gamma, norm_a, eps, self._constant(arguments))

        report = rudelson_experiment(dec, k, self._replicates(arguments), seed, self.config.sampling.z,
                                     self.config.sampling.workers, eps)
        document: Dict[str, Any] = {"family": family, "gamma": gamma, "norm_a": norm_a,
                                    "report": report.to_dict()}
        holds = True
        if eps is not None:
            search = find_good_multiset(dec, k, eps, arguments.get("max_attempts") or self.config.sampling.max_attempts,
                                        seed)
            document["search"] = search.to_dict()
            holds = search.success
        return {
            "success": True,
            "holds": holds,
            "kind": "experiment",
            "result": document,
            "csv": {"header": REPLICATE_HEADER, "rows": report.csv_rows()},
            "summary": {"family": family, "d": dec.dim, "k": k, "gamma": gamma, "mean": report.mean,
                        "ci_low": report.ci_low, "ci_high": report.ci_high,
                        **({"search_success": holds} if eps is not None else {})},
        }

    async def _nonsymm(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        family, cpd, r = pair_family(arguments)
        eps = arguments["eps"]
        c = self._constant(arguments)
        d = cpd.dim
        lifted = lift_pairs(cpd, self.config.validation.tolerance)
        k = arguments.get("k")
        if k is None:
            if r is not None and r <= 2:
                k = bm_stability_sample_size(d, r, eps, c)
            else:
                data = symmetrize(lifted.decomposition())
                k = nonsymmetric_sample_size(d, data.gamma, data.b, eps, c)

        result = nonsymm_find_multiset(cpd, k, eps, arguments.get("max_attempts") or self.config.sampling.max_attempts,
                                       arguments.get("seed", 0), self.config.validation.tolerance)
        document: Dict[str, Any] = {"family": family, "k": k, "r": r, "search": result.to_dict()}
        if r is not None:
            bounds = lifted_symmetrization_bounds(lifted, r)
            document["lifted_bounds"] = {"gamma": bounds.gamma, "b": bounds.b, "gamma_bound": bounds.gamma_bound,
                                         "b_bound": bounds.b_bound, "within": bounds.within}
        g = result.guarantees or result.best_guarantees
        return {
            "success": True,
            "holds": result.success and result.within_bounds,
            "kind": "experiment",
            "result": document,
            "summary": {"family": family, "d": d, "k": k, "attempts": result.attempts, "found": result.success,
                        "err_a": g.err_a, "bal_u": g.bal_u, "bal_v": g.bal_v, "lifted_error": g.lifted_error,
                        "balance_limit": eps / math.sqrt(d)},
        }

    async def _lust_piquard(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        d = arguments["dim"]
        count = arguments.get("k") or d
        seed = arguments.get("seed", 0)
        rng = make_rng(seed)
        u = rng.standard_normal((count, d))
        v = rng.standard_normal((count, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        matrices = d * diads(u, v)
        ratio = lust_piquard_diagnostic(matrices, arguments.get("p"), arguments.get("trials") or 200, seed)
        return {
            "success": True,
            "holds": math.isfinite(ratio),
            "kind": "diagnostic",
            "result": {"d": d, "matrices": count, "p": arguments.get("p"), "ratio": ratio},
            "summary": {"d": d, "matrices": count, "ratio": ratio},
        }

    async def _symmetrization(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        family, dec = psd_family(arguments)
        check = symmetrization_check(dec, arguments["k"], self._replicates(arguments), arguments.get("seed", 0))
        return {
            "success": True,
            "holds": check.holds,
            "kind": "diagnostic",
            "result": {"family": family, "k": arguments["k"], **check.to_dict()},
            "summary": {"family": family, "d": dec.dim, "k": arguments["k"], "lhs": check.lhs, "rhs": check.rhs,
                        "stderr": check.stderr},
        }
