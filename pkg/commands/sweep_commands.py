#!/usr/bin/env python3
"""
Grid sweeps and constant calibration
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

from config import Config
from core.decompositions import cross_polytope_decomposition, required_sample_size
from core.sampling import derive_seed, rudelson_experiment, scaling_fit
from utils.logger import get_logger

logger = get_logger(__name__)

SWEEP_HEADER = ["d", "k", "replicates", "seed", "mean", "std", "ci_low", "ci_high"]
SLOPE_TARGET = -0.5
SLOPE_TOLERANCE = 0.1
MIN_R_SQUARED = 0.95
MAX_DOUBLINGS = 20
INITIAL_CONSTANT = 1.0 / 64


@dataclass
class CalibrationResult:
    """Smallest constant on the doubling grid that met the accuracy at the target quantile."""
    c: float
    eps: float
    quantile: float
    dims: List[int]
    history: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"c": self.c, "eps": self.eps, "quantile": self.quantile, "dims": list(self.dims),
                "history": list(self.history)}


def calibrate_constant(dims: Sequence[int], eps: float, target_quantile: float = 0.5,
                       replicates: int = 200, seed: int = 0, start: float = INITIAL_CONSTANT,
                       max_doublings: int = MAX_DOUBLINGS) -> CalibrationResult:
    """
    Doubling search for c on cross-polytope decompositions (gamma = d, ||A|| = 1).

    At each c, every dimension runs with k = required_sample_size(d, d, 1, eps, c);
    c is accepted once the ``target_quantile`` of the replicate errors is at
    most eps in every dimension. Dimension d always draws from the same
    derived seed, so different eps reuse the same random streams.
    """
    if len(dims) < 2:
        raise ValueError(f"calibration needs at least two dimensions, got {len(dims)}")
    if not 0 < target_quantile < 1:
        raise ValueError(f"target quantile must lie in (0, 1), got {target_quantile}")
    decompositions = {d: cross_polytope_decomposition(d) for d in dims}
    history: List[Dict[str, Any]] = []
    c = start
    for _ in range(max_doublings + 1):
        quantiles = {}
        for d in dims:
            k = required_sample_size(d, d, 1.0, eps, c)
            report = rudelson_experiment(decompositions[d], k, replicates, derive_seed(seed, d), eps=eps)
            quantiles[d] = {"k": k, "quantile_error": report.quantile(target_quantile)}
        accepted = all(q["quantile_error"] <= eps for q in quantiles.values())
        history.append({"c": c, "accepted": accepted, "dims": {str(d): q for d, q in quantiles.items()}})
        logger.debug(f"calibration c={c:.6g}: {'accepted' if accepted else 'rejected'}")
        if accepted:
            return CalibrationResult(c, eps, target_quantile, list(dims), history)
        c *= 2.0
    raise ValueError(f"calibration did not converge within {max_doublings} doublings (last c={c / 2:.6g})")


class SweepCommands:
    """Parameter grids over the sampling experiments."""

    def __init__(self, config: Config):
        self.config = config

    def get_commands(self) -> List[Dict[str, Any]]:
        """Get all sweep commands."""
        return [
            {
                "name": "sweep_rudelson",
                "description": "Mean sample error of cross-polytope decompositions over a (d, k) grid",
                "parameters": {"dims": {"type": "array"}, "ks": {"type": "array"},
                               "replicates": {"type": "integer"}, "seed": {"type": "integer"}},
                "required": ["dims", "ks"],
            },
            {
                "name": "sweep_calibrate",
                "description": "Estimate the absolute constant of the sample-size rule",
                "parameters": {"dims": {"type": "array"}, "eps": {"type": "number"},
                               "quantile": {"type": "number"}, "replicates": {"type": "integer"},
                               "seed": {"type": "integer"}},
                "required": ["dims", "eps"],
            },
        ]

    async def handle_command(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Handle command requests."""
        if command == "sweep_rudelson":
            return await self._rudelson(arguments)
        elif command == "sweep_calibrate":
            return await self._calibrate(arguments)
        else:
            raise ValueError(f"Unknown command: {command}")

    async def _rudelson(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        replicates = arguments.get("replicates") or self.config.sampling.replicates
        seed = arguments.get("seed", 0)
        rows: List[List[Any]] = []
        fits: Dict[str, Any] = {}
        cell = 0
        for d in arguments["dims"]:
            dec = cross_polytope_decomposition(d)
            means = []
            for k in arguments["ks"]:
                cell_seed = derive_seed(seed, cell)
                report = rudelson_experiment(dec, k, replicates, cell_seed, self.config.sampling.z,
                                             self.config.sampling.workers)
                rows.append([d, k, replicates, cell_seed, report.mean, report.std, report.ci_low, report.ci_high])
                means.append(report.mean)
                cell += 1
            if len(arguments["ks"]) >= 2:
                fits[str(d)] = scaling_fit(arguments["ks"], means).to_dict()

        holds = all(abs(f["slope"] - SLOPE_TARGET) <= SLOPE_TOLERANCE and f["r_squared"] >= MIN_R_SQUARED
                    for f in fits.values())
        return {
            "success": True,
            "holds": holds,
            "kind": "sweep",
            "result": {"rows": [dict(zip(SWEEP_HEADER, r)) for r in rows], "fits": fits},
            "csv": {"header": SWEEP_HEADER, "rows": rows},
            "summary": {f"slope d={d}": f["slope"] for d, f in fits.items()},
        }

    async def _calibrate(self, arguments: Dict[str, Any]) -> Dict[str, Any]:
        result = calibrate_constant(
            arguments["dims"], arguments["eps"],
            target_quantile=arguments.get("quantile") or 0.5,
            replicates=arguments.get("replicates") or self.config.sampling.replicates,
            seed=arguments.get("seed", 0),
        )
        return {
            "success": True,
            "holds": True,
            "kind": "calibration",
            "result": result.to_dict(),
            "summary": {"c": result.c, "eps": result.eps, "quantile": result.quantile,
                        "evaluations": len(result.history)},
        }
