#!/usr/bin/env python3
"""
Precondition gate for harness commands

Every command is checked here before it is routed, so invalid parameters
fail fast with a single-line message naming the violated condition.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Set

from core.constructions import log_needed_parameters
from core.verifiers import bm_lower_bound

COMMANDS = (
    "construct_log_needed", "construct_cube_simplex", "construct_symm_counterexample",
    "sample_rudelson", "sample_nonsymm", "sample_lust_piquard", "sample_symmetrization",
    "verify_log_needed", "verify_bm", "verify_lemma41",
    "sweep_rudelson", "sweep_calibrate",
)

PSD_FAMILIES = ("cross-polytope", "log-needed", "symm-counterexample")
PAIR_FAMILIES = ("ball-in-cube", "near-ball", "symm-counterexample")


class PreconditionError(ValueError):
    """A command argument violates the precondition of its operation."""


def _require(arguments: Dict[str, Any], *names: str):
    missing = [n for n in names if arguments.get(n) is None]
    if missing:
        raise PreconditionError(f"missing required parameter(s): {', '.join('--' + m for m in missing)}")


def _check(condition: bool, message: str):
    if not condition:
        raise PreconditionError(message)


def _dimension(d: Any, minimum: int = 2, name: str = "dim"):
    _check(isinstance(d, int) and d >= minimum, f"{name} must be an integer >= {minimum}, got {d}")


def _accuracy(eps: Any, upper: float = 1.0):
    _check(eps is not None and 0 < eps <= upper, f"eps must lie in (0, {upper}], got {eps}")


def _delta_range(d: int, delta: Any):
    limit = math.sqrt(d / 2.0 - 1.0)
    _check(delta is not None and 0 < delta < limit,
           f"delta must lie in (0, sqrt(d/2 - 1)) = (0, {limit:.6g}), got {delta}")


def _log_needed(a: Dict[str, Any]):
    _require(a, "dim", "gamma", "eps")
    try:
        log_needed_parameters(a["dim"], a["gamma"], a["eps"])
    except ValueError as e:
        raise PreconditionError(str(e)) from e
    _check(a.get("padding", "zero") in ("zero", "identity"), f"padding must be zero or identity, got {a.get('padding')}")


def _cube_simplex(a: Dict[str, Any]):
    _require(a, "dim", "delta")
    _dimension(a["dim"], 3)
    _delta_range(a["dim"], a["delta"])


def _symm_counterexample(a: Dict[str, Any]):
    _require(a, "dim")
    _dimension(a["dim"], 3)


def _psd_family(a: Dict[str, Any]):
    if a.get("input"):
        return
    family = a.get("family", "cross-polytope")
    _check(family in PSD_FAMILIES, f"family must be one of {PSD_FAMILIES}, got {family}")
    _require(a, "dim")
    if family == "log-needed":
        _require(a, "gamma", "eps")
        _log_needed(a)
    elif family == "symm-counterexample":
        _dimension(a["dim"], 3)
    else:
        _dimension(a["dim"])


def _rudelson(a: Dict[str, Any]):
    _psd_family(a)
    _check(a.get("k") is not None or a.get("eps") is not None, "either --k or --eps is required")
    if a.get("eps") is not None:
        _accuracy(a["eps"])


def _nonsymm(a: Dict[str, Any]):
    _require(a, "dim", "eps")
    family = a.get("family") or "ball-in-cube"
    if family == "cross-polytope":
        family = "ball-in-cube"
    _check(family in PAIR_FAMILIES, f"family must be one of {PAIR_FAMILIES}, got {family}")
    _dimension(a["dim"], 3 if family != "ball-in-cube" else 2)
    _accuracy(a["eps"])
    if family == "near-ball":
        _delta_range(a["dim"], a.get("delta"))


def _lust_piquard(a: Dict[str, Any]):
    _require(a, "dim")
    _dimension(a["dim"], 1)
    if a.get("p") is not None:
        _check(a["p"] >= 2, f"p must be >= 2, got {a['p']}")


def _symmetrization(a: Dict[str, Any]):
    _psd_family(a)
    _require(a, "k")


def _verify_log_needed(a: Dict[str, Any]):
    if not a.get("input"):
        _log_needed(a)


def _verify_bm(a: Dict[str, Any]):
    _require(a, "dim", "delta", "eps")
    _dimension(a["dim"], 3)
    try:
        bm_lower_bound(a["dim"], a["delta"], a["eps"])
    except ValueError as e:
        raise PreconditionError(str(e)) from e


def _lemma41(a: Dict[str, Any]):
    _require(a, "t", "k")


def _sweep(a: Dict[str, Any]):
    _require(a, "dims", "ks")
    for d in a["dims"]:
        _dimension(d)


def _calibrate(a: Dict[str, Any]):
    _require(a, "dims", "eps")
    _check(len(a["dims"]) >= 2, f"calibration needs at least two dimensions, got {len(a['dims'])}")
    for d in a["dims"]:
        _dimension(d)
    _accuracy(a["eps"])


_CHECKS: Dict[str, Callable[[Dict[str, Any]], None]] = {
    "construct_log_needed": _log_needed,
    "construct_cube_simplex": _cube_simplex,
    "construct_symm_counterexample": _symm_counterexample,
    "sample_rudelson": _rudelson,
    "sample_nonsymm": _nonsymm,
    "sample_lust_piquard": _lust_piquard,
    "sample_symmetrization": _symmetrization,
    "verify_log_needed": _verify_log_needed,
    "verify_bm": _verify_bm,
    "verify_lemma41": _lemma41,
    "sweep_rudelson": _sweep,
    "sweep_calibrate": _calibrate,
}


@dataclass
class PreconditionGuard:
    """Gate that every command passes before it is routed."""

    allowed_commands: Set[str] = field(default_factory=set)

    def __post_init__(self):
        if not self.allowed_commands:
            self.allowed_commands = set(COMMANDS)

    def is_command_allowed(self, command: str) -> bool:
        """Check if a command is known."""
        return command in self.allowed_commands

    def check(self, command: str, arguments: Dict[str, Any]):
        """Raise ``PreconditionError`` when ``arguments`` violate the command's preconditions."""
        if not self.is_command_allowed(command):
            raise PreconditionError(f"unknown command: {command}")
        _CHECKS[command](arguments)

    def violations(self, command: str, arguments: Dict[str, Any]) -> str:
        """The violated precondition as a message, or an empty string."""
        try:
            self.check(command, arguments)
        except PreconditionError as e:
            return str(e)
        return ""
