#!/usr/bin/env python3
"""
JSON and CSV codecs for decompositions, instances and reports.

JSON floats are written with ``repr`` (shortest round-trip form); CSV floats
with 17 significant digits. Output is UTF-8 with LF line endings and sorted
keys, and carries no timestamps, so equal inputs give equal bytes.
"""

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

import numpy as np

from core.constructions import (
    CubeSimplexInstance,
    LogNeededInstance,
    cube_simplex_construction,
)
from core.decompositions import ContactPairDecomposition, PsdDecomposition

SCHEMA_VERSION = 1
FLOAT_FORMAT = "{:.17g}"

PathLike = Union[str, Path]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Fraction):
        return str(value)
    return value


def dumps(payload: Dict[str, Any]) -> str:
    """Canonical JSON text ending in a newline."""
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(payload: Dict[str, Any], path: Optional[PathLike] = None) -> str:
    """Write canonical JSON to ``path`` (when given) and return the text."""
    text = dumps(payload)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    return text


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    if value is None:
        return ""
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: Optional[PathLike] = None) -> str:
    text = csv_text(header, rows)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text


# ---------------------------------------------------------------------------
# Decompositions
# ---------------------------------------------------------------------------

def decomposition_to_dict(dec: PsdDecomposition) -> Dict[str, Any]:
    return {
        "schema": "decomposition",
        "version": SCHEMA_VERSION,
        "dim": dec.dim,
        "count": dec.count,
        "psd": dec.psd,
        "weights": dec.weights.tolist(),
        "matrices": dec.matrices.tolist(),
        "target": dec.target.tolist(),
    }


def decomposition_from_dict(data: Dict[str, Any]) -> PsdDecomposition:
    if data.get("schema") != "decomposition":
        raise ValueError(f"expected a decomposition document, got schema {data.get('schema')!r}")
    return PsdDecomposition(
        weights=np.asarray(data["weights"], dtype=np.float64),
        matrices=np.asarray(data["matrices"], dtype=np.float64),
        target=np.asarray(data["target"], dtype=np.float64),
        psd=bool(data.get("psd", True)),
    )


def pairs_to_dict(cpd: ContactPairDecomposition) -> Dict[str, Any]:
    return {
        "schema": "contact-pairs",
        "version": SCHEMA_VERSION,
        "dim": cpd.dim,
        "count": cpd.count,
        "balanced": cpd.balanced,
        "weights": cpd.weights.tolist(),
        "u": cpd.u.tolist(),
        "v": cpd.v.tolist(),
    }


def pairs_from_dict(data: Dict[str, Any]) -> ContactPairDecomposition:
    if data.get("schema") != "contact-pairs":
        raise ValueError(f"expected a contact-pairs document, got schema {data.get('schema')!r}")
    return ContactPairDecomposition(
        weights=np.asarray(data["weights"], dtype=np.float64),
        u=np.asarray(data["u"], dtype=np.float64),
        v=np.asarray(data["v"], dtype=np.float64),
        balanced=bool(data.get("balanced", True)),
    )


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

def log_needed_to_dict(inst: LogNeededInstance) -> Dict[str, Any]:
    return {
        "metadata": {"construction": "log-needed", "params": inst.params()},
        "exact": {
            "t": inst.t,
            "k": inst.k,
            "gamma": str(inst.gamma),
            "eps": str(inst.eps),
            "dim_out": inst.dim_out,
            "padding": inst.padding,
            "diagonals": [[str(x) for x in row] for row in inst.diagonals],
            "weights": [str(w) for w in inst.weights_exact],
        },
        "decomposition": decomposition_to_dict(inst.decomposition()),
    }


def log_needed_from_dict(data: Dict[str, Any]) -> LogNeededInstance:
    meta = data.get("metadata", {})
    if meta.get("construction") != "log-needed":
        raise ValueError(f"expected a log-needed instance, got {meta.get('construction')!r}")
    exact = data["exact"]
    return LogNeededInstance(
        t=int(exact["t"]),
        k=int(exact["k"]),
        gamma=Fraction(exact["gamma"]),
        eps=Fraction(exact["eps"]),
        dim_out=int(exact["dim_out"]),
        padding=exact["padding"],
        diagonals=tuple(tuple(Fraction(x) for x in row) for row in exact["diagonals"]),
        weights_exact=tuple(Fraction(w) for w in exact["weights"]),
        requested_dim=int(meta.get("params", {}).get("d", exact["dim_out"])),
    )


def cube_simplex_to_dict(inst: CubeSimplexInstance) -> Dict[str, Any]:
    return {
        "metadata": {"construction": "cube-simplex", "params": inst.params()},
        "pairs": pairs_to_dict(inst.pairs()),
        "decomposition": decomposition_to_dict(inst.decomposition()),
    }


def cube_simplex_from_dict(data: Dict[str, Any]) -> CubeSimplexInstance:
    meta = data.get("metadata", {})
    if meta.get("construction") != "cube-simplex":
        raise ValueError(f"expected a cube-simplex instance, got {meta.get('construction')!r}")
    params = meta["params"]
    return cube_simplex_construction(int(params["d"]), float(params["delta"]))


def decomposition_instance_to_dict(name: str, params: Dict[str, Any], dec: PsdDecomposition,
                                   extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    payload = {"metadata": {"construction": name, "params": dict(params)},
               "decomposition": decomposition_to_dict(dec)}
    if extra:
        payload.update(extra)
    return payload


def envelope(kind: str, result: Dict[str, Any], run_config: Dict[str, Any], version: str) -> Dict[str, Any]:
    """Top-level artifact document: the result plus everything needed to reproduce it."""
    return {"kind": kind, "version": version, "run_config": dict(run_config), "result": result}
