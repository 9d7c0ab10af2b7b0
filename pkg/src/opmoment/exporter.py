"""File exporter for opmoment - writes measures, fixtures and reports as JSON."""

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .atomic import AtomicOVM
from .gallery import SEQUENCE, Fixture
from .importer import SCHEMA_VERSION
from .linalg import as_array
from .moments import OperatorSequence
from .shift import WeightFamily
from .verdict import to_jsonable


def _field(matrices) -> str:
    return "complex" if any(np.any(as_array(m).imag != 0) for m in matrices) else "real"


def encode_matrix(matrix, field: str) -> list:
    """Nested lists; complex entries become [re, im] pairs."""
    entries = as_array(matrix)
    if field == "complex":
        return np.stack([entries.real, entries.imag], axis=-1).tolist()
    return entries.real.tolist()


def sequence_to_dict(seq: OperatorSequence) -> dict:
    field = _field(seq.terms)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sequence",
        "dim": seq.dim,
        "field": field,
        "matrices": [encode_matrix(t, field) for t in seq.terms],
    }


def weights_to_dict(family: WeightFamily) -> dict:
    field = _field(family.weights)
    data = {
        "schema_version": SCHEMA_VERSION,
        "kind": "weights",
        "dim": family.dim,
        "field": field,
        "weights": [encode_matrix(w, field) for w in family.weights],
    }
    if family.operator_norm is not None:
        data["norm_bound"] = family.operator_norm
    return data


def ovm_to_dict(E: AtomicOVM) -> dict:
    """
    Export a measure in the AtomicOVM schema.

    Floats are written with the shortest repr that round-trips, so importing
    the result gives back the same atoms and weights bit for bit.
    """
    field = _field(E.weights)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "ovm",
        "dim": E.dim,
        "field": field,
        "atoms": list(E.atoms),
        "weights": [encode_matrix(w, field) for w in E.weights],
    }


def fixture_to_dict(fixture: Fixture) -> dict:
    if fixture.kind == SEQUENCE:
        data = sequence_to_dict(fixture.payload)
    else:
        data = weights_to_dict(fixture.payload)
    data["description"] = fixture.description
    return data


def build_report(
    command: str,
    digest: str,
    verdicts: list,
    tolerances: dict,
    runtime: float,
    results: dict | None = None,
) -> dict:
    """
    Assemble a report.

    Everything except `runtime_seconds` is a function of the inputs, flags
    and tolerances.
    """
    return {
        "command": command,
        "input_digest": digest,
        "passed": all(v.passed for v in verdicts),
        "verdicts": [v.to_dict() for v in verdicts],
        "results": to_jsonable(results or {}),
        "tolerances": tolerances,
        "runtime_seconds": runtime,
        "tool_version": __version__,
    }


def dumps(data: dict) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(data: dict, out_path: Path):
    """Write JSON atomically: a temporary file in the target directory is renamed into place."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(dir=out_path.parent, prefix=f".{out_path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(dumps(data))
        os.replace(temp_name, out_path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise
