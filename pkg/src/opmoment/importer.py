"""File importer for opmoment - reads sequence, weight and measure JSON files."""

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

from .atomic import AtomicOVM
from .errors import InvalidWeightFamily, NotHermitian, SchemaError
from .linalg import HERMITIAN_TOL, hermitize
from .moments import OperatorSequence
from .shift import WeightFamily

SCHEMA_VERSION = "1"
KIND_KEYS = {"sequence": "matrices", "weights": "weights", "ovm": "atoms"}


def _element_line(text: str, key: str, index: int) -> int | None:
    """Line number of element `index` of the top-level array `key` in the raw JSON text."""
    start = text.find(f'"{key}"')
    if start < 0:
        return None
    start = text.find("[", start)
    if start < 0:
        return None
    depth = 0
    count = -1
    awaiting = False
    for position in range(start, len(text)):
        char = text[position]
        if char in " \t\r\n":
            continue
        if depth == 1 and awaiting and char != "]":
            awaiting = False
            count += 1
            if count == index:
                return text.count("\n", 0, position) + 1
        if char == "[":
            depth += 1
            awaiting = depth == 1
        elif char == "]":
            depth -= 1
            if depth == 0:
                break
        elif char == "," and depth == 1:
            awaiting = True
    return None


class Document:
    """A parsed JSON input with its raw text kept for error locations."""

    def __init__(self, data: dict, text: str, source: str = "<input>"):
        self.data = data
        self.text = text
        self.source = source

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def error(self, message: str, key: str = "", index: int | None = None) -> SchemaError:
        path = key if index is None else f"{key}[{index}]"
        line = _element_line(self.text, key, index) if key and index is not None else None
        if line is None and key:
            position = self.text.find(f'"{key}"')
            line = self.text.count("\n", 0, position) + 1 if position >= 0 else None
        return SchemaError(message, path=path, line=line)

    def require(self, key: str) -> Any:
        if key not in self.data:
            raise SchemaError(f"Missing required key '{key}'")
        return self.data[key]

    @property
    def kind(self) -> str:
        """Declared kind, or the kind implied by the keys present."""
        declared = self.data.get("kind")
        if declared is not None:
            if declared not in KIND_KEYS:
                raise self.error(f"Unknown kind '{declared}'", "kind")
            return declared
        for kind, key in KIND_KEYS.items():
            if key in self.data and (kind != "weights" or "atoms" not in self.data):
                return kind
        raise SchemaError(f"Cannot tell the file kind: expected one of the keys {sorted(KIND_KEYS.values())}")


def loads(text: str, source: str = "<input>") -> Document:
    """
    Parse JSON text into a Document.

    Raises:
        SchemaError: If the text is not a JSON object of schema version 1
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Invalid JSON: {e.msg}", path=source, line=e.lineno)
    if not isinstance(data, dict):
        raise SchemaError("Top level must be a JSON object", path=source, line=1)
    document = Document(data, text, source)
    version = str(data.get("schema_version", SCHEMA_VERSION))
    if version != SCHEMA_VERSION:
        raise document.error(f"Unsupported schema_version '{version}'", "schema_version")
    return document


def load(file_path: Path) -> Document:
    """Read and parse a JSON input file."""
    return loads(Path(file_path).read_text(encoding="utf-8"), str(file_path))


def _dimension(document: Document) -> tuple[int, str]:
    dim = document.require("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise document.error("dim must be a positive integer", "dim")
    field = document.data.get("field", "real")
    if field not in ("real", "complex"):
        raise document.error("field must be 'real' or 'complex'", "field")
    return dim, field


def _scalar(value, field: str) -> complex:
    if field == "complex":
        if not isinstance(value, list) or len(value) != 2:
            raise ValueError("complex entries must be [re, im] pairs")
        re, im = value
        return complex(float(re), float(im))
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ValueError("real entries must be numbers")
    return complex(float(value), 0.0)


def _matrix(document: Document, raw, dim: int, field: str, key: str, index: int) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != dim:
        raise document.error(f"Expected {dim} rows", key, index)
    rows = []
    for row in raw:
        if not isinstance(row, list) or len(row) != dim:
            raise document.error(f"Expected a {dim} x {dim} matrix", key, index)
        try:
            rows.append([_scalar(value, field) for value in row])
        except (TypeError, ValueError) as e:
            raise document.error(str(e), key, index)
    matrix = np.array(rows, dtype=complex)
    if not np.all(np.isfinite(matrix)):
        raise document.error("Entries must be finite", key, index)
    return matrix


def _matrices(document: Document, key: str, hermitian_tol: float) -> list:
    dim, field = _dimension(document)
    raw = document.require(key)
    if not isinstance(raw, list) or not raw:
        raise document.error(f"'{key}' must be a non-empty list", key)
    result = []
    for index, item in enumerate(raw):
        try:
            result.append(hermitize(_matrix(document, item, dim, field, key, index), hermitian_tol))
        except NotHermitian as e:
            raise document.error(str(e), key, index)
    return result


def parse_sequence(document: Document, hermitian_tol: float = HERMITIAN_TOL) -> OperatorSequence:
    """OperatorSequence from a sequence document."""
    return OperatorSequence(tuple(_matrices(document, "matrices", hermitian_tol)))


def parse_weights(document: Document, hermitian_tol: float = HERMITIAN_TOL) -> WeightFamily:
    """WeightFamily from a weights document, with an optional known norm_bound."""
    weights = _matrices(document, "weights", hermitian_tol)
    bound = document.data.get("norm_bound")
    if bound is not None and (isinstance(bound, bool) or not isinstance(bound, int | float)):
        raise document.error("norm_bound must be a number", "norm_bound")
    try:
        return WeightFamily(tuple(weights), None if bound is None else float(bound))
    except InvalidWeightFamily as e:
        raise SchemaError(str(e), path="weights")


def parse_ovm(document: Document, hermitian_tol: float = HERMITIAN_TOL) -> AtomicOVM:
    """AtomicOVM from a measure document."""
    dim, _ = _dimension(document)
    atoms = document.require("atoms")
    if not isinstance(atoms, list):
        raise document.error("'atoms' must be a list", "atoms")
    for index, atom in enumerate(atoms):
        if isinstance(atom, bool) or not isinstance(atom, int | float):
            raise document.error("atoms must be real numbers", "atoms", index)
    weights = _matrices(document, "weights", hermitian_tol) if atoms else []
    if len(weights) != len(atoms):
        raise document.error(f"{len(atoms)} atoms but {len(weights)} weights", "weights")
    return AtomicOVM(tuple(float(a) for a in atoms), tuple(weights), dim)


def import_file(file_path: Path, hermitian_tol: float = HERMITIAN_TOL):
    """
    Load any supported file.

    Args:
        file_path: Path to a sequence, weights or measure file

    Returns:
        Tuple of (document, payload)
    """
    document = load(file_path)
    parsers = {"sequence": parse_sequence, "weights": parse_weights, "ovm": parse_ovm}
    return document, parsers[document.kind](document, hermitian_tol)
