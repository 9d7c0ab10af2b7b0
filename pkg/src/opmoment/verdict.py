"""Structured analysis results."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class Verdict:
    """Outcome of an analysis with its evidence.

    `margins` holds numerical distances from the decision threshold,
    `certificates` holds the objects that justify the outcome (witness
    vectors, recovered measures, factors) and `diagnostics` holds
    human-readable notes. Sub-analyses are kept in `children`.
    """

    name: str
    passed: bool
    margins: dict[str, float] = field(default_factory=dict)
    certificates: dict[str, Any] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    children: list["Verdict"] = field(default_factory=list)

    def child(self, name: str) -> "Verdict":
        for verdict in self.children:
            if verdict.name == name:
                return verdict
        raise KeyError(name)

    def to_dict(self) -> dict:
        """JSON-ready representation; arrays and measures become plain lists."""
        return {
            "name": self.name,
            "passed": self.passed,
            "margins": {key: to_jsonable(value) for key, value in self.margins.items()},
            "certificates": {
                key: to_jsonable(value) for key, value in self.certificates.items()
            },
            "diagnostics": list(self.diagnostics),
            "children": [verdict.to_dict() for verdict in self.children],
        }


def to_jsonable(value: Any) -> Any:
    """Convert numpy values, complex numbers and domain objects to JSON types."""
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        # complex entries become [re, im] pairs, as in the file schemas
        if np.iscomplexobj(value) and np.any(value.imag != 0):
            return np.stack([value.real, value.imag], axis=-1).tolist()
        return np.real(value).tolist()
    if isinstance(value, complex | np.complexfloating):
        if value.imag == 0:
            return float(value.real)
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    return value
