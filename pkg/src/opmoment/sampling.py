"""Finite sets of unit vectors standing in for "every x in H"."""

from dataclasses import dataclass

import numpy as np

CANONICAL = "canonical-polarized"
RANDOM = "seeded-random"
EXPLICIT = "explicit"
KINDS = (CANONICAL, RANDOM, EXPLICIT)


@dataclass(frozen=True)
class SampleScheme:
    """How localizing vectors are generated.

    canonical-polarized: all e_i, (e_i +- e_j)/sqrt(2) and (e_i +- i e_j)/sqrt(2),
    followed by `count` seeded random vectors. By polarization these vectors
    determine every sesquilinear form on C^d.
    seeded-random: `count` random unit vectors drawn with `seed`.
    explicit: the rows of `vectors`, normalized.
    """

    kind: str = CANONICAL
    count: int = 0
    seed: int = 0
    vectors: tuple[tuple[complex, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Unknown sample scheme '{self.kind}'. Use one of: {', '.join(KINDS)}")
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.kind == RANDOM and self.count < 1:
            raise ValueError("A seeded-random scheme needs a count of at least 1")
        if self.kind == EXPLICIT and not self.vectors:
            raise ValueError("An explicit scheme needs at least one vector")

    @classmethod
    def explicit(cls, vectors) -> "SampleScheme":
        rows = tuple(tuple(complex(z) for z in np.ravel(v)) for v in vectors)
        return cls(kind=EXPLICIT, vectors=rows)

    def generate(self, dim: int) -> np.ndarray:
        """Return an (m, dim) array of unit row vectors, deterministic in the scheme."""
        if self.kind == EXPLICIT:
            rows = np.array(self.vectors, dtype=complex)
            if rows.ndim != 2 or rows.shape[1] != dim:
                raise ValueError(f"Explicit vectors must have length {dim}")
            return _normalize(rows)
        if self.kind == RANDOM:
            return random_unit_vectors(dim, self.count, self.seed)
        vectors = canonical_polarized(dim)
        if self.count:
            vectors = np.vstack([vectors, random_unit_vectors(dim, self.count, self.seed)])
        return vectors

    def with_witnesses(self, witnesses: list[np.ndarray]) -> "SampleScheme":
        """Same scheme as an explicit one, with extra witness vectors appended."""
        return SampleScheme.explicit(list(self.generate(len(witnesses[0]))) + list(witnesses))


def canonical_polarized(dim: int) -> np.ndarray:
    basis = np.eye(dim, dtype=complex)
    rows = [basis[i] for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            for phase in (1, -1, 1j, -1j):
                rows.append((basis[i] + phase * basis[j]) / np.sqrt(2))
    return np.array(rows)


def random_unit_vectors(dim: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return _normalize(raw)


def _normalize(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        raise ValueError("Cannot normalize a zero vector")
    return rows / norms[:, None]
