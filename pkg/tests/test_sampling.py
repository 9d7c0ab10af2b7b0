"""Tests for localizing vector schemes."""

import numpy as np
import pytest

from opmoment.sampling import EXPLICIT, RANDOM, SampleScheme


def test_canonical_count_and_norms():
    """d basis vectors plus four polarization vectors per pair."""
    vectors = SampleScheme().generate(3)
    assert vectors.shape == (3 + 4 * 3, 3)
    assert np.allclose(np.linalg.norm(vectors, axis=1), 1.0)


def test_canonical_with_random_extras():
    """count adds seeded random vectors after the canonical ones."""
    vectors = SampleScheme(count=5, seed=7).generate(2)
    assert vectors.shape == (2 + 4 + 5, 2)


def test_random_is_deterministic():
    """The same seed gives the same vectors, another seed different ones."""
    a = SampleScheme(kind=RANDOM, count=4, seed=1).generate(3)
    b = SampleScheme(kind=RANDOM, count=4, seed=1).generate(3)
    c = SampleScheme(kind=RANDOM, count=4, seed=2).generate(3)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_explicit_vectors_are_normalized():
    """Explicit vectors are scaled to unit length."""
    scheme = SampleScheme.explicit([[3.0, 4.0]])
    assert scheme.kind == EXPLICIT
    assert np.allclose(scheme.generate(2), [[0.6, 0.8]])


def test_explicit_wrong_length():
    """Explicit vectors must match the dimension."""
    with pytest.raises(ValueError):
        SampleScheme.explicit([[1.0, 0.0]]).generate(3)


def test_invalid_schemes():
    """Unknown kinds, negative counts and empty explicit schemes are rejected."""
    with pytest.raises(ValueError):
        SampleScheme(kind='grid')
    with pytest.raises(ValueError):
        SampleScheme(count=-1)
    with pytest.raises(ValueError):
        SampleScheme(kind=EXPLICIT)


def test_random_scheme_needs_vectors():
    """A seeded-random scheme with no count would sample nothing."""
    with pytest.raises(ValueError, match='at least 1'):
        SampleScheme(kind=RANDOM)
    with pytest.raises(ValueError):
        SampleScheme(kind=RANDOM, count=0, seed=4)
    assert len(SampleScheme(kind=RANDOM, count=1).generate(2)) == 1


def test_with_witnesses_appends():
    """Witness vectors follow the generated ones."""
    witness = np.array([0.0, 1.0])
    vectors = SampleScheme().with_witnesses([witness]).generate(2)
    assert len(vectors) == 2 + 4 + 1
    assert np.allclose(vectors[-1], witness)
