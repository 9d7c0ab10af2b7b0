"""Pytest configuration and fixtures."""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from opmoment.atomic import AtomicOVM
from opmoment.config import Config


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def test_config(temp_dir):
    """Create a test configuration."""
    config = Config(config_dir=temp_dir / ".opmoment")
    config.ensure_dirs()
    return config


@pytest.fixture
def rng():
    """Seeded generator so randomized tests are reproducible."""
    return np.random.default_rng(1234)


def random_psd(rng, dim, floor=0.1, complex_entries=True):
    """A random positive definite matrix with smallest eigenvalue >= floor."""
    G = rng.standard_normal((dim, dim))
    if complex_entries:
        G = G + 1j * rng.standard_normal((dim, dim))
    return G @ G.conj().T / dim + floor * np.eye(dim)


@pytest.fixture
def random_measure(rng):
    """Factory for positive atomic measures with well separated atoms."""

    def make(r=3, dim=2, low=-2.0, gap=0.25):
        atoms = low + np.cumsum(gap + rng.uniform(0.0, 0.5, size=r))
        weights = [random_psd(rng, dim) for _ in range(r)]
        return AtomicOVM.from_arrays(atoms, weights)

    return make


@pytest.fixture
def write_input(temp_dir):
    """Write a dict as a JSON input file and return its path."""

    def write(data, name='input.json'):
        path = temp_dir / name
        path.write_text(json.dumps(data, indent=2))
        return path

    return write
