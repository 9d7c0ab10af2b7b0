"""Tests for atomic operator-valued measures."""

import numpy as np
import pytest

from opmoment.atomic import (
    AtomicOVM,
    is_measure,
    is_semispectral,
    is_spectral,
    moment_residuals,
    moments,
    naimark_dilate,
    restrict_to_support,
    support,
)
from opmoment.errors import NotMeasure, NotSemiSpectral, OverflowRisk
from opmoment.linalg import inv_sqrt_psd
from tests.conftest import random_psd


def projections():
    return AtomicOVM.from_arrays([-1.0, 1.0], [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


def random_projections(rng, dim, r):
    """Mutually annihilating projections onto r nonempty groups of columns of a unitary."""
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    U, _ = np.linalg.qr(G)
    cuts = np.sort(rng.choice(np.arange(1, dim), size=r - 1, replace=False))
    return [block @ block.conj().T for block in np.split(U, cuts, axis=1)]


def random_resolution(rng, dim, r):
    """Positive definite weights summing to the identity."""
    parts = [random_psd(rng, dim) for _ in range(r)]
    root = inv_sqrt_psd(sum(parts)).entries
    return [root @ part @ root for part in parts]


class TestAtomicOVM:
    """Tests for construction and moments."""

    def test_atoms_sorted(self):
        """Atoms are stored in increasing order with their weights."""
        E = AtomicOVM.from_arrays([2.0, -1.0], [[[2.0]], [[1.0]]])
        assert E.atoms == (-1.0, 2.0)
        assert E.weights[0].entries[0, 0] == 1.0

    def test_close_atoms_merge(self):
        """Atoms closer than the merge tolerance are one atom."""
        E = AtomicOVM.from_arrays([1.0, 1.0 + 1e-12], [[[1.0]], [[2.0]]])
        assert E.r == 1
        assert E.weights[0].entries[0, 0] == pytest.approx(3.0)

    def test_empty_needs_dim(self):
        """The zero measure carries its dimension explicitly."""
        assert AtomicOVM((), (), dim=3).dim == 3
        with pytest.raises(ValueError):
            AtomicOVM((), ())

    def test_mismatched_lengths(self):
        """Atoms and weights pair up."""
        with pytest.raises(ValueError):
            AtomicOVM.from_arrays([1.0, 2.0], [np.eye(2)])

    def test_point_mass_moments(self):
        """I delta_2 has moments 2^n I."""
        seq = moments(AtomicOVM.from_arrays([2.0], [np.eye(2)]), 5)
        for n in range(6):
            assert np.allclose(seq[n].entries, 2.0**n * np.eye(2))

    def test_zero_atom_mass(self):
        """An atom at 0 contributes to T_0 only."""
        seq = moments(AtomicOVM.from_arrays([0.0], [np.eye(2)]), 2)
        assert np.allclose(seq[0].entries, np.eye(2))
        assert np.allclose(seq[1].entries, 0.0)

    def test_overflow(self):
        """Moments beyond the magnitude limit are refused."""
        with pytest.raises(OverflowRisk):
            moments(AtomicOVM.from_arrays([1e10], [[[1.0]]]), 20)

    def test_moment_residuals_vanish(self, random_measure):
        """A measure reproduces its own moments."""
        E = random_measure()
        assert max(moment_residuals(E, moments(E, 6))) < 1e-12


class TestMeasureTests:
    """Tests for positivity, semi-spectral and spectral decisions."""

    def test_negative_weight(self):
        """A charge with an indefinite weight is not a measure."""
        E = AtomicOVM.from_arrays([0.0, 1.0], [np.eye(2), np.diag([1.0, -0.5])])
        verdict = is_measure(E)
        assert not verdict.passed
        assert verdict.margins['min_weight_eigenvalue'] == pytest.approx(-0.5)
        assert verdict.diagnostics

    def test_property_matches_verdict(self, random_measure):
        """is_measure is available as a property."""
        assert random_measure().is_measure

    def test_projections_are_spectral(self):
        """Complementary projections are a spectral measure."""
        E = projections()
        assert is_semispectral(E).passed
        verdict = is_spectral(E)
        assert verdict.passed
        assert verdict.certificates['consistent']

    def test_halves_are_not_spectral(self):
        """I/2 at two atoms is semi-spectral, not spectral, by both criteria."""
        E = AtomicOVM.from_arrays([-1.0, 1.0], [0.5 * np.eye(2), 0.5 * np.eye(2)])
        verdict = is_spectral(E)
        assert not verdict.passed
        assert verdict.certificates['by_moments'] is False
        assert verdict.certificates['consistent']

    def test_spectral_requires_unit_mass(self):
        """is_spectral refuses measures with E(R) != I."""
        with pytest.raises(NotSemiSpectral):
            is_spectral(AtomicOVM.from_arrays([0.0], [2.0 * np.eye(2)]))

    def test_spectrality_criteria_agree(self, rng):
        """M_1^2 = M_2 holds exactly when the weights are orthogonal projections."""
        for trial in range(1000):
            spectral = trial % 2 == 0
            dim = int(rng.integers(2, 6)) if spectral else int(rng.integers(1, 5))
            r = int(rng.integers(1, dim + 1)) if spectral else int(rng.integers(2, 5))
            atoms = rng.uniform(-3.0, 3.0) + np.cumsum(rng.uniform(0.1, 1.0, size=r))
            weights = random_projections(rng, dim, r) if spectral else random_resolution(rng, dim, r)
            verdict = is_spectral(AtomicOVM.from_arrays(atoms, weights))
            assert verdict.certificates['consistent']
            assert verdict.passed == spectral


class TestDilation:
    """Tests for the Naimark dilation."""

    def test_compressions_reproduce_moments(self, random_measure):
        """V* B^n V equals T_n."""
        E = random_measure(r=3, dim=2)
        data = naimark_dilate(E)
        expected = moments(E, 6)
        for n in range(7):
            assert np.allclose(data.compress(n).entries, expected[n].entries)
        assert max(data.residuals) < 1e-9

    def test_random_dilations(self, rng, random_measure):
        """||V* B^n V - T_n||_F / ||T_n||_F <= 1e-9 for n <= 2r."""
        for _ in range(100):
            r = int(rng.integers(1, 5))
            E = random_measure(r=r, dim=int(rng.integers(1, 5)), low=0.0, gap=0.1)
            data = naimark_dilate(E)
            expected = moments(E, 2 * E.r)
            for n in range(2 * E.r + 1):
                misfit = np.linalg.norm(data.compress(n).entries - expected[n].entries)
                assert misfit <= 1e-9 * expected[n].frobenius()

    def test_semispectral_dilation_is_isometry(self):
        """A semi-spectral measure dilates through an isometry."""
        data = naimark_dilate(projections())
        assert data.is_isometry
        assert data.dilated_operator.shape == (4, 4)

    def test_charge_has_no_dilation(self):
        """Indefinite weights cannot be dilated."""
        E = AtomicOVM.from_arrays([0.0, 1.0], [np.eye(2), np.diag([1.0, -0.5])])
        with pytest.raises(NotMeasure):
            naimark_dilate(E)


def test_support_drops_zero_weights():
    """Atoms with zero weight are not in the support."""
    E = AtomicOVM.from_arrays([0.0, 1.0, 2.0], [np.eye(2), np.zeros((2, 2)), np.eye(2)])
    assert support(E) == (0.0, 2.0)
    assert restrict_to_support(E).atoms == (0.0, 2.0)
