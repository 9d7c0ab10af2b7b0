"""Tests for the (T_0, T_1) problem."""

import numpy as np
import pytest

from opmoment.atomic import moment_residuals
from opmoment.errors import DegeneratePencil, NotPsd, RangeConditionFailed, SingularOperator
from opmoment.linalg import psd_check
from opmoment.moments import OperatorSequence
from opmoment.pair import (
    kimsey_section,
    kimsey_sequence,
    pencil_bounds,
    smuljan_factor,
    smuljan_factorize,
    two_atomic,
)
from tests.conftest import random_psd


class TestPencilBounds:
    """Tests for alpha T_0 <= T_1 <= beta T_0."""

    def test_diagonal(self):
        """Diagonal pairs divide entrywise."""
        bounds = pencil_bounds(np.diag([1.0, 2.0]), np.diag([-1.0, 4.0]))
        assert bounds.alpha == -1.0
        assert bounds.beta == 2.0
        assert not bounds.is_degenerate

    def test_general_pair_is_tight(self, rng):
        """T_1 - alpha T_0 and beta T_0 - T_1 are PSD and singular."""
        T0 = random_psd(rng, 3)
        T1 = random_psd(rng, 3) - 2.0 * np.eye(3)
        bounds = pencil_bounds(T0, T1)
        lower = psd_check(T1 - bounds.alpha * T0)
        upper = psd_check(bounds.beta * T0 - T1)
        assert lower.is_psd and upper.is_psd
        assert abs(lower.min_eigenvalue) < 1e-8
        assert abs(upper.min_eigenvalue) < 1e-8

    def test_singular(self):
        """A singular T_0 has no pencil bounds."""
        with pytest.raises(SingularOperator):
            pencil_bounds(np.diag([1.0, 0.0]), np.eye(2))
        with pytest.raises(SingularOperator):
            pencil_bounds(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2))


class TestTwoAtomic:
    """Tests for the two-atomic representing measure."""

    def test_reproduces_pair(self, rng):
        """The measure has T_0 and T_1 as its first moments."""
        T0 = random_psd(rng, 3)
        T1 = random_psd(rng, 3) - np.eye(3)
        E = two_atomic(T0, T1)
        assert E.r == 2
        assert E.is_measure
        assert np.allclose(E.first_moments(0).entries, T0)
        assert np.allclose(E.first_moments(1).entries, T1)

    def test_random_pairs(self, rng):
        """Random (T_0 > 0, T_1 Hermitian) pairs are reproduced with PSD weights."""
        for _ in range(100):
            dim = int(rng.integers(1, 6))
            T0 = random_psd(rng, dim)
            G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            T1 = G + G.conj().T
            E = two_atomic(T0, T1)
            assert max(moment_residuals(E, OperatorSequence.from_arrays([T0, T1]))) <= 1e-10
            for weight in E.weights:
                assert psd_check(weight).min_eigenvalue >= -1e-10

    def test_scalar_pencil(self):
        """T_1 = 3 T_0 gives the single atom 3."""
        T0 = np.diag([1.0, 2.0])
        E = two_atomic(T0, 3.0 * T0)
        assert E.atoms == pytest.approx((3.0,))

    def test_scalar_pencil_strict(self):
        """strict refuses a scalar pencil."""
        T0 = np.diag([1.0, 2.0])
        with pytest.raises(DegeneratePencil):
            two_atomic(T0, 3.0 * T0, strict=True)


class TestKimsey:
    """Tests for the finite sections of diag(e^(-n) delta_(-n))."""

    def test_bounds(self):
        """alpha(6) = -6 and beta = -1."""
        seq = kimsey_sequence(6, 1)
        bounds = pencil_bounds(seq[0], seq[1])
        assert bounds.alpha == pytest.approx(-6.0)
        assert bounds.beta == pytest.approx(-1.0)

    def test_section(self):
        """alpha(k) decreases without bound while each section stays two-atomic."""
        verdict = kimsey_section(6)
        assert verdict.passed
        assert verdict.certificates['alphas'] == pytest.approx([-1.0, -2.0, -3.0, -4.0, -5.0, -6.0])
        assert verdict.certificates['measure'].r == 2

    def test_diagonal_bounds_ignore_mass_scale(self):
        """e^(-50) on the diagonal is still invertible."""
        seq = kimsey_sequence(50, 1)
        bounds = pencil_bounds(seq[0], seq[1])
        assert bounds.alpha == pytest.approx(-50.0, rel=1e-12)
        assert bounds.beta == pytest.approx(-1.0, rel=1e-12)

    def test_sections_up_to_fifty(self):
        """alpha(d) = -d for d = 1..50 and every section has its two-atomic measure."""
        verdict = kimsey_section(50)
        assert verdict.passed
        alphas = verdict.certificates['alphas']
        assert alphas == pytest.approx([-float(k) for k in range(1, 51)], rel=1e-12)
        assert all(later < earlier for earlier, later in zip(alphas, alphas[1:]))
        for d in range(1, 51):
            measure = kimsey_section(d).certificates['measure']
            expected = (-1.0,) if d == 1 else (-float(d), -1.0)
            assert measure.atoms == pytest.approx(expected, rel=1e-12)
            assert measure.is_measure


class TestSmuljan:
    """Tests for the block factorization."""

    def test_factorize(self, rng):
        """With X = I the factor is Y itself."""
        W0 = rng.standard_normal((2, 2))
        W = smuljan_factorize(np.eye(2), W0, W0.T @ W0 + np.eye(2))
        assert np.allclose(W, W0)

    def test_range_condition(self):
        """Y outside the range of X^(1/2) is rejected."""
        with pytest.raises(RangeConditionFailed):
            smuljan_factorize(np.diag([1.0, 0.0]), np.array([[0.0], [1.0]]), np.array([[1.0]]))

    def test_z_too_small(self):
        """Z < W* W is rejected."""
        with pytest.raises(NotPsd):
            smuljan_factorize(np.eye(2), 2.0 * np.eye(2), np.eye(2))

    def test_positive_block(self, rng):
        """All three routes accept a positive block and the factor is returned."""
        M = random_psd(rng, 4, complex_entries=False)
        verdict = smuljan_factor(M[:2, :2], M[:2, 2:], M[2:, 2:])
        assert verdict.passed
        assert verdict.certificates['consistent']
        assert 'factor' in verdict.certificates

    def test_indefinite_block(self):
        """All routes reject [[I, 2I], [2I, I]]."""
        verdict = smuljan_factor(np.eye(2), 2.0 * np.eye(2), np.eye(2))
        assert not verdict.passed
        assert verdict.certificates['consistent']

    def test_routes_agree_on_random_blocks(self, rng):
        """Block and factorization routes agree on positive and indefinite blocks."""
        for trial in range(1000):
            p, q = (int(k) for k in rng.integers(1, 4, size=2))
            M = random_psd(rng, p + q, complex_entries=bool(trial % 2))
            positive = trial % 4 < 2
            if not positive:
                shift = np.linalg.eigvalsh(M)[0] + rng.uniform(0.1, 1.0)
                M = M - shift * np.eye(p + q)
            verdict = smuljan_factor(M[:p, :p], M[:p, p:], M[p:, p:])
            assert verdict.passed == positive
            assert verdict.certificates['consistent']
            assert ('factor' in verdict.certificates) == positive
