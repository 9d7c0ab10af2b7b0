"""Tests for operator weighted shifts."""

import math

import numpy as np
import pytest
from scipy.special import roots_legendre

from opmoment.atomic import AtomicOVM
from opmoment.errors import (
    InsufficientMoments,
    InvalidWeightFamily,
    NotFlatAtK,
    NotFlatAtP,
    NotRepresenting,
    OverflowRisk,
)
from opmoment.gallery import bergman_shift, flat_shift, stampfli_violation
from opmoment.recursive import algebraic_operator_measure
from opmoment.sampling import SampleScheme
from opmoment.shift import (
    WeightFamily,
    flatness_identity_check,
    local_propagation_check,
    local_weight_sequence,
    localized_shift_measure,
    propagation_check,
    shift_moments,
    subnormality_check,
)

FLAT_A = np.array([[2.0, 1.0], [1.0, 2.0]])


class TestWeightFamily:
    """Tests for weight validation."""

    def test_rejects_singular_weight(self):
        """Weights must be positive and invertible."""
        with pytest.raises(InvalidWeightFamily):
            WeightFamily.scalar([1.0, 0.0])

    def test_rejects_empty(self):
        """At least one weight is needed."""
        with pytest.raises(InvalidWeightFamily):
            WeightFamily(())

    def test_norm_bound(self):
        """The known operator norm overrides the window maximum."""
        assert WeightFamily.scalar([0.5, 0.7]).norm_bound == pytest.approx(0.7)
        assert WeightFamily.scalar([0.5, 0.7], operator_norm=1.0).norm_bound == 1.0

    def test_operator_norm_below_window(self):
        """A declared norm below some weight is inconsistent."""
        with pytest.raises(InvalidWeightFamily):
            WeightFamily.scalar([0.5, 2.0], operator_norm=1.0)


class TestShiftMoments:
    """Tests for products and Gram terms."""

    def test_scalar_gram(self):
        """Weights 2, 3 give Gram terms 1, 4, 36."""
        sm = shift_moments(WeightFamily.scalar([2.0, 3.0]))
        assert np.allclose(sm.gram.stacked().ravel(), [1.0, 4.0, 36.0])

    def test_overflow(self):
        """Products beyond the magnitude limit are refused."""
        with pytest.raises(OverflowRisk):
            shift_moments(WeightFamily.scalar([1e10] * 20))

    def test_local_weights_of_scalar_shift(self):
        """From the only unit vector the local weights are the weights."""
        sm = shift_moments(WeightFamily.scalar([2.0, 3.0, 0.5]))
        assert local_weight_sequence(sm, [1.0]) == pytest.approx([2.0, 3.0, 0.5])

    def test_bergman_gram(self):
        """||B_n||^2 = 1 / (n + 1) for the Bergman shift."""
        sm = shift_moments(bergman_shift(16).payload)
        assert np.allclose(sm.gram.stacked().ravel(), [1.0 / (n + 1) for n in range(17)])


class TestSubnormality:
    """Tests for the necessary subnormality conditions."""

    def test_bergman_is_subnormal(self):
        """The Bergman shift passes at order 5."""
        verdict = subnormality_check(bergman_shift().payload, 5)
        assert verdict.passed
        assert verdict.certificates['norm_bound'] == 1.0

    def test_flat_operator_shift(self):
        """Constant operator weights pass."""
        assert subnormality_check(flat_shift().payload, 2).passed

    @pytest.mark.parametrize('order', [1, 2])
    def test_stampfli_fails(self, order):
        """Weights 2, 1, 1, ... fail."""
        verdict = subnormality_check(stampfli_violation().payload, order)
        assert not verdict.passed
        assert verdict.certificates['failures']['hankel'] == 1

    def test_insufficient(self):
        """Order n needs 2n + 2 weights."""
        with pytest.raises(InsufficientMoments):
            subnormality_check(WeightFamily.scalar([1.0] * 3), 1)

    def test_empty_scheme_rejected(self, monkeypatch):
        """Both sampled checks refuse a scheme without vectors."""
        monkeypatch.setattr(SampleScheme, 'generate', lambda self, dim: np.zeros((0, dim)))
        with pytest.raises(ValueError, match='no vectors'):
            subnormality_check(flat_shift().payload, 2)
        with pytest.raises(ValueError, match='no vectors'):
            local_propagation_check(shift_moments(flat_shift().payload))


class TestPropagation:
    """Tests for propagation of flatness."""

    def test_flat_everywhere(self):
        """A constant family propagates."""
        verdict = propagation_check(flat_shift().payload, 0)
        assert verdict.passed
        assert verdict.margins['max_deviation'] == 0.0
        assert verdict.child('gram_window').passed

    def test_stampfli_violation(self):
        """Flat at 1 but A_0 differs: not subnormal."""
        verdict = propagation_check(stampfli_violation().payload, 1)
        assert not verdict.passed
        assert verdict.certificates['first_violation'] == 0

    def test_not_flat(self):
        """Bergman weights are never flat."""
        with pytest.raises(NotFlatAtK):
            propagation_check(bergman_shift().payload, 0)

    def test_flatness_identity(self):
        """B_n* B_n = A^(2n) for a constant family."""
        sm = shift_moments(flat_shift().payload)
        verdict = flatness_identity_check(sm, 0, 4)
        assert verdict.passed
        assert verdict.margins['max_residual'] < 1e-12

    def test_flatness_identity_requires_flat(self):
        """NotFlatAtP at a non-flat index."""
        with pytest.raises(NotFlatAtP):
            flatness_identity_check(shift_moments(stampfli_violation().payload), 0, 2)

    def test_flatness_identity_insufficient(self):
        """The identity needs Gram terms up to p + n_max."""
        sm = shift_moments(WeightFamily.flat(FLAT_A, 3))
        with pytest.raises(InsufficientMoments):
            flatness_identity_check(sm, 0, 5)

    def test_flatness_identity_needs_one_power(self):
        """n_max = 0 leaves nothing to compare."""
        with pytest.raises(ValueError):
            flatness_identity_check(shift_moments(flat_shift().payload), 0, 0)

    def test_local_propagation_stampfli(self):
        """The scalar Stampfli shift is flat at 2 but not at 1."""
        sm = shift_moments(stampfli_violation().payload)
        verdict = local_propagation_check(sm)
        assert not verdict.passed
        assert verdict.certificates['flat_vectors'] == 1

    def test_local_propagation_bergman(self):
        """No sampled vector is flat anywhere, so nothing propagates wrongly."""
        verdict = local_propagation_check(shift_moments(bergman_shift(16).payload))
        assert verdict.passed
        assert verdict.certificates['flat_vectors'] == 0


class TestLocalizedMeasure:
    """Tests for the measures E_p."""

    def test_flat_operator_shift(self):
        """For a flat shift E_1 is the spectral measure of A^2."""
        family = WeightFamily.flat(FLAT_A, 6)
        E = algebraic_operator_measure(FLAT_A @ FLAT_A)
        Ep, verdict = localized_shift_measure(E, shift_moments(family), 1)
        assert verdict.passed
        assert verdict.child('is_spectral').passed
        assert Ep.atoms == pytest.approx((1.0, 9.0))

    def test_wrong_measure(self):
        """delta_1 does not represent the flat scalar shift with weight 2."""
        sm = shift_moments(WeightFamily.scalar([2.0] * 4))
        with pytest.raises(NotRepresenting):
            localized_shift_measure(AtomicOVM.from_arrays([1.0], [[[1.0]]]), sm, 0)

    def test_coarse_bergman_discretization(self):
        """A two-point quadrature of dt on [0, 1] misses the high Gram terms."""
        nodes, weights = roots_legendre(2)
        atoms = (nodes + 1.0) / 2.0
        E = AtomicOVM.from_arrays(atoms, [[[w / 2.0]] for w in weights])
        sm = shift_moments(bergman_shift(16).payload)
        with pytest.raises(NotRepresenting):
            localized_shift_measure(E, sm, 0)

    def test_scalar_point_mass(self):
        """Weight 2 everywhere is represented by delta_4, and E_0 = E."""
        sm = shift_moments(WeightFamily.scalar([2.0] * 4))
        Ep, verdict = localized_shift_measure(AtomicOVM.from_arrays([4.0], [[[1.0]]]), sm, 0)
        assert verdict.passed
        assert math.isclose(Ep.weights[0].entries[0, 0].real, 1.0)
