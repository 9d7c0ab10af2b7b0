"""Tests for the example gallery."""

import pytest

from opmoment.errors import DegenerateBlock
from opmoment.gallery import FIXTURES, SEQUENCE, WEIGHTS, block_shift_example, reproduce


@pytest.mark.parametrize('name', sorted(FIXTURES))
def test_fixture_reproduces(name):
    """Every gallery example yields its recorded verdicts."""
    verdict = reproduce(FIXTURES[name]())
    failing = [child.name for child in verdict.children if not child.passed]
    assert verdict.passed, failing


@pytest.mark.parametrize('name', sorted(FIXTURES))
def test_fixture_kinds(name):
    """Fixtures are sequences or weight families and carry a description."""
    fixture = FIXTURES[name]()
    assert fixture.name == name
    assert fixture.kind in (SEQUENCE, WEIGHTS)
    assert fixture.description


def test_block_shift_parameters():
    """Other parameters keep the Cauchy-Schwarz gap (a - c)^2."""
    fixture = block_shift_example(a=2.0, b=1.0, c=0.5)
    assert fixture.expected['cauchy_schwarz_gap'] == pytest.approx(2.25)
    assert reproduce(fixture).passed


def test_block_shift_degenerate():
    """a = c and b = 0 has no order-2 structure."""
    with pytest.raises(DegenerateBlock):
        block_shift_example(a=1.0, b=0.0, c=1.0)


def test_unknown_fixture():
    """reproduce needs registered expectations."""
    fixture = FIXTURES['flat']()
    fixture.name = 'custom'
    with pytest.raises(KeyError):
        reproduce(fixture)
