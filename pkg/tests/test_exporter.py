"""Tests for the JSON exporter."""

import json

import numpy as np

from opmoment import __version__
from opmoment.atomic import AtomicOVM
from opmoment.exporter import (
    build_report,
    dumps,
    fixture_to_dict,
    ovm_to_dict,
    sequence_to_dict,
    weights_to_dict,
    write_json,
)
from opmoment.gallery import bergman_shift, bisgaard
from opmoment.importer import loads, parse_ovm, parse_sequence
from opmoment.moments import OperatorSequence
from opmoment.verdict import Verdict


def test_sequence_round_trip():
    """An exported sequence imports to the same matrices."""
    seq = bisgaard().payload
    imported = parse_sequence(loads(dumps(sequence_to_dict(seq))))
    assert np.array_equal(imported.stacked(), seq.stacked())


def test_complex_measure_is_bit_exact(rng):
    """Complex weights survive export and import exactly."""
    G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    E = AtomicOVM.from_arrays([0.1, 0.7], [G @ G.conj().T, np.eye(2)])
    data = ovm_to_dict(E)
    assert data['field'] == 'complex'
    imported = parse_ovm(loads(dumps(data)))
    assert imported.atoms == E.atoms
    for a, b in zip(imported.weights, E.weights):
        assert np.array_equal(a.entries, b.entries)


def test_weights_keep_norm_bound():
    """The known operator norm is exported."""
    data = weights_to_dict(bergman_shift(4).payload)
    assert data['norm_bound'] == 1.0
    assert data['kind'] == 'weights'


def test_fixture_has_description():
    """Fixture files describe themselves."""
    data = fixture_to_dict(bisgaard())
    assert data['kind'] == 'sequence'
    assert 'Locally' in data['description']


def test_report_fields():
    """Reports carry the verdicts, inputs and tool version."""
    verdicts = [Verdict(name='a', passed=True), Verdict(name='b', passed=False)]
    report = build_report('check', 'abc', verdicts, {'psd_eps': 1e-9}, 0.5, {'order': 1})
    assert report['passed'] is False
    assert report['input_digest'] == 'abc'
    assert report['tool_version'] == __version__
    assert [v['name'] for v in report['verdicts']] == ['a', 'b']
    assert report['results'] == {'order': 1}


def test_dumps_sorted_and_deterministic():
    """Keys are sorted so equal reports serialize identically."""
    text = dumps({'b': 1, 'a': np.float64(2.0)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': 2.0, 'b': 1}


def test_write_json_is_atomic(temp_dir):
    """The file appears complete and no temporary file is left behind."""
    out = temp_dir / 'nested' / 'report.json'
    write_json(sequence_to_dict(OperatorSequence.scalar([1.0, 2.0])), out)
    assert json.loads(out.read_text())['matrices'] == [[[1.0]], [[2.0]]]
    assert [p.name for p in out.parent.iterdir()] == ['report.json']
