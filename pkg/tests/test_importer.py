"""Tests for the JSON importer."""

import json

import numpy as np
import pytest

from opmoment.errors import SchemaError
from opmoment.importer import import_file, loads, parse_ovm, parse_sequence, parse_weights

SEQUENCE_TEXT = """{
  "schema_version": "1",
  "kind": "sequence",
  "dim": 2,
  "matrices": [
    [[1.0, 0.0], [0.0, 1.0]],
    [[1.0, 5.0], [0.0, 1.0]]
  ]
}
"""


def sequence_doc(**overrides):
    data = {
        'schema_version': '1',
        'kind': 'sequence',
        'dim': 1,
        'field': 'real',
        'matrices': [[[1.0]], [[2.0]], [[4.0]]],
    }
    data.update(overrides)
    return loads(json.dumps(data))


class TestLoads:
    """Tests for parsing and kind detection."""

    def test_invalid_json_has_line(self):
        """Syntax errors report their line."""
        with pytest.raises(SchemaError) as exc_info:
            loads('{\n  "dim": 1,\n  oops\n}')
        assert exc_info.value.line == 3

    def test_top_level_object(self):
        """Arrays at the top level are rejected."""
        with pytest.raises(SchemaError):
            loads('[1, 2]')

    def test_schema_version(self):
        """Only schema version 1 is understood."""
        with pytest.raises(SchemaError):
            loads('{"schema_version": "2", "dim": 1, "matrices": [[[1]]]}')

    def test_kind_inferred_from_keys(self):
        """Without 'kind' the keys decide."""
        assert loads('{"dim": 1, "matrices": [[[1]]]}').kind == 'sequence'
        assert loads('{"dim": 1, "weights": [[[1]]]}').kind == 'weights'
        assert loads('{"dim": 1, "atoms": [0], "weights": [[[1]]]}').kind == 'ovm'

    def test_digest_is_stable(self):
        """The digest depends on the text only."""
        assert loads(SEQUENCE_TEXT).digest == loads(SEQUENCE_TEXT).digest


class TestParsers:
    """Tests for the payload parsers."""

    def test_sequence(self):
        """A real scalar sequence."""
        seq = parse_sequence(sequence_doc())
        assert seq.N == 2
        assert seq[2].entries[0, 0] == 4.0

    def test_complex_entries(self):
        """Complex entries are [re, im] pairs."""
        matrix = [[[1.0, 0.0], [0.0, 1.0]], [[0.0, -1.0], [2.0, 0.0]]]
        seq = parse_sequence(sequence_doc(dim=2, field='complex', matrices=[matrix]))
        assert seq[0].entries[0, 1] == 1j

    def test_non_hermitian_reports_location(self):
        """The offending matrix is named with its line."""
        with pytest.raises(SchemaError) as exc_info:
            parse_sequence(loads(SEQUENCE_TEXT))
        assert exc_info.value.path == 'matrices[1]'
        assert exc_info.value.line == 7

    def test_wrong_shape(self):
        """Matrices must be dim x dim."""
        with pytest.raises(SchemaError):
            parse_sequence(sequence_doc(dim=2))

    def test_missing_dim(self):
        """dim is required."""
        document = loads('{"kind": "sequence", "matrices": [[[1]]]}')
        with pytest.raises(SchemaError):
            parse_sequence(document)

    def test_weights_with_norm_bound(self):
        """norm_bound is carried into the family."""
        document = loads('{"dim": 1, "weights": [[[0.5]], [[0.7]]], "norm_bound": 1.0}')
        family = parse_weights(document)
        assert len(family) == 2
        assert family.norm_bound == 1.0

    def test_invalid_weights(self):
        """Singular weights are a schema error."""
        with pytest.raises(SchemaError):
            parse_weights(loads('{"dim": 1, "weights": [[[0.0]]]}'))

    def test_ovm(self):
        """Atoms and weights pair up."""
        E = parse_ovm(loads('{"dim": 1, "atoms": [2, -1], "weights": [[[1]], [[3]]]}'))
        assert E.atoms == (-1.0, 2.0)
        assert np.allclose(E.weights[0].entries, [[3.0]])

    def test_ovm_count_mismatch(self):
        """Counts of atoms and weights must agree."""
        with pytest.raises(SchemaError):
            parse_ovm(loads('{"dim": 1, "atoms": [0, 1], "weights": [[[1]]]}'))


def test_import_file(temp_dir):
    """import_file dispatches on the kind."""
    path = temp_dir / 'seq.json'
    path.write_text(sequence_doc().text)
    document, seq = import_file(path)
    assert document.kind == 'sequence'
    assert seq.N == 2
