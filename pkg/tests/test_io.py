import json
import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsegrain import io
from coarsegrain import linalg as la
from coarsegrain.channels import random_channel

FIXTURES = Path(__file__).parent / "fixtures"
VALID = sorted(p for p in FIXTURES.rglob("*.json") if p.parent.name != "invalid")
INVALID = sorted((FIXTURES / "invalid").glob("*.json"))

finite = st.floats(allow_nan=False, allow_infinity=False)


def bits(x: float) -> bytes:
    return struct.pack("<d", x)


def same_bits(a, b) -> bool:
    """Structural equality that tells -0.0 from 0.0."""
    if isinstance(a, float) and isinstance(b, float):
        return bits(a) == bits(b)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(same_bits(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(same_bits(a[k], b[k]) for k in a)
    return type(a) is type(b) and a == b


@pytest.mark.parametrize("path", VALID, ids=lambda p: str(p.relative_to(FIXTURES)))
def test_fixture_roundtrip_is_bit_exact(path, tmp_path):
    doc = io.read_document(path)
    out = tmp_path / "copy.json"
    io.write_document(out, doc)
    assert same_bits(io.read_document(out), doc)
    assert out.read_text() == io.dumps_document(doc)


@pytest.mark.parametrize("path", INVALID, ids=lambda p: p.name)
def test_invalid_fixtures_are_rejected(path):
    with pytest.raises(io.DocumentError):
        io.read_document(path)


@settings(max_examples=50, deadline=None)
@given(entries=st.lists(st.tuples(finite, finite), min_size=4, max_size=4))
def test_matrix_roundtrip_property(entries):
    m = np.array([complex(a, b) for a, b in entries]).reshape(2, 2)
    doc = {"kind": "state", "dims": [2], "matrix": io.encode_matrix(m)}
    back = io.decode_matrix(io.loads_document(io.dumps_document(doc))["matrix"])
    assert all(bits(x.real) == bits(y.real) and bits(x.imag) == bits(y.imag)
               for x, y in zip(back.ravel(), m.ravel()))


def test_channel_document_roundtrip(tmp_path):
    t = random_channel(3, 2, 2, 0)
    io.write_document(tmp_path / "c.json", io.channel_document(t, seed=0))
    back = io.load_channel(tmp_path / "c.json")
    assert all(np.array_equal(a, b) for a, b in zip(t.coeffs, back.coeffs))


def test_loaders_check_kind(tmp_path):
    io.write_document(tmp_path / "s.json", io.state_document(la.random_density(2, 0)))
    with pytest.raises(io.DocumentError):
        io.load_channel(tmp_path / "s.json")


def test_state_loader_checks_density(tmp_path):
    io.write_document(tmp_path / "s.json", io.state_document(np.eye(2)))
    with pytest.raises(io.InvalidInputError):
        io.load_state(tmp_path / "s.json")


def test_missing_file():
    with pytest.raises(io.DocumentError):
        io.read_document("/nonexistent/file.json")


class TestReportFormatting:
    def test_seventeen_significant_digits(self):
        assert io.fmt_float(0.1) == "0.10000000000000001"
        assert float(io.fmt_float(1 / 3)) == 1 / 3

    def test_non_finite_values_become_strings(self):
        text = io.dumps_report({"a": math.inf, "b": [1.0, -math.inf], "c": True})
        assert json.loads(text) == {"a": "inf", "b": [1.0, "-inf"], "c": True}

    def test_nested_structures_parse(self):
        rep = {"blocks": [{"p": 0, "w": 0.5}, {"p": 1, "w": 0.25}], "empty": [], "none": None}
        assert json.loads(io.dumps_report(rep)) == rep
