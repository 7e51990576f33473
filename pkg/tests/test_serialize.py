import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nio_synth import serialize as io
from nio_synth.errors import SchemaError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
def test_matrix_roundtrip_is_exact(M):
    back = io.read_mat(json.loads(io.dumps(io.mat(M))))
    assert np.array_equal(back, M)


def test_nested_list_accepted():
    assert io.read_mat([[1, 2], [3, 4]]).shape == (2, 2)


@pytest.mark.parametrize("obj,msg", [
    ({"rows": 2, "cols": 2, "data": [[1, 2]]}, "declared"),
    ({"rows": 1, "cols": 2, "data": [[1, 2, 3]]}, "row 0"),
    ({"rows": 1, "cols": 1}, "missing key 'data'"),
    ({"rows": 1, "cols": 1, "data": [["x"]]}, "non-numeric"),
    ("nope", "expected a matrix"),
])
def test_bad_matrices(obj, msg):
    with pytest.raises(SchemaError, match=msg):
        io.read_mat(obj, "thing")


def test_expected_shape():
    with pytest.raises(SchemaError, match="expected 3 rows"):
        io.read_mat([[1.0]], "K", (3, None))


def test_write_load_hash(tmp_path):
    h = io.write(tmp_path / "a.json", {"x": 1})
    doc, h2 = io.load(tmp_path / "a.json")
    assert doc == {"x": 1} and h == h2 and h.startswith("sha256:")


def test_load_reports_position(tmp_path):
    (tmp_path / "bad.json").write_text('{"a": 1,\n "b": }')
    with pytest.raises(SchemaError, match="line 2"):
        io.load(tmp_path / "bad.json")


def test_no_nan():
    with pytest.raises(ValueError):
        io.dumps({"x": float("nan")})
