import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ghsomkit import DataMatrix, PreprocessSpec, load_csv, preprocess, save_csv, transpose


def _matrix(values, labels=None):
    values = np.asarray(values, dtype=float)
    n, a = values.shape
    return DataMatrix(
        values=values,
        sample_ids=[f"s{i}" for i in range(n)],
        attribute_names=[f"f{j}" for j in range(a)],
        labels=labels,
        label_name="label" if labels is not None else None,
    )


def test_roundtrip_exact_awkward_floats(tmp_path):
    vals = np.array(
        [
            [0.1, 1e-17, -0.0],
            [1234567.890123456789, 2**-1074, -1e300],
            [np.pi, 1 / 3, 6.02e23],
        ]
    )
    m = _matrix(vals, labels=["a", "b", "a"])
    p = tmp_path / "m.csv"
    save_csv(m, p)
    back = load_csv(p, label_column="label")
    assert back.values.tobytes() == m.values.tobytes()
    assert back.sample_ids == m.sample_ids
    assert back.attribute_names == m.attribute_names
    assert back.labels == m.labels
    assert back.label_name == "label"


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(
        dtype=np.float64,
        shape=st.tuples(st.integers(1, 8), st.integers(1, 6)),
        elements=st.floats(allow_nan=False, allow_infinity=False, width=64),
    )
)
def test_roundtrip_property(vals):
    m = _matrix(vals)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "m.csv"
        save_csv(m, p)
        back = load_csv(p)
    # bitwise equality, including signed zeros and subnormals
    assert back.values.tobytes() == m.values.tobytes()


def test_load_default_label_column_is_last(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("id,f0,f1,kind\na,1,2,x\nb,3,4,y\n")
    m = load_csv(p, has_labels=True)
    assert m.attribute_names == ["f0", "f1"]
    assert m.labels == ["x", "y"]
    assert m.label_name == "kind"


def test_load_label_column_by_name_mid_table(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("id,f0,kind,f1\na,1,x,2\nb,3,y,4\n")
    m = load_csv(p, label_column="kind")
    assert m.attribute_names == ["f0", "f1"]
    np.testing.assert_array_equal(m.values, [[1.0, 2.0], [3.0, 4.0]])
    assert m.labels == ["x", "y"]


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("", "empty file"),
        ("id\n", "at least one attribute"),
        ("id,f0\n", "no data rows"),
        ("id,f0\na,1\na,2\n", "duplicate sample id 'a'"),
        ("id,f0\na,nan\n", "non-finite"),
        ("id,f0\na,inf\n", "non-finite"),
        ("id,f0\na,zebra\n", "cannot parse 'zebra'"),
        ("id,f0\na,1,9\n", "expected 2"),
    ],
)
def test_load_rejects_malformed(tmp_path, text, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ValueError, match=fragment):
        load_csv(p)


def test_load_missing_label_column(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("id,f0\na,1\n")
    with pytest.raises(ValueError, match="no column named 'kind'"):
        load_csv(p, label_column="kind")


def test_matrix_validation():
    with pytest.raises(ValueError, match="duplicate sample ids"):
        DataMatrix(np.ones((2, 1)), ["a", "a"], ["f0"])
    with pytest.raises(ValueError, match="duplicate attribute names"):
        DataMatrix(np.ones((1, 2)), ["a"], ["f", "f"])
    with pytest.raises(ValueError, match="non-finite value at sample 's1'"):
        _matrix([[1.0, 2.0], [np.nan, 4.0]])
    with pytest.raises(ValueError, match="2-D"):
        DataMatrix(np.ones(3), ["a", "b", "c"], ["f"])


def test_transpose_swaps_axes_and_drops_labels():
    m = _matrix([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], labels=["x", "y"])
    t = transpose(m)
    assert t.sample_ids == ["f0", "f1", "f2"]
    assert t.attribute_names == ["s0", "s1"]
    assert t.labels is None
    np.testing.assert_array_equal(t.values, m.values.T)
    back = transpose(t)
    np.testing.assert_array_equal(back.values, m.values)


def test_log_normalize_matches_formula():
    m = _matrix([[1.0, 3.0], [5.0, 5.0]])
    out = preprocess(m, PreprocessSpec(log_normalize=True, scale_factor=100.0))
    expected = np.log1p(np.array([[25.0, 75.0], [50.0, 50.0]]))
    np.testing.assert_allclose(out.values, expected, rtol=0, atol=0)


def test_log_normalize_rejects_zero_row():
    m = _matrix([[0.0, 0.0], [1.0, 2.0]])
    with pytest.raises(ValueError, match="zero row sum"):
        preprocess(m, PreprocessSpec(log_normalize=True))


def test_top_k_variable_keeps_highest_variance_in_order():
    rng = np.random.default_rng(0)
    vals = np.column_stack(
        [
            rng.normal(scale=0.1, size=40),  # f0, low
            rng.normal(scale=5.0, size=40),  # f1, high
            rng.normal(scale=1.0, size=40),  # f2, mid
        ]
    )
    out = preprocess(_matrix(vals), PreprocessSpec(top_k_variable=2))
    assert out.attribute_names == ["f1", "f2"]
    np.testing.assert_array_equal(out.values, vals[:, [1, 2]])


def test_top_k_variable_exceeding_width_rejected():
    m = _matrix([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError, match="exceeds the 2 available"):
        preprocess(m, PreprocessSpec(top_k_variable=3))


@settings(max_examples=40, deadline=None)
@given(
    hnp.arrays(
        dtype=np.float64,
        shape=st.tuples(st.integers(2, 20), st.integers(1, 6)),
        elements=st.floats(-1e6, 1e6),
    )
)
def test_zscore_moments(vals):
    out = preprocess(_matrix(vals), PreprocessSpec(zscore=True))
    mean = out.values.mean(axis=0)
    var = out.values.var(axis=0)
    for j in range(vals.shape[1]):
        if np.all(out.values[:, j] == 0.0):
            # only attributes with (float-)zero variance may collapse
            assert np.ptp(vals[:, j]) == 0 or np.var(vals[:, j]) == 0
        else:
            assert abs(mean[j]) < 1e-9
            assert abs(var[j] - 1.0) < 1e-9


def test_preprocess_deterministic():
    rng = np.random.default_rng(5)
    m = _matrix(rng.uniform(0.1, 9.0, size=(15, 7)))
    spec = PreprocessSpec(log_normalize=True, top_k_variable=4, zscore=True)
    a = preprocess(m, spec)
    b = preprocess(m, spec)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.attribute_names == b.attribute_names


def test_preprocess_pipeline_order():
    # transpose happens first: top_k then selects among original rows
    m = _matrix([[1.0, 2.0], [3.0, 400.0], [5.0, 6.0]], labels=["x", "y", "z"])
    out = preprocess(m, PreprocessSpec(transpose=True, top_k_variable=1))
    assert out.sample_ids == ["f0", "f1"]
    assert out.attribute_names == ["s1"]  # row s1 had the wild value
    assert out.labels is None


def test_preprocess_spec_validation():
    with pytest.raises(ValueError, match="scale_factor"):
        PreprocessSpec(scale_factor=0.0)
    with pytest.raises(ValueError, match="top_k_variable"):
        PreprocessSpec(top_k_variable=0)
