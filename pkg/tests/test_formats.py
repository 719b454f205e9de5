import numpy as np
import pytest
from hypothesis import given, strategies as st

from fennsim.formats import (FormatError, events_from_bytes, events_to_bytes, load_events, load_weights,
                             save_events, save_weights, weights_from_bytes, weights_to_bytes)


def test_event_layout():
    assert events_to_bytes([(1, 2)]) == bytes([1, 0, 0, 0, 2, 0, 0, 0])


def test_weight_layout():
    data = weights_to_bytes(np.array([[1, -1]]), 14)
    assert data == bytes([1, 0, 0, 0, 2, 0, 0, 0, 14, 0, 0, 0, 1, 0, 0xFF, 0xFF])


@given(st.lists(st.tuples(st.integers(0, 1000), st.integers(0, 2 ** 32 - 1)), max_size=50))
def test_events_roundtrip(pairs):
    ev = np.array(sorted(pairs, key=lambda p: p[0]), dtype=np.int64).reshape(-1, 2)
    assert np.array_equal(events_from_bytes(events_to_bytes(ev)), ev)


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 15), st.integers(0, 2 ** 32 - 1))
def test_weights_roundtrip(rows, cols, frac, seed):
    w = np.random.default_rng(seed).integers(-32768, 32768, (rows, cols))
    back, f = weights_from_bytes(weights_to_bytes(w, frac))
    assert f == frac and back.shape == (rows, cols) and np.array_equal(back, w)


def test_format_errors():
    with pytest.raises(FormatError):
        events_to_bytes([(2, 0), (1, 0)])
    with pytest.raises(FormatError):
        events_from_bytes(b"\0" * 7)
    with pytest.raises(FormatError):
        weights_to_bytes(np.array([40000]).reshape(1, 1), 14)
    with pytest.raises(FormatError):
        weights_to_bytes(np.zeros(3), 14)
    with pytest.raises(FormatError):
        weights_from_bytes(weights_to_bytes(np.zeros((2, 2)), 3)[:-1])
    with pytest.raises(FormatError):
        weights_from_bytes(b"\0" * 5)


def test_files(tmp_path):
    save_events(tmp_path / "e.bin", [(0, 3), (4, 1)])
    assert load_events(tmp_path / "e.bin").tolist() == [[0, 3], [4, 1]]
    save_weights(tmp_path / "w.bin", np.eye(3, dtype=int) * 100, 12)
    w, f = load_weights(tmp_path / "w.bin")
    assert f == 12 and w[1, 1] == 100
