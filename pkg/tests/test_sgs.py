import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikecodec.layers import LayerSpec
from spikecodec.sgs import apply_skipping, build_skipping_map, receptive_field_means
from spikecodec.synthetic import conv_layer


def fc3():
    return LayerSpec("fc", (3, 1, 1), (1, 1, 1), np.ones((1, 3, 1, 1), dtype=int))


def test_zero_field_is_skipped():
    m = build_skipping_map(np.zeros((3, 1, 1), dtype=int), fc3(), 1.0)
    assert m.flags.tolist() == [1]


def test_mean_at_or_above_threshold_is_kept():
    counts = np.array([4, 2, 6]).reshape(3, 1, 1)
    assert receptive_field_means(counts, fc3()).tolist() == [4.0]
    assert build_skipping_map(counts, fc3(), 3).flags.tolist() == [0]
    # strict comparison: mean == tau is not skipped
    assert build_skipping_map(counts, fc3(), 4).flags.tolist() == [0]
    assert build_skipping_map(counts, fc3(), 4.01).flags.tolist() == [1]


def test_tau_zero_skips_nothing(rng):
    layer = conv_layer(rng, (3, 5, 5), 4, 3, 1, 1)
    m = build_skipping_map(np.zeros((3, 5, 5), dtype=int), layer, 0.0)
    assert m.skipped == 0 and len(m) == layer.n_out


def test_padding_counts_as_zero():
    layer = LayerSpec("conv2d", (1, 2, 2), (1, 2, 2), np.ones((1, 1, 3, 3), dtype=int), padding=1)
    counts = np.full((1, 2, 2), 9)
    # every 3x3 window covers the four real inputs plus five padded zeros
    np.testing.assert_allclose(receptive_field_means(counts, layer), [4.0] * 4)


def test_apply_skipping():
    layer = LayerSpec("fc", (3, 1, 1), (3, 1, 1), np.ones((3, 3, 1, 1), dtype=int))
    m = build_skipping_map(np.zeros((3, 1, 1), dtype=int), layer, 1.0)
    assert apply_skipping(m, [0, 1, 2]) == []
    m = build_skipping_map(np.ones((3, 1, 1), dtype=int), layer, 0.0)
    assert apply_skipping(m, [0, 1, 2]) == [0, 1, 2]
    from spikecodec.sgs import SkippingMap

    assert apply_skipping(SkippingMap(np.array([1, 0, 1]), 1.0), [0, 1, 2]) == [1]


def test_shape_mismatch(rng):
    layer = conv_layer(rng, (3, 5, 5), 4, 3)
    with pytest.raises(ValueError):
        build_skipping_map(np.zeros((3, 4, 5)), layer, 1.0)
    with pytest.raises(ValueError):
        build_skipping_map(np.zeros((3, 5, 5)), layer, -1.0)


@given(st.integers(0, 2**32 - 1), st.floats(0, 8), st.floats(0, 8))
def test_monotone_in_tau(seed, t1, t2):
    rng = np.random.default_rng(seed)
    layer = conv_layer(rng, (2, 5, 5), 2, 3, 1, 1)
    counts = rng.integers(0, 16, size=(2, 5, 5))
    counts[rng.random(counts.shape) < 0.6] = 0
    lo, hi = sorted((t1, t2))
    a = build_skipping_map(counts, layer, lo).flags
    b = build_skipping_map(counts, layer, hi).flags
    assert np.all(b >= a)


@given(st.integers(0, 2**32 - 1))
def test_matches_brute_force_mean(seed):
    rng = np.random.default_rng(seed)
    layer = conv_layer(rng, (2, 4, 5), 3, 3, int(rng.integers(1, 3)), int(rng.integers(0, 2)))
    counts = rng.integers(0, 16, size=layer.in_shape)
    means = receptive_field_means(counts, layer).reshape(layer.out_shape)
    cin, h, w = layer.in_shape
    for co, y, x in np.ndindex(*layer.out_shape):
        total = 0
        for ci in range(cin):
            for dy in range(3):
                for dx in range(3):
                    iy, ix = y * layer.stride - layer.padding + dy, x * layer.stride - layer.padding + dx
                    if 0 <= iy < h and 0 <= ix < w:
                        total += counts[ci, iy, ix]
        assert means[co, y, x] == pytest.approx(total / (cin * 9))
