from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecodec.codec import EncodingParams
from spikecodec.layers import LayerSpec
from spikecodec.sgs import build_skipping_map
from spikecodec.simulator import (
    ArchConfig,
    SimCounters,
    encoder_cycle_count,
    reference_encoder_cycles,
    simulate_baseline_layer,
    simulate_layer,
)
from spikecodec.synthetic import conv_layer, fc_layer, gen_synthetic, synthetic_layer

from reference_sim import reference_simulate

M4 = EncodingParams(4)
ONE_PE = ArchConfig(pe_rows=1, pe_cols=1)
OFF = ONE_PE.features_off(16)


def dot_layer(**kw):
    # 1x1 conv, 2 input channels, weights (4, 1)
    return LayerSpec("conv2d", (2, 1, 1), (1, 1, 1), np.array([4, 1]).reshape(1, 2, 1, 1), **kw)


def test_dot_product_example():
    layer = dot_layer(theta_dt=16, dt_delay=16)
    x = np.array([3, 5]).reshape(2, 1, 1)
    out, c = simulate_layer(x, layer, OFF, M4)
    assert out.item() == 1
    assert c.input_spikes == 8
    assert c.accumulate_ops == 8
    assert c.values_encoded == 2


def test_zero_input_layer():
    rng = np.random.default_rng(0)
    layer = conv_layer(rng, (3, 5, 5), 4, 3, 1, 1, theta=2)
    out, c = simulate_layer(np.zeros((3, 5, 5), dtype=int), layer, ArchConfig(), M4)
    assert not out.any()
    assert c.pe_cycles == 0
    assert c.input_spikes == c.accumulate_ops == c.output_spikes == 0


def test_fetch_ratio_delay_8_vs_1():
    layer = dot_layer(theta=1)
    x = np.array([3, 5]).reshape(2, 1, 1)
    _, c1 = simulate_layer(x, layer, replace(ONE_PE, dt_delay=1), M4)
    _, c8 = simulate_layer(x, layer, replace(ONE_PE, dt_delay=8), M4)
    assert c1.weight_fetches == 32
    assert c1.weight_fetches == 8 * c8.weight_fetches


def test_baseline_cycle_model():
    rng = np.random.default_rng(1)
    layer = conv_layer(rng, (4, 3, 3), 1, 3)  # one output neuron, S = 36
    x = gen_synthetic((4, 3, 3), M4, seed=2, sigma=0.3)
    _, c = simulate_baseline_layer(x, layer, ONE_PE, M4)
    assert c.pe_cycles == 576
    assert c.weight_fetches == 576
    assert c.threshold_ops == 16
    _, z = simulate_baseline_layer(np.zeros((4, 3, 3), dtype=int), layer, ONE_PE, M4)
    assert z.pe_cycles == 576 and z.weight_fetches == 576


def test_encoder_cycle_count():
    assert encoder_cycle_count(1, M4, 8) == 2
    assert encoder_cycle_count(1, M4, 1) == 16
    assert encoder_cycle_count(5, M4, ArchConfig()) == 10
    assert encoder_cycle_count(3, M4, 5) == 12  # ceil(16/5) = 4
    for m in (4, 6, 8):
        p = EncodingParams(m)
        assert reference_encoder_cycles(7, p) == 8 * encoder_cycle_count(7, p, 8)
    with pytest.raises(ValueError):
        encoder_cycle_count(1, M4, 0)


def random_case(seed):
    rng = np.random.default_rng(seed)
    params = EncodingParams(int(rng.choice([2, 4, 6])))
    cin = int(rng.integers(1, 4))
    h, w = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    if rng.random() < 0.25:
        layer = fc_layer(rng, (cin, h, w), int(rng.integers(1, 5)), theta=int(rng.integers(1, 4)))
    else:
        k = int(rng.choice([1, 2, 3]))
        pad = int(rng.integers(0, 2))
        if min(h, w) + 2 * pad < k:
            k = 1
        layer = conv_layer(rng, (cin, h, w), int(rng.integers(1, 4)), k, int(rng.integers(1, 3)), pad,
                           theta=int(rng.integers(1, 4)), sgs_tau=float(rng.choice([0.0, 0.5, 2.0])))
    tw = params.tw
    divisors = [d for d in range(1, tw + 1) if tw % d == 0]
    arch = ArchConfig(
        pe_rows=int(rng.integers(1, 3)),
        pe_cols=int(rng.integers(1, 4)),
        encoder_steps_per_cycle=int(rng.integers(1, 9)),
        tsmle_enabled=bool(rng.random() < 0.7),
        tsmle_window=int(rng.choice([2, 4, 8])),
        levels=int(rng.integers(2, 6)),
        slcs_enabled=bool(rng.random() < 0.6),
        sb_enabled=bool(rng.random() < 0.5),
        dt_delay=int(rng.choice(divisors)),
    )
    x = rng.integers(0, params.max_value + 1, size=layer.in_shape)
    x[rng.random(layer.in_shape) < 0.5] = 0
    return x, layer, arch, params


@pytest.mark.parametrize("seed", range(60))
def test_matches_scalar_reference(seed):
    x, layer, arch, params = random_case(seed)
    out, c = simulate_layer(x, layer, arch, params)
    ref_out, ref_c = reference_simulate(x, layer, arch, params)
    np.testing.assert_array_equal(out, ref_out)
    assert c == ref_c


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_tsmle_slcs_never_slower_than_baseline(seed, density):
    rng = np.random.default_rng(seed)
    layer = conv_layer(rng, (3, 4, 4), 4, 3, 1, 1, theta=3)
    x = rng.integers(0, 16, size=layer.in_shape)
    x[rng.random(layer.in_shape) > density] = 0
    for pe in ((1, 1), (2, 2), (4, 4)):
        arch = ArchConfig(*pe, tsmle_enabled=True, slcs_enabled=True)
        _, c = simulate_layer(x, layer, arch, M4)
        _, b = simulate_baseline_layer(x, layer, arch, M4)
        assert c.pe_cycles <= b.pe_cycles
        assert c.total_cycles <= b.total_cycles


def test_dense_tsmle_without_slcs_can_exceed_baseline():
    # a full window (8 spikes) needs 3 slot-steps at 3 cycles each
    layer = dot_layer(theta=1)
    x = np.array([15, 15]).reshape(2, 1, 1)
    _, c = simulate_layer(x, layer, replace(ONE_PE, slcs_enabled=False), M4)
    _, b = simulate_baseline_layer(x, layer, ONE_PE, M4)
    _, s = simulate_layer(x, layer, ONE_PE, M4)
    assert b.pe_cycles == 32
    # window 0 holds 7 spikes, window 1 holds 8: three slot-steps each
    assert c.pe_cycles == 2 * 2 * 3 * 3
    assert s.pe_cycles == 2 * (7 + 8)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_feature_off_matches_baseline_nonnegative(seed):
    rng = np.random.default_rng(seed)
    layer = conv_layer(rng, (2, 4, 4), 3, 3, 1, 1, wmax=6)
    layer.weights = np.abs(layer.weights)
    theta = int(rng.integers(1, 40))
    layer.theta, layer.theta_dt = theta, theta
    x = rng.integers(0, 16, size=layer.in_shape)
    arch = ArchConfig().features_off(16)
    out, _ = simulate_layer(x, layer, arch, M4)
    base, _ = simulate_baseline_layer(x, layer, arch, M4)
    np.testing.assert_array_equal(out, base)


def test_counter_consistency():
    layer = synthetic_layer(M4, seed=5, cin=4, size=6, cout=4)
    x = gen_synthetic(layer.in_shape, M4, seed=6, sigma=0.2)
    for arch in (ArchConfig(), ArchConfig(tsmle_enabled=False), replace(ArchConfig(), sb_enabled=True)):
        _, c = simulate_layer(x, layer, arch, M4)
        assert c.accumulate_ops == c.input_spikes
        assert c.total_cycles == c.encoder_cycles + c.pe_cycles
        assert all(v >= 0 for v in c.as_dict().values())


def test_sb_reduces_work():
    layer = synthetic_layer(M4, seed=5, cin=4, size=6, cout=4)
    x = gen_synthetic(layer.in_shape, M4, seed=6, sigma=0.3)
    assert (x >= 4).any()
    out0, c0 = simulate_layer(x, layer, ArchConfig(), M4)
    out1, c1 = simulate_layer(x, layer, replace(ArchConfig(), sb_enabled=True), M4)
    assert c1.accumulate_ops < c0.accumulate_ops
    assert c1.input_spikes < c0.input_spikes
    assert c1.pe_cycles <= c0.pe_cycles


def test_sgs_tau_zero_is_neutral():
    layer = synthetic_layer(M4, seed=7, cin=4, size=6, cout=4)
    x = gen_synthetic(layer.in_shape, M4, seed=8)
    a = simulate_layer(x, layer, replace(ArchConfig(), sgs_tau=0.0), M4)
    layer.sgs_tau = 0.0
    b = simulate_layer(x, layer, ArchConfig(), M4)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]


def test_sgs_only_zeroes_outputs_and_is_monotone():
    layer = synthetic_layer(M4, seed=9, cin=4, size=6, cout=4)
    x = gen_synthetic(layer.in_shape, M4, seed=10, sigma=0.15)
    ref, _ = simulate_layer(x, layer, replace(ArchConfig(), sgs_tau=0.0), M4)
    prev = -1
    for tau in (0.0, 0.2, 0.5, 1.0, 2.0, 5.0):
        out, c = simulate_layer(x, layer, replace(ArchConfig(), sgs_tau=tau), M4)
        assert np.all((out == ref) | (out == 0))
        assert c.skipped_neurons >= prev
        prev = c.skipped_neurons


def test_sgs_differencing_on_one_pe():
    """Skipped neurons vanish from every counter; the rest is untouched."""
    rng = np.random.default_rng(3)
    layer = conv_layer(rng, (2, 6, 6), 1, 3, 1, 0, theta=2)
    x = rng.integers(1, 16, size=layer.in_shape)
    x[:, :3, :3] = 0  # output neuron (0, 0) sees an all-zero field
    flags = build_skipping_map(x, layer, 0.5).flags
    assert flags[0] == 1
    _, full = simulate_layer(x, layer, replace(ONE_PE, sgs_tau=0.0), M4)
    out, skip = simulate_layer(x, layer, replace(ONE_PE, sgs_tau=0.5), M4)
    assert skip.skipped_neurons == flags.sum() >= 1
    assert out.reshape(-1)[flags == 1].sum() == 0

    kept, dropped = SimCounters(), SimCounters()
    for n in range(layer.n_out):
        if flags[n]:
            dropped += _single_neuron(x, layer, ONE_PE, n)
        else:
            kept += _single_neuron(x, layer, ONE_PE, n)
    assert skip == replace(kept, skipped_neurons=int(flags.sum()))
    assert full == kept + dropped
    assert full.weight_fetches - skip.weight_fetches == flags.sum() * layer.synapses


def _single_neuron(x, layer, arch, n):
    """Counters of one output neuron processed alone on a one-PE array."""
    co, rest = divmod(n, layer.out_shape[1] * layer.out_shape[2])
    y, xx = divmod(rest, layer.out_shape[2])
    # crop to the neuron's receptive field with an equivalent 1-output layer
    ky, kx = layer.kernel
    y0, x0 = y * layer.stride, xx * layer.stride
    sub_x = np.asarray(x)[:, y0:y0 + ky, x0:x0 + kx]
    sub = LayerSpec("conv2d", sub_x.shape, (1, 1, 1), layer.weights[co:co + 1], theta=layer.theta)
    _, c = reference_simulate(sub_x, sub, replace(arch, sgs_tau=0.0), M4)
    return c


def test_determinism():
    layer = synthetic_layer(M4, seed=11)
    x = gen_synthetic(layer.in_shape, M4, seed=12)
    a = simulate_layer(x, layer, ArchConfig(sb_enabled=True, sgs_tau=0.3), M4)
    b = simulate_layer(x, layer, ArchConfig(sb_enabled=True, sgs_tau=0.3), M4)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]


def test_outputs_clamped():
    layer = dot_layer(theta_dt=1, dt_delay=16)
    x = np.array([15, 15]).reshape(2, 1, 1)
    out, _ = simulate_layer(x, layer, ArchConfig(), M4)
    assert out.item() == 15


@pytest.mark.parametrize(
    "bad",
    [
        lambda: simulate_layer(np.zeros(3, dtype=int), dot_layer(), ArchConfig(), M4),
        lambda: simulate_layer(np.array([16, 0]), dot_layer(), ArchConfig(), M4),
        lambda: simulate_layer(np.array([1, 0]), dot_layer(), ArchConfig(dt_delay=3), M4),
        lambda: ArchConfig(pe_rows=0),
        lambda: ArchConfig(levels=1),
        lambda: ArchConfig(sgs_tau=-1.0),
    ],
)
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        bad()
