"""Synthetic activations and random integer test networks."""

from __future__ import annotations

import numpy as np

from spikecodec.codec import EncodingParams
from spikecodec.layers import LayerSpec
from spikecodec.network import NetworkSpec, _conv_accumulate
from spikecodec.simulator import ArchConfig

# Full-scale fraction; puts the mean eigen-train spike ratio at 4.5-5% for
# m=4 and m=8 (see scripts/calibrate_sigma.py).
DEFAULT_SIGMA = 0.063


def gen_synthetic(shape, params: EncodingParams, seed: int, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Half-normal activations ``|N(0, sigma)|`` in full-scale units, rounded to codes."""
    if seed is None:
        raise ValueError("a seed is required")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    z = np.abs(rng.standard_normal(tuple(shape)))
    codes = np.rint(z * sigma * params.max_value)
    return np.clip(codes, 0, params.max_value).astype(np.uint8)


def conv_layer(rng: np.random.Generator, in_shape, cout: int, k: int, stride: int = 1, padding: int = 0,
               wmax: int = 8, **kwargs) -> LayerSpec:
    cin, h, w = in_shape
    weights = rng.integers(-wmax, wmax + 1, size=(cout, cin, k, k))
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    return LayerSpec("conv2d", in_shape, (cout, ho, wo), weights, stride, padding, **kwargs)


def fc_layer(rng: np.random.Generator, in_shape, features: int, wmax: int = 8, **kwargs) -> LayerSpec:
    size = int(np.prod(in_shape))
    weights = rng.integers(-wmax, wmax + 1, size=(features, size, 1, 1))
    return LayerSpec("fc", in_shape, (features, 1, 1), weights, **kwargs)


def _calibrate(layer: LayerSpec, batch: list[np.ndarray], tw: int) -> LayerSpec:
    """Pick a full-window threshold so that a moderate fraction of neurons fire on ``batch``."""
    acc = np.concatenate([_conv_accumulate(x, layer).reshape(-1) for x in batch])
    positive = acc[acc > 0]
    layer.theta_dt = max(int(np.quantile(positive, 0.25)), 1) if positive.size else 1
    layer.theta = max(layer.theta_dt // tw, 1)
    return layer


def _random_layer(rng, shape, max_dim: int, tw: int, fc: bool) -> LayerSpec:
    cout = int(rng.integers(2, max_dim + 1))
    if fc:
        return fc_layer(rng, shape, cout, dt_delay=tw)
    k = int(rng.choice([1, 3]))
    padding = int(rng.integers(0, 2)) if k == 3 else 0
    stride = int(rng.integers(1, 3))
    if min(shape[1], shape[2]) + 2 * padding < k:
        k, padding = 1, 0
    return conv_layer(rng, shape, cout, k, stride, padding, dt_delay=tw)


def random_network(seed: int, params: EncodingParams | None = None, n_layers: int = 3, max_dim: int = 8,
                   arch: ArchConfig | None = None) -> NetworkSpec:
    """Random conv/fc stack with shapes bounded by ``max_dim``.

    Weights are uniform in [-8, 8]; thresholds are set against a random
    calibration batch so a moderate share (typically 30-70%) of each
    layer's neurons fire.
    """
    params = params or EncodingParams()
    rng = np.random.default_rng(seed)
    tw = params.tw
    shape = (int(rng.integers(1, max_dim + 1)), int(rng.integers(3, max_dim + 1)),
             int(rng.integers(3, max_dim + 1)))
    batch = [rng.integers(0, params.max_value + 1, size=shape) for _ in range(8)]
    layers = []
    for i in range(n_layers):
        last = i == n_layers - 1
        # redraw layers whose calibration accumulations are almost never positive
        for _ in range(20):
            layer = _random_layer(rng, shape, max_dim, tw, fc=last and rng.random() < 0.5)
            acc = np.concatenate([_conv_accumulate(x, layer).reshape(-1) for x in batch])
            if (acc > 0).mean() >= 0.3:
                break
        layer = _calibrate(layer, batch, tw)
        layer.name = f"layer{i}"
        batch = [np.clip(np.maximum(_conv_accumulate(x, layer), 0) // layer.theta_dt, 0, params.max_value)
                 for x in batch]
        shape = layer.out_shape
        layers.append(layer)
    return NetworkSpec(layers, params, arch or ArchConfig(), seed=seed)


def synthetic_layer(params: EncodingParams, seed: int, cin: int = 16, size: int = 8, cout: int = 16,
                    k: int = 3, sigma: float = DEFAULT_SIGMA) -> LayerSpec:
    """Same-padded conv layer with its full-window threshold calibrated on half-normal inputs."""
    rng = np.random.default_rng(seed)
    layer = conv_layer(rng, (cin, size, size), cout, k, 1, k // 2, dt_delay=params.tw)
    batch = [gen_synthetic(layer.in_shape, params, seed=seed + 1 + i, sigma=sigma) for i in range(4)]
    layer = _calibrate(layer, batch, params.tw)
    layer.name = "synthetic"
    return layer
