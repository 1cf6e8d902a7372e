"""Integer conv / fully-connected layer descriptions and receptive-field geometry."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np

KINDS = ("conv2d", "fc")


@dataclass(eq=False)
class LayerSpec:
    """One layer: weights are ``(out, in, ky, kx)`` int32, fc uses ``ky = kx = 1``
    over the flattened input.

    ``theta_dt`` left as ``None`` defaults to ``delay * theta``; ``dt_delay``
    left as ``None`` means a single full-window thresholding.
    """

    kind: str
    in_shape: tuple[int, int, int]
    out_shape: tuple[int, int, int]
    weights: np.ndarray
    stride: int = 1
    padding: int = 0
    theta: int = 1
    theta_dt: int | None = None
    dt_delay: int | None = None
    sgs_tau: float = 0.0
    name: str = field(default="")

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"layer kind must be one of {KINDS}, got {self.kind!r}")
        self.in_shape = tuple(int(x) for x in self.in_shape)
        self.out_shape = tuple(int(x) for x in self.out_shape)
        if len(self.in_shape) != 3 or len(self.out_shape) != 3:
            raise ValueError("shapes are (channels, height, width)")
        self.weights = np.asarray(self.weights)
        if not np.issubdtype(self.weights.dtype, np.integer):
            raise ValueError("weights must be integers")
        self.weights = self.weights.astype(np.int32)
        if self.kind == "fc" and self.weights.ndim == 2:
            self.weights = self.weights[:, :, None, None]
        if self.weights.ndim != 4:
            raise ValueError("weights must be (out, in, ky, kx)")
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")
        if self.theta < 1:
            raise ValueError("theta must be >= 1")
        if self.theta_dt is not None and self.theta_dt < 1:
            raise ValueError("theta_dt must be >= 1")
        if self.sgs_tau < 0:
            raise ValueError("sgs_tau must be non-negative")
        cin, h, w = self.in_shape
        cout, ky, kx = self.weights.shape[0], self.weights.shape[2], self.weights.shape[3]
        if self.kind == "fc":
            expected_w = (self.out_shape[0], cin * h * w, 1, 1)
            expected_out = (self.out_shape[0], 1, 1)
        else:
            ho = (h + 2 * self.padding - ky) // self.stride + 1
            wo = (w + 2 * self.padding - kx) // self.stride + 1
            if ho < 1 or wo < 1:
                raise ValueError("kernel larger than padded input")
            expected_w = (self.out_shape[0], cin, ky, kx)
            expected_out = (cout, ho, wo)
        if self.weights.shape != expected_w:
            raise ValueError(f"weight shape {self.weights.shape} does not match {expected_w}")
        if self.out_shape != expected_out:
            raise ValueError(f"out_shape {self.out_shape} inconsistent, expected {expected_out}")

    @property
    def kernel(self) -> tuple[int, int]:
        return int(self.weights.shape[2]), int(self.weights.shape[3])

    @property
    def synapses(self) -> int:
        """Receptive-field volume Cin*Ky*Kx (fc: input size)."""
        return int(np.prod(self.weights.shape[1:]))

    @property
    def n_out(self) -> int:
        return int(np.prod(self.out_shape))

    @property
    def in_size(self) -> int:
        return int(np.prod(self.in_shape))

    def delay(self, tw: int) -> int:
        return tw if self.dt_delay is None else int(self.dt_delay)

    def threshold_for(self, delay: int) -> int:
        return int(self.theta_dt) if self.theta_dt is not None else int(delay) * int(self.theta)

    @cached_property
    def _position_rf(self) -> np.ndarray:
        """``(Ho*Wo, S)`` flat input indices; ``in_size`` marks a padded slot."""
        cin, h, w = self.in_shape
        if self.kind == "fc":
            return np.arange(self.in_size, dtype=np.int64)[None, :]
        ky, kx = self.kernel
        _, ho, wo = self.out_shape
        oy = np.arange(ho)[:, None] * self.stride - self.padding
        ox = np.arange(wo)[:, None] * self.stride - self.padding
        iy = oy[:, None, :, None] + np.arange(ky)[None, None, :, None]  # (ho,1,ky,1)
        ix = ox[None, :, None, :] + np.arange(kx)[None, None, None, :]  # (1,wo,1,kx)
        iy, ix = np.broadcast_arrays(iy, ix)  # (ho,wo,ky,kx)
        valid = (iy >= 0) & (iy < h) & (ix >= 0) & (ix < w)
        flat = np.clip(iy, 0, h - 1) * w + np.clip(ix, 0, w - 1)
        c = np.arange(cin)[None, None, :, None, None]
        idx = c * (h * w) + flat[:, :, None, :, :]
        idx = np.where(valid[:, :, None, :, :], idx, self.in_size)
        return idx.reshape(ho * wo, cin * ky * kx)

    def receptive_fields(self) -> np.ndarray:
        """``(n_out, S)`` flat input index per output neuron, neuron order (co, y, x)."""
        pos = self._position_rf
        return np.tile(pos, (self.out_shape[0], 1))

    def neuron_weights(self) -> np.ndarray:
        """``(n_out, S)`` weight row per output neuron, aligned with ``receptive_fields``."""
        rows = self.weights.reshape(self.weights.shape[0], -1).astype(np.int64)
        return np.repeat(rows, self._position_rf.shape[0], axis=0)

    def gather(self, values: np.ndarray) -> np.ndarray:
        """Receptive-field values per output neuron; padding reads as zero."""
        flat = np.asarray(values).reshape(-1)
        if flat.size != self.in_size:
            raise ValueError(f"input has {flat.size} values, layer expects {self.in_shape}")
        padded = np.concatenate([flat, np.zeros(1, dtype=flat.dtype)])
        return padded[self.receptive_fields()]

    def __eq__(self, other):
        if not isinstance(other, LayerSpec):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if not (a.shape == b.shape and np.array_equal(a, b)):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None
