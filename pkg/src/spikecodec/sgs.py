"""Spike generation skipping: predict silent neurons from pre-neuron counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from spikecodec.layers import LayerSpec


@dataclass(frozen=True, eq=False)
class SkippingMap:
    flags: np.ndarray
    threshold: float

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=np.uint8)
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)

    @property
    def skipped(self) -> int:
        return int(self.flags.sum())

    def __len__(self):
        return int(self.flags.size)


def _checked_counts(prev_counts, layer: LayerSpec) -> np.ndarray:
    counts = np.asarray(prev_counts)
    if counts.size != layer.in_size or (counts.ndim == 3 and counts.shape != layer.in_shape):
        raise ValueError(f"counts shape {counts.shape} does not match layer input {layer.in_shape}")
    if np.any(counts < 0):
        raise ValueError("spike counts must be non-negative")
    return counts.astype(np.int64)


def receptive_field_means(prev_counts, layer: LayerSpec) -> np.ndarray:
    """Mean count over each output neuron's full receptive field (padding counts as 0)."""
    return layer.gather(_checked_counts(prev_counts, layer)).sum(axis=1) / layer.synapses


def build_skipping_map(prev_counts, layer: LayerSpec, tau: float) -> SkippingMap:
    if tau < 0:
        raise ValueError("skipping threshold must be non-negative")
    sums = layer.gather(_checked_counts(prev_counts, layer)).sum(axis=1)
    # mean < tau  <=>  sum < tau * volume; avoids rounding the mean
    flags = sums < tau * layer.synapses
    return SkippingMap(flags, float(tau))


def apply_skipping(skip_map: SkippingMap, work_items):
    """Keep work items whose zero flag is clear. Items are neuron indices."""
    return [n for n in work_items if not skip_map.flags[n]]
