"""Source encoding: eigen-trains, superposition, sparsity boosting, baselines.

A value ``v`` with ``m`` bits is encoded over a window of ``2**m`` time steps.
Every bit position ``n`` owns a fixed eigen-train with ``2**n`` evenly spaced
spikes; the train for ``v`` is the OR of the eigen-trains of its set bits.
Eigen-train supports never overlap, so the spike count of the result equals
``v`` and counting decodes it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

VALID_BITS = (2, 4, 6, 8)


@dataclass(frozen=True)
class EncodingParams:
    m: int = 4

    def __post_init__(self):
        if self.m not in VALID_BITS:
            raise ValueError(f"bit width must be one of {VALID_BITS}, got {self.m}")

    @property
    def tw(self) -> int:
        return 1 << self.m

    @property
    def max_value(self) -> int:
        return (1 << self.m) - 1


@dataclass(frozen=True)
class EigenTrain:
    bit_position: int
    m: int
    spikes: tuple[int, ...]

    @property
    def period(self) -> int:
        return 1 << (self.m - self.bit_position)


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Binary occupancy over a time window.

    ``weights`` is only set by the phase encoder, where each spike carries
    the significance of the bit it reports.
    """

    bits: np.ndarray
    weights: np.ndarray | None = field(default=None)

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ValueError("spike train must be one-dimensional")
        if np.any(bits > 1):
            raise ValueError("spike train entries must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def window(self) -> int:
        return int(self.bits.shape[0])

    @property
    def spike_times(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        if not np.array_equal(self.bits, other.bits):
            return False
        if self.weights is None or other.weights is None:
            return self.weights is None and other.weights is None
        return np.array_equal(self.weights, other.weights)

    def __len__(self):
        return self.window


def _check_value(value: int, params: EncodingParams) -> int:
    value = int(value)
    if not 0 <= value <= params.max_value:
        raise ValueError(f"value {value} outside [0, {params.max_value}] for m={params.m}")
    return value


def eigen_train(n: int, params: EncodingParams) -> EigenTrain:
    """Eigen-train of bit position ``n``: ``2**n`` spikes, period ``2**(m-n)``.

    Spikes sit at ``t = 2**(m-n-1) - 1 (mod 2**(m-n))``; these residue
    classes are disjoint for distinct ``n``.
    """
    m = params.m
    if not 0 <= n < m:
        raise ValueError(f"bit position {n} outside [0, {m})")
    period = 1 << (m - n)
    offset = (period >> 1) - 1
    return EigenTrain(n, m, tuple(range(offset, params.tw, period)))


def superpose(value: int, params: EncodingParams) -> SpikeTrain:
    value = _check_value(value, params)
    bits = np.zeros(params.tw, dtype=np.uint8)
    n = 0
    while value >> n:
        if (value >> n) & 1:
            bits[list(eigen_train(n, params).spikes)] |= 1
        n += 1
    return SpikeTrain(bits)


def _group(value: int, i: int, m: int) -> int:
    if 2 * i >= m:
        return 0
    return (value >> (2 * i)) & 0b11


def sparsity_boost(value: int, params: EncodingParams) -> int:
    """Drop low-order spikes of large values.

    Each 2-bit group lying inside the low half of the word is zeroed when the
    group two above it is nonzero, otherwise halved when the group directly
    above is nonzero. Conditions always read the original value.
    """
    value = _check_value(value, params)
    m = params.m
    out = value
    i = 0
    while 2 * i + 2 <= m // 2:
        g = _group(value, i, m)
        if _group(value, i + 2, m):
            new = 0
        elif _group(value, i + 1, m):
            new = g >> 1
        else:
            new = g
        out = (out & ~(0b11 << (2 * i))) | (new << (2 * i))
        i += 1
    return out


def spike_count(train: SpikeTrain) -> int:
    return int(np.count_nonzero(train.bits))


@lru_cache(maxsize=None)
def _train_table(m: int, boost: bool) -> np.ndarray:
    params = EncodingParams(m)
    table = np.zeros((params.tw, params.tw), dtype=np.uint8)
    for v in range(params.tw):
        src = sparsity_boost(v, params) if boost else v
        table[v] = superpose(src, params).bits
    table.setflags(write=False)
    return table


def train_table(params: EncodingParams, boost: bool = False) -> np.ndarray:
    """Row ``v`` holds the (optionally boosted) superposed train of ``v``."""
    return _train_table(params.m, bool(boost))


@lru_cache(maxsize=None)
def _boost_table(m: int) -> np.ndarray:
    params = EncodingParams(m)
    table = np.array([sparsity_boost(v, params) for v in range(params.tw)], dtype=np.int64)
    table.setflags(write=False)
    return table


def boost_table(params: EncodingParams) -> np.ndarray:
    return _boost_table(params.m)


# ---------------------------------------------------------------------------
# baseline encoders (comparison only)

LFSR_TAPS = (16, 14, 13, 11)
DEFAULT_SEED = 0xACE1


@dataclass(frozen=True)
class LfsrState:
    """16-bit Fibonacci LFSR, polynomial x^16 + x^14 + x^13 + x^11 + 1."""

    state: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0 < self.state <= 0xFFFF:
            raise ValueError("LFSR state must be a nonzero 16-bit integer")

    def step(self) -> LfsrState:
        s = self.state
        bit = (s ^ (s >> 2) ^ (s >> 3) ^ (s >> 5)) & 1
        return LfsrState((s >> 1) | (bit << 15))


def encode_rate(value: int, tw: int, lfsr: LfsrState, params: EncodingParams) -> tuple[SpikeTrain, LfsrState]:
    """Spike at step ``t`` iff ``value`` exceeds the LFSR draw reduced mod ``2**m``.

    Returns the train and the advanced generator state.
    """
    value = _check_value(value, params)
    if not isinstance(lfsr, LfsrState):
        lfsr = LfsrState(lfsr)
    mask = params.max_value
    bits = np.zeros(tw, dtype=np.uint8)
    for t in range(tw):
        lfsr = lfsr.step()
        if value > (lfsr.state & mask):
            bits[t] = 1
    return SpikeTrain(bits), lfsr


def encode_ttfs(value: int, tw: int, params: EncodingParams) -> SpikeTrain:
    value = _check_value(value, params)
    bits = np.zeros(tw, dtype=np.uint8)
    if value:
        t = ((params.tw - value) * tw) // params.tw
        bits[min(max(t, 0), tw - 1)] = 1
    return SpikeTrain(bits)


def encode_phase(value: int, tw: int, params: EncodingParams) -> SpikeTrain:
    """MSB-first weighted spikes, repeated every ``m`` steps."""
    value = _check_value(value, params)
    m = params.m
    if tw <= 0 or tw % m:
        raise ValueError(f"phase coding needs a window that is a multiple of m={m}, got {tw}")
    phase = np.arange(tw) % m
    shifts = m - 1 - phase
    bits = ((value >> shifts) & 1).astype(np.uint8)
    weights = np.where(bits == 1, 1 << shifts, 0).astype(np.int64)
    return SpikeTrain(bits, weights)


def decode_phase(train: SpikeTrain, m: int) -> int:
    """Weighted spike sum over one phase period (first ``m`` steps)."""
    if train.weights is None:
        raise ValueError("phase decoding needs spike weights")
    return int(train.weights[:m].sum())


ENCODERS = ("etg", "etg+sb", "rate", "ttfs", "phase")


def encode_values(values, encoder: str, params: EncodingParams, tw: int | None = None,
                  seed: int = DEFAULT_SEED) -> np.ndarray:
    """Encode a flat sequence of values; returns a ``(len(values), tw)`` 0/1 array.

    The rate encoder threads one LFSR through the values in order.
    """
    values = np.asarray(values, dtype=np.int64).ravel()
    if encoder not in ENCODERS:
        raise ValueError(f"unknown encoder {encoder!r}; choose from {', '.join(ENCODERS)}")
    tw = params.tw if tw is None else int(tw)
    if values.size and (values.min() < 0 or values.max() > params.max_value):
        raise ValueError(f"values outside [0, {params.max_value}]")
    if encoder in ("etg", "etg+sb"):
        if tw != params.tw:
            raise ValueError(f"eigen-train encoding fixes tw = 2**m = {params.tw}")
        return train_table(params, boost=encoder == "etg+sb")[values].copy()
    out = np.zeros((values.size, tw), dtype=np.uint8)
    if encoder == "rate":
        lfsr = LfsrState(seed)
        for i, v in enumerate(values):
            train, lfsr = encode_rate(int(v), tw, lfsr, params)
            out[i] = train.bits
    elif encoder == "ttfs":
        for i, v in enumerate(values):
            out[i] = encode_ttfs(int(v), tw, params).bits
    else:
        for i, v in enumerate(values):
            out[i] = encode_phase(int(v), tw, params).bits
    return out
