"""Process encoding: delayed thresholding, TS-MLE compression and SLCS costs."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from spikecodec.codec import SpikeTrain

DEFAULT_WINDOW = 8
DEFAULT_LEVELS = 4


@dataclass(frozen=True)
class DtConfig:
    tw: int
    delay_d: int
    theta: int
    theta_dt: int | None = None

    def __post_init__(self):
        if not 1 <= self.delay_d <= self.tw or self.tw % self.delay_d:
            raise ValueError(f"delay {self.delay_d} must divide the window {self.tw}")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.theta_dt is None:
            object.__setattr__(self, "theta_dt", self.delay_d * self.theta)
        elif self.theta_dt <= 0:
            raise ValueError("theta_dt must be positive")

    @property
    def windows(self) -> int:
        return self.tw // self.delay_d


@dataclass(frozen=True)
class MultiLevelTrain:
    slots: tuple[int, ...]
    levels_l: int
    source_window_w: int
    # slot count emitted for each source window, in order
    per_window: tuple[int, ...] = ()

    @property
    def total(self) -> int:
        return sum(self.slots)

    def windows(self) -> list[tuple[int, ...]]:
        out, pos = [], 0
        for k in self.per_window:
            out.append(self.slots[pos:pos + k])
            pos += k
        return out


@dataclass(frozen=True)
class MembraneState:
    v: int = 0
    fired_total: int = 0


def split_levels(count: int, levels: int) -> tuple[int, ...]:
    """Greedy decomposition of a window spike count into levels ``<= L-1``."""
    top = levels - 1
    full, rest = divmod(int(count), top)
    return (top,) * full + ((rest,) if rest else ())


def tsmle_compress(train: SpikeTrain, w: int = DEFAULT_WINDOW, levels: int = DEFAULT_LEVELS) -> MultiLevelTrain:
    if w < 1:
        raise ValueError("TS-MLE window must be >= 1")
    if levels < 2:
        raise ValueError("TS-MLE needs at least 2 levels")
    if train.window % w:
        raise ValueError(f"train length {train.window} is not a multiple of window {w}")
    counts = train.bits.reshape(-1, w).sum(axis=1)
    slots: list[int] = []
    per_window = []
    for c in counts:
        parts = split_levels(int(c), levels)
        slots.extend(parts)
        per_window.append(len(parts))
    return MultiLevelTrain(tuple(slots), levels, w, tuple(per_window))


def slcs_step_cost(delivered) -> int:
    """Cycles for one slot-step: the largest level any PE received."""
    return max((int(x) for x in delivered), default=0)


def dt_accumulate(state: MembraneState, contribution: int) -> MembraneState:
    return replace(state, v=state.v + int(contribution))


def dt_threshold(state: MembraneState, cfg: DtConfig | int) -> tuple[int, MembraneState]:
    """Fire ``floor(v / theta_dt)`` spikes at once, reset by subtraction."""
    theta_dt = cfg.theta_dt if isinstance(cfg, DtConfig) else int(cfg)
    if theta_dt <= 0:
        raise ValueError("theta_dt must be positive")
    fires = state.v // theta_dt if state.v >= theta_dt else 0
    return fires, MembraneState(state.v - fires * theta_dt, state.fired_total + fires)


def weight_fetch_count(synapses: int, cfg: DtConfig, conventional: bool = False) -> int:
    """Weight words one output neuron reads over a full window.

    ``synapses`` is the receptive-field size Cin*Ky*Kx (a ``LayerSpec`` works
    too). The conventional pattern refetches every weight on every step.
    """
    if hasattr(synapses, "synapses"):
        synapses = synapses.synapses
    per_window = cfg.tw if conventional else cfg.windows
    return per_window * int(synapses)


def effective_window(w: int, delay_d: int) -> int:
    """TS-MLE window clipped so it never straddles a thresholding boundary."""
    return int(np.gcd(w, delay_d))
