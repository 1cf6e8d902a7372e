"""Counter-level model of the spike-encoding SNN core.

Dataflow per layer: skipping map -> input memory read -> sparsity boost ->
superposition -> TS-MLE -> PE array (SLCS slot costs, delayed-threshold
weight reuse) -> thresholding by division -> output spike counts.

Timing is derived from the loop structure rather than signal-level
simulation. Output neurons are tiled onto the PE array in index order; the
PEs of one group step through synapses and time in lockstep, so a slot-step
costs the largest level any PE in the group received.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from spikecodec.codec import EncodingParams, train_table
from spikecodec.layers import LayerSpec
from spikecodec.pipeline import DEFAULT_LEVELS, DEFAULT_WINDOW, effective_window
from spikecodec.sgs import build_skipping_map


@dataclass(frozen=True)
class ArchConfig:
    pe_rows: int = 4
    pe_cols: int = 4
    encoder_steps_per_cycle: int = 8
    tsmle_enabled: bool = True
    tsmle_window: int = DEFAULT_WINDOW
    levels: int = DEFAULT_LEVELS
    slcs_enabled: bool = True
    sb_enabled: bool = False
    # None defers to the per-layer value
    dt_delay: int | None = None
    sgs_tau: float | None = None

    def __post_init__(self):
        if self.pe_rows < 1 or self.pe_cols < 1:
            raise ValueError("PE array needs at least one PE")
        if self.encoder_steps_per_cycle < 1:
            raise ValueError("encoder_steps_per_cycle must be >= 1")
        if self.tsmle_window < 1 or self.levels < 2:
            raise ValueError("TS-MLE needs window >= 1 and levels >= 2")
        if self.dt_delay is not None and self.dt_delay < 1:
            raise ValueError("dt_delay must be >= 1")
        if self.sgs_tau is not None and self.sgs_tau < 0:
            raise ValueError("sgs_tau must be non-negative")

    @property
    def n_pe(self) -> int:
        return self.pe_rows * self.pe_cols

    def features_off(self, tw: int | None = None) -> ArchConfig:
        """Same array with SB, SGS, TS-MLE and SLCS disabled (full-window DT if ``tw``)."""
        return replace(self, tsmle_enabled=False, slcs_enabled=False, sb_enabled=False,
                       sgs_tau=0.0, dt_delay=tw if tw is not None else self.dt_delay)


@dataclass
class SimCounters:
    total_cycles: int = 0
    encoder_cycles: int = 0
    pe_cycles: int = 0
    weight_fetches: int = 0
    input_spikes: int = 0
    output_spikes: int = 0
    skipped_neurons: int = 0
    accumulate_ops: int = 0
    values_encoded: int = 0
    threshold_ops: int = 0

    def __add__(self, other: SimCounters) -> SimCounters:
        return SimCounters(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def as_dict(self) -> dict[str, int]:
        return {k: int(v) for k, v in asdict(self).items()}


def encoder_cycle_count(values: int, params: EncodingParams, arch: ArchConfig | int) -> int:
    steps = arch.encoder_steps_per_cycle if isinstance(arch, ArchConfig) else int(arch)
    if steps < 1:
        raise ValueError("encoder_steps_per_cycle must be >= 1")
    return int(values) * -(-params.tw // steps)


def _check_inputs(inputs, layer: LayerSpec, params: EncodingParams) -> np.ndarray:
    x = np.asarray(inputs)
    if x.size != layer.in_size or (x.ndim == 3 and x.shape != layer.in_shape):
        raise ValueError(f"input shape {x.shape} does not match layer input {layer.in_shape}")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.equal(np.mod(x, 1), 0)):
            raise ValueError("inputs must be integer counts")
    x = x.astype(np.int64).reshape(-1)
    if x.size and (x.min() < 0 or x.max() > params.max_value):
        raise ValueError(f"inputs must lie in [0, {params.max_value}]")
    return x


def _resolve_delay(layer: LayerSpec, arch: ArchConfig, tw: int) -> int:
    d = arch.dt_delay if arch.dt_delay is not None else layer.delay(tw)
    if not 1 <= d <= tw or tw % d:
        raise ValueError(f"dt_delay {d} must divide the time window {tw}")
    return int(d)


def _rf_trains(x: np.ndarray, layer: LayerSpec, params: EncodingParams, boost: bool):
    padded = np.concatenate([x, [0]])
    rf = layer.receptive_fields()
    valid = rf < layer.in_size
    trains = train_table(params, boost)[padded[rf]]  # (N, S, tw)
    return trains, valid


def _fire(contrib: np.ndarray, theta: int) -> np.ndarray:
    """Per-window accumulation then division-thresholding with residual carry."""
    v = np.zeros(contrib.shape[0], dtype=np.int64)
    total = np.zeros_like(v)
    for k in range(contrib.shape[1]):
        v += contrib[:, k]
        fires = np.where(v >= theta, v // theta, 0)
        v -= fires * theta
        total += fires
    return total


def _slot_levels(trains: np.ndarray, window: int, levels: int) -> np.ndarray:
    """``(N, S, J, R)`` greedy multi-level slots per compression window."""
    n, s, tw = trains.shape
    counts = trains.reshape(n, s, tw // window, window).sum(axis=-1, dtype=np.int32)
    top = levels - 1
    r = np.arange(-(-window // top), dtype=np.int32)
    return np.clip(counts[..., None] - top * r, 0, top)


def _pe_cycles(levels: np.ndarray, active: np.ndarray, n_pe: int, top: int, slcs: bool) -> int:
    n = levels.shape[0]
    groups = -(-n // n_pe)
    pad = groups * n_pe - n
    if pad:
        levels = np.concatenate([levels, np.zeros((pad,) + levels.shape[1:], dtype=levels.dtype)])
        active = np.concatenate([active, np.zeros(pad, dtype=bool)])
    levels = levels.reshape((groups, n_pe) + levels.shape[1:])  # (G, P, S, J, R)
    busy = active.reshape(groups, n_pe).any(axis=1)
    levels = levels[busy]
    if not levels.size:
        return 0
    per_step = levels.max(axis=1)  # (G', S, J, R): what the group receives per slot-step
    if slcs:
        return int(per_step.sum())
    # a compressed window always occupies at least one slot-step
    steps = np.maximum((per_step > 0).sum(axis=-1), 1)
    return int(steps.sum()) * top


def simulate_layer(inputs, layer: LayerSpec, arch: ArchConfig, params: EncodingParams):
    """Run one layer through the proposed dataflow.

    Returns ``(outputs, counters)``; outputs have ``layer.out_shape`` and are
    clamped to ``[0, 2**m - 1]`` so the next layer can re-encode them.
    """
    x = _check_inputs(inputs, layer, params)
    tw = params.tw
    delay = _resolve_delay(layer, arch, tw)
    theta_dt = layer.threshold_for(delay)
    tau = arch.sgs_tau if arch.sgs_tau is not None else layer.sgs_tau
    n, s = layer.n_out, layer.synapses

    if tau > 0:
        active = build_skipping_map(x, layer, tau).flags == 0
    else:
        active = np.ones(n, dtype=bool)

    trains, valid = _rf_trains(x, layer, params, arch.sb_enabled)
    trains[~active] = 0

    if arch.tsmle_enabled:
        window, lv = effective_window(arch.tsmle_window, delay), arch.levels
    else:
        window, lv = 1, 2
    levels = _slot_levels(trains, window, lv)

    windows = tw // delay
    win_counts = trains.reshape(n, s, windows, delay).sum(axis=-1, dtype=np.int64)
    contrib = np.einsum("nsk,ns->nk", win_counts, layer.neuron_weights())
    fired = np.where(active, _fire(contrib, theta_dt), 0)
    out = np.clip(fired, 0, params.max_value)

    n_active = int(active.sum())
    values = int((valid & active[:, None]).sum())
    c = SimCounters()
    c.skipped_neurons = n - n_active
    c.values_encoded = values
    c.encoder_cycles = encoder_cycle_count(values, params, arch)
    c.input_spikes = int(trains.sum(dtype=np.int64))
    c.accumulate_ops = int(levels.sum(dtype=np.int64))
    c.weight_fetches = n_active * windows * s
    c.threshold_ops = n_active * windows
    c.pe_cycles = _pe_cycles(levels, active, arch.n_pe, lv - 1, arch.slcs_enabled)
    c.output_spikes = int(out.sum())
    c.total_cycles = c.encoder_cycles + c.pe_cycles
    return out.reshape(layer.out_shape), c


def simulate_baseline_layer(inputs, layer: LayerSpec, arch: ArchConfig, params: EncodingParams):
    """Conventional time-serial pattern used as the cycle and traffic reference.

    Every (time step, synapse) pair costs one PE cycle whether or not a spike
    arrives, weights are refetched on every step, the membrane is compared
    against ``theta`` on every step, and the spike generator emits one time
    step per cycle. Source trains are the same lossless eigen-train encoding.
    """
    x = _check_inputs(inputs, layer, params)
    tw = params.tw
    n, s = layer.n_out, layer.synapses
    trains, valid = _rf_trains(x, layer, params, boost=False)
    contrib = np.einsum("nst,ns->nt", trains.astype(np.int64), layer.neuron_weights())
    out = np.clip(_fire(contrib, int(layer.theta)), 0, params.max_value)

    groups = -(-n // arch.n_pe)
    values = int(valid.sum())
    c = SimCounters()
    c.values_encoded = values
    c.encoder_cycles = values * tw
    c.input_spikes = c.accumulate_ops = int(trains.sum(dtype=np.int64))
    c.weight_fetches = n * tw * s
    c.threshold_ops = n * tw
    c.pe_cycles = groups * tw * s
    c.output_spikes = int(out.sum())
    c.total_cycles = c.encoder_cycles + c.pe_cycles
    return out.reshape(layer.out_shape), c


def reference_encoder_cycles(values: int, params: EncodingParams) -> int:
    """One-time-step-per-cycle generator used for throughput comparison."""
    return int(values) * params.tw
