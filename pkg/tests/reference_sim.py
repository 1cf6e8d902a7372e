"""Slow scalar model of the simulated core, built from the per-element ops.

Receptive fields are walked with explicit loops, so this also cross-checks the
vectorised gather geometry.
"""

import math

import numpy as np

from spikecodec.codec import SpikeTrain, sparsity_boost, superpose
from spikecodec.pipeline import (
    MembraneState,
    dt_accumulate,
    dt_threshold,
    slcs_step_cost,
    tsmle_compress,
)
from spikecodec.simulator import SimCounters


def receptive_field(layer, co, y, x, inputs):
    """List of (value or None for padding, weight) in (ci, ky, kx) order."""
    cin, h, w = layer.in_shape
    items = []
    if layer.kind == "fc":
        flat = inputs.reshape(-1)
        for i in range(flat.size):
            items.append((int(flat[i]), int(layer.weights[co, i, 0, 0])))
        return items
    ky, kx = layer.kernel
    for ci in range(cin):
        for dy in range(ky):
            for dx in range(kx):
                iy = y * layer.stride - layer.padding + dy
                ix = x * layer.stride - layer.padding + dx
                inside = 0 <= iy < h and 0 <= ix < w
                v = int(inputs[ci, iy, ix]) if inside else None
                items.append((v, int(layer.weights[co, ci, dy, dx])))
    return items


def reference_simulate(inputs, layer, arch, params):
    inputs = np.asarray(inputs).reshape(layer.in_shape)
    tw = params.tw
    delay = arch.dt_delay if arch.dt_delay is not None else layer.delay(tw)
    theta_dt = layer.threshold_for(delay)
    tau = arch.sgs_tau if arch.sgs_tau is not None else layer.sgs_tau
    if arch.tsmle_enabled:
        w, levels = math.gcd(arch.tsmle_window, delay), arch.levels
    else:
        w, levels = 1, 2
    cout, ho, wo = layer.out_shape
    neurons = [(co, y, x) for co in range(cout) for y in range(ho) for x in range(wo)]
    out = np.zeros(len(neurons), dtype=np.int64)
    c = SimCounters()
    slot_windows = {}  # neuron -> per synapse list of per-window slot tuples
    active = []
    for n, (co, y, x) in enumerate(neurons):
        rf = receptive_field(layer, co, y, x, inputs)
        mean = sum(v or 0 for v, _ in rf) / len(rf)
        if tau > 0 and mean < tau:
            active.append(False)
            c.skipped_neurons += 1
            continue
        active.append(True)
        trains = []
        for v, _ in rf:
            if v is None:
                trains.append(np.zeros(tw, dtype=np.uint8))
                continue
            c.values_encoded += 1
            src = sparsity_boost(v, params) if arch.sb_enabled else v
            trains.append(superpose(src, params).bits)
        state = MembraneState()
        for k in range(tw // delay):
            contribution = 0
            for (_, weight), bits in zip(rf, trains):
                contribution += weight * int(bits[k * delay:(k + 1) * delay].sum())
            state = dt_accumulate(state, contribution)
            _, state = dt_threshold(state, theta_dt)
            c.threshold_ops += 1
            c.weight_fetches += len(rf)
        out[n] = min(state.fired_total, params.max_value)
        per_syn = []
        for bits in trains:
            mlt = tsmle_compress(SpikeTrain(bits), w, levels)
            per_syn.append(mlt.windows())
            c.accumulate_ops += mlt.total
            c.input_spikes += int(bits.sum())
        slot_windows[n] = per_syn

    n_pe = arch.pe_rows * arch.pe_cols
    s_count = layer.synapses
    n_win = tw // w
    for g in range(0, len(neurons), n_pe):
        members = [n for n in range(g, min(g + n_pe, len(neurons))) if active[n]]
        if not members:
            continue
        for s in range(s_count):
            for j in range(n_win):
                slots = [slot_windows[n][s][j] for n in members]
                steps = max(1, max(len(t) for t in slots))
                for r in range(steps):
                    delivered = [t[r] if r < len(t) else 0 for t in slots]
                    c.pe_cycles += slcs_step_cost(delivered) if arch.slcs_enabled else levels - 1
    c.encoder_cycles = c.values_encoded * -(-tw // arch.encoder_steps_per_cycle)
    c.output_spikes = int(out.sum())
    c.total_cycles = c.encoder_cycles + c.pe_cycles
    return out.reshape(layer.out_shape), c
