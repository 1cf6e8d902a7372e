"""Two-step spike encoding codec and counter-level SNN accelerator model."""

from spikecodec.codec import (
    EigenTrain,
    EncodingParams,
    LfsrState,
    SpikeTrain,
    eigen_train,
    encode_phase,
    encode_rate,
    encode_ttfs,
    sparsity_boost,
    spike_count,
    superpose,
)
from spikecodec.layers import LayerSpec
from spikecodec.metrics import SimReport, fom, save_report
from spikecodec.network import NetworkSpec, oracle_forward, run_network
from spikecodec.pipeline import (
    DtConfig,
    MembraneState,
    MultiLevelTrain,
    dt_accumulate,
    dt_threshold,
    slcs_step_cost,
    tsmle_compress,
    weight_fetch_count,
)
from spikecodec.sgs import SkippingMap, apply_skipping, build_skipping_map
from spikecodec.simulator import ArchConfig, SimCounters, encoder_cycle_count, simulate_baseline_layer, simulate_layer

__version__ = "0.1.0"
