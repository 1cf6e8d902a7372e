"""Spike ratio, figure of merit and the aggregated run report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from spikecodec.simulator import SimCounters


def spike_ratio(spikes: int, values: int, tw: int) -> float:
    """Total spikes over ``values * tw`` slots; 0 for an empty encoding."""
    slots = int(values) * int(tw)
    return spikes / slots if slots else 0.0


def fom(accuracy: float, ratio: float) -> float:
    """Accuracy (percent) divided by spike ratio (percent)."""
    if ratio <= 0:
        return float("inf") if accuracy > 0 else 0.0
    return accuracy / (100.0 * ratio)


def safe_ratio(num: float, den: float) -> float | None:
    return num / den if den else None


@dataclass
class SimReport:
    counters: SimCounters
    baseline: SimCounters
    tw: int
    accuracy: float | None = None
    accuracy_label: str = "accuracy"
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def spike_ratio(self) -> float:
        return spike_ratio(self.counters.input_spikes, self.counters.values_encoded, self.tw)

    @property
    def speedup(self) -> float | None:
        """PE-array cycle speedup over the conventional time-serial pattern."""
        return safe_ratio(self.baseline.pe_cycles, self.counters.pe_cycles)

    @property
    def total_speedup(self) -> float | None:
        return safe_ratio(self.baseline.total_cycles, self.counters.total_cycles)

    @property
    def fetch_ratio(self) -> float | None:
        return safe_ratio(self.baseline.weight_fetches, self.counters.weight_fetches)

    @property
    def fom(self) -> float | None:
        if self.accuracy is None:
            return None
        return fom(self.accuracy, self.spike_ratio)

    def to_dict(self) -> dict:
        return {
            "counters": self.counters.as_dict(),
            "baseline_counters": self.baseline.as_dict(),
            "tw": self.tw,
            "spike_ratio": self.spike_ratio,
            "speedup": self.speedup,
            "total_speedup": self.total_speedup,
            "fetch_ratio": self.fetch_ratio,
            "accuracy": self.accuracy,
            "accuracy_label": self.accuracy_label,
            "fom": self.fom,
            "config": self.config,
            "seeds": self.seeds,
            **self.extra,
        }


def save_report(report, path) -> None:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
