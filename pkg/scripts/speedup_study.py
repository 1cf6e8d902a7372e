"""Cycle speedup and weight-fetch reuse on a calibrated Cin=16, 3x3 conv layer.

Prints one block per ablation: PE array size, TS-MLE/SLCS on or off, and the
delayed-thresholding interval. Results also land in a JSON file.
"""

import argparse
import json
from dataclasses import asdict, replace

from spikecodec.codec import EncodingParams
from spikecodec.metrics import spike_ratio
from spikecodec.simulator import ArchConfig, simulate_baseline_layer, simulate_layer
from spikecodec.synthetic import DEFAULT_SIGMA, gen_synthetic, synthetic_layer


def measure(x, layer, arch, params):
    _, c = simulate_layer(x, layer, arch, params)
    _, b = simulate_baseline_layer(x, layer, arch, params)
    return {
        "arch": asdict(arch),
        "pe_cycles": c.pe_cycles,
        "baseline_pe_cycles": b.pe_cycles,
        "speedup": b.pe_cycles / c.pe_cycles if c.pe_cycles else None,
        "total_speedup": b.total_cycles / c.total_cycles if c.total_cycles else None,
        "fetch_ratio": b.weight_fetches / c.weight_fetches if c.weight_fetches else None,
        "spike_ratio": spike_ratio(c.input_spikes, c.values_encoded, params.tw),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bits", type=int, default=4)
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="speedup_study.json")
    args = ap.parse_args()

    params = EncodingParams(args.bits)
    layer = synthetic_layer(params, args.seed, cin=16, size=args.size, cout=16, k=3, sigma=args.sigma)
    x = gen_synthetic(layer.in_shape, params, args.seed + 1, sigma=args.sigma)
    base = ArchConfig(sgs_tau=0.0)
    rows = []

    print("PE array        speedup  total")
    for n in (1, 2, 4, 8):
        r = measure(x, layer, replace(base, pe_rows=n, pe_cols=n), params)
        rows.append(r)
        print(f"  {n}x{n:<10} {r['speedup']:8.2f} {r['total_speedup']:6.2f}")

    print("TS-MLE / SLCS   speedup")
    for tsmle, slcs in ((False, False), (True, False), (True, True)):
        r = measure(x, layer, replace(base, tsmle_enabled=tsmle, slcs_enabled=slcs), params)
        rows.append(r)
        print(f"  {str(tsmle):5} {str(slcs):5}    {r['speedup']:8.2f}")

    print("dt_delay        fetch ratio")
    d = 1
    while d <= params.tw:
        r = measure(x, layer, replace(base, dt_delay=d), params)
        rows.append(r)
        print(f"  {d:<13} {r['fetch_ratio']:8.2f}")
        d *= 2

    print(f"input ETG spike ratio {100 * rows[0]['spike_ratio']:.2f}%")
    with open(args.out, "w") as fh:
        json.dump({"bits": args.bits, "sigma": args.sigma, "seed": args.seed, "rows": rows}, fh, indent=2,
                  sort_keys=True)


if __name__ == "__main__":
    main()
