"""Spike ratio and worst-case spikes per value for every encoder on half-normal data."""

import argparse

import numpy as np

from spikecodec.codec import ENCODERS, EncodingParams, encode_values
from spikecodec.metrics import fom, spike_ratio
from spikecodec.synthetic import DEFAULT_SIGMA, gen_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--accuracy", type=float, default=None, help="optional accuracy (%%) to turn ratios into FOM")
    args = ap.parse_args()

    print(f"{'bits':>4} {'encoder':>8} {'ratio %':>8} {'max/value':>9} {'fom':>6}")
    for m in args.bits:
        params = EncodingParams(m)
        x = gen_synthetic((args.samples,), params, seed=args.seed, sigma=args.sigma)
        for enc in ENCODERS:
            trains = encode_values(x, enc, params)
            r = spike_ratio(int(trains.sum()), x.size, trains.shape[1])
            f = f"{fom(args.accuracy, r):6.1f}" if args.accuracy is not None else "     -"
            print(f"{m:>4} {enc:>8} {100 * r:8.3f} {int(trains.sum(axis=1).max()):9d} {f}")


if __name__ == "__main__":
    main()
