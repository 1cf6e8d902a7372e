"""Find the half-normal sigma that puts the ETG spike ratio in a target band.

    python3 scripts/calibrate_sigma.py --target 0.045 --bits 4 8
"""

import argparse

import numpy as np

from spikecodec.codec import EncodingParams
from spikecodec.synthetic import gen_synthetic


def ratio_at(sigma: float, params: EncodingParams, n: int, seed: int) -> float:
    x = gen_synthetic((n,), params, seed=seed, sigma=sigma)
    return x.sum() / (n * params.tw)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", type=float, default=0.045)
    ap.add_argument("--bits", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = np.round(np.arange(0.02, 0.15, 0.001), 4)
    for m in args.bits:
        params = EncodingParams(m)
        ratios = np.array([ratio_at(s, params, args.samples, args.seed) for s in grid])
        best = grid[np.argmin(np.abs(ratios - args.target))]
        print(f"m={m}: sigma={best:.3f} -> spike ratio {100 * ratio_at(best, params, args.samples, args.seed):.2f}%")
        for s in (0.05, 0.063, 0.08):
            print(f"    sigma={s:.3f}: {100 * ratio_at(s, params, args.samples, args.seed):.2f}%")


if __name__ == "__main__":
    main()
