"""Command line driver: encode, compare, run, sweep, gen.

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from spikecodec.codec import DEFAULT_SEED, ENCODERS, EncodingParams, encode_values
from spikecodec.manifest import ManifestError, load_network, load_tensor, save_network, save_tensor
from spikecodec.metrics import fom, spike_ratio
from spikecodec.network import NetworkSpec, oracle_forward, run_network
from spikecodec.simulator import ArchConfig
from spikecodec.synthetic import DEFAULT_SIGMA, gen_synthetic, random_network, synthetic_layer

log = logging.getLogger("spikecodec")

EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def format_table(rows: list[dict], columns: list[str]) -> str:
    cells = [[_fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines += ["  ".join(x.rjust(w) for x, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def format_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def format_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args) -> EncodingParams:
    params = EncodingParams(args.bits)
    if getattr(args, "tw", None) not in (None, params.tw) and args.encoder in ("etg", "etg+sb"):
        raise UsageError(f"eigen-train encoding fixes tw = 2**bits = {params.tw}")
    return params


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _source_values(args, params: EncodingParams) -> tuple[np.ndarray, dict]:
    """Values to encode from --values, --input or a seeded synthetic draw."""
    if args.values is not None:
        return np.array(_int_list(args.values), dtype=np.int64), {"source": "values"}
    if args.input is not None:
        x = load_tensor(args.input)
        return x.astype(np.int64).ravel(), {"source": str(args.input)}
    x = gen_synthetic((args.synthetic,), params, seed=args.seed, sigma=args.sigma)
    return x.astype(np.int64), {"source": "synthetic", "samples": args.synthetic, "sigma": args.sigma}


# ---------------------------------------------------------------------------
# encode / compare


def cmd_encode(args) -> int:
    params = _params(args)
    values, src = _source_values(args, params)
    tw = args.tw or params.tw
    trains = encode_values(values, args.encoder, params, tw=tw, seed=args.lfsr_seed)
    spikes = int(trains.sum())
    ratio = spike_ratio(spikes, values.size, tw)
    summary = {"encoder": args.encoder, "bits": params.m, "tw": tw, "values": int(values.size),
               "spikes": spikes, "spike_ratio": ratio, "seed": args.seed, "lfsr_seed": args.lfsr_seed, **src}
    if args.accuracy is not None:
        summary["accuracy"] = args.accuracy
        summary["fom"] = round(fom(args.accuracy, ratio), 1)
    rows = [{"value": int(v), "spikes": int(t.sum()), "train": "".join(map(str, t))} for v, t in zip(values, trains)]
    if args.format == "json":
        text = format_json({**summary, "trains": rows})
    elif args.format == "csv":
        text = format_csv(rows, ["value", "spikes", "train"])
    else:
        text = format_table(rows, ["value", "spikes", "train"])
    _emit(text, args.out)
    line = f"encoder={args.encoder} values={values.size} spikes={spikes} spike_ratio={100 * ratio:.2f}%"
    if "fom" in summary:
        line += f" accuracy={args.accuracy:.1f} fom={summary['fom']:.1f}"
    # keep stdout clean when the dump itself goes there
    (sys.stdout if args.out else sys.stderr).write(line + "\n")
    return 0


def _keyed_floats(text: str | None, encoders: list[str], flag: str) -> dict[str, float]:
    if text is None:
        return {}
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            k, v = part.split("=", 1)
            if k not in ENCODERS:
                raise UsageError(f"{flag}: unknown encoder {k!r}")
            keys = [k]
        else:
            keys, v = encoders, part
        try:
            for k in keys:
                out[k] = float(v)
        except ValueError as exc:
            raise UsageError(f"{flag}: bad number {v!r}") from exc
    return out


COMPARE_COLUMNS = ["encoder", "spike_ratio_pct", "max_spikes_per_value", "accuracy", "fom", "ratio_source"]


def cmd_compare(args) -> int:
    """Spike ratio and FOM per encoder on one value set."""
    encoders = [e.strip() for e in args.encoder.split(",") if e.strip()]
    for e in encoders:
        if e not in ENCODERS:
            raise UsageError(f"unknown encoder {e!r}; choose from {', '.join(ENCODERS)}")
    params = EncodingParams(args.bits)
    accuracy = _keyed_floats(args.accuracy, encoders, "--accuracy")
    given_ratio = _keyed_floats(args.spike_ratio, encoders, "--spike-ratio")
    values, src = _source_values(args, params)
    rows = []
    for enc in encoders:
        tw = params.tw if enc.startswith("etg") or args.tw is None else args.tw
        trains = encode_values(values, enc, params, tw=tw, seed=args.lfsr_seed)
        per_value = trains.sum(axis=1)
        if enc in given_ratio:
            ratio, source = given_ratio[enc] / 100.0, "given"
        else:
            ratio, source = spike_ratio(int(per_value.sum()), values.size, tw), "measured"
        acc = accuracy.get(enc)
        rows.append({
            "encoder": enc,
            "spike_ratio_pct": round(100 * ratio, 4),
            "max_spikes_per_value": int(per_value.max()) if per_value.size else 0,
            "accuracy": acc,
            "fom": None if acc is None else round(fom(acc, ratio), 1),
            "ratio_source": source,
        })
    if args.format == "json":
        text = format_json({"bits": params.m, "seed": args.seed, "lfsr_seed": args.lfsr_seed, **src, "rows": rows})
    elif args.format == "csv":
        text = format_csv(rows, COMPARE_COLUMNS)
    else:
        text = format_table(rows, COMPARE_COLUMNS)
    _emit(text, args.out)
    if args.out:
        sys.stdout.write(format_table(rows, COMPARE_COLUMNS))
    return 0


# ---------------------------------------------------------------------------
# run


def _arch_overrides(arch: ArchConfig, args) -> ArchConfig:
    changes = {}
    for flag, field_name in (("sb", "sb_enabled"), ("slcs", "slcs_enabled"), ("tsmle", "tsmle_enabled"),
                             ("dt_delay", "dt_delay"), ("sgs_threshold", "sgs_tau"),
                             ("tsmle_window", "tsmle_window"), ("levels", "levels")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[field_name] = value
    return replace(arch, **changes)


def _exact_regime(net: NetworkSpec, arch: ArchConfig) -> bool:
    tw = net.encoding.tw
    for layer in net.layers:
        tau = arch.sgs_tau if arch.sgs_tau is not None else layer.sgs_tau
        delay = arch.dt_delay if arch.dt_delay is not None else layer.delay(tw)
        if tau > 0 or delay != tw:
            return False
    return not arch.sb_enabled


def run_report(net: NetworkSpec, image, arch: ArchConfig, accuracy: float | None = None) -> dict:
    out, report = run_network(image, net, arch)
    ref = oracle_forward(image, net)
    _, off = run_network(image, net, arch.features_off(net.encoding.tw))
    dev = np.abs(out.astype(np.int64) - ref.astype(np.int64))
    agreement = float((dev == 0).mean()) if dev.size else 1.0
    if accuracy is None:
        report.accuracy, report.accuracy_label = 100.0 * agreement, "oracle_agreement_pct"
    else:
        report.accuracy = accuracy
    c, o = report.counters, off.counters
    traffic = c.weight_fetches + c.values_encoded
    traffic_off = o.weight_fetches + o.values_encoded
    report.extra.update({
        "outputs": out.reshape(-1).tolist(),
        "oracle_outputs": ref.reshape(-1).tolist(),
        "agreement": {"exact": bool(dev.max(initial=0) == 0), "max_deviation": int(dev.max(initial=0)),
                      "rate": agreement, "exact_regime": _exact_regime(net, arch)},
        "computation_ratio": c.accumulate_ops / o.accumulate_ops if o.accumulate_ops else None,
        "traffic_ratio": traffic / traffic_off if traffic_off else None,
        "feature_off_counters": o.as_dict(),
    })
    return report.to_dict()


def _self_check(data: dict) -> list[str]:
    problems = []
    if data["agreement"]["exact_regime"] and not data["agreement"]["exact"]:
        problems.append(f"outputs differ from the integer reference (max deviation {data['agreement']['max_deviation']})")
    if not 0.0 <= data["spike_ratio"] <= 1.0:
        problems.append(f"spike ratio {data['spike_ratio']} outside [0, 1]")
    arch = data["config"]["arch"]
    if arch["tsmle_enabled"] and arch["slcs_enabled"] and data["speedup"] is not None and data["speedup"] < 1:
        problems.append(f"TS-MLE+SLCS slower than the time-serial baseline (speedup {data['speedup']:.3f})")
    return problems


RUN_SUMMARY = ["spike_ratio", "speedup", "total_speedup", "fetch_ratio", "computation_ratio", "traffic_ratio",
               "accuracy", "fom"]


def cmd_run(args) -> int:
    net = load_network(args.network)
    image = load_tensor(args.input)
    arch = _arch_overrides(net.arch, args)
    data = run_report(net, image, arch, args.accuracy)
    data["config"]["network"] = str(args.network)
    data["config"]["input"] = str(args.input)
    if args.format == "json":
        text = format_json(data)
    else:
        row = {k: data[k] for k in RUN_SUMMARY}
        row.update({"exact": data["agreement"]["exact"], "max_dev": data["agreement"]["max_deviation"]})
        cols = RUN_SUMMARY + ["exact", "max_dev"]
        text = format_csv([row], cols) if args.format == "csv" else format_table([row], cols)
    _emit(text, args.out)
    problems = _self_check(data)
    for p in problems:
        log.error("invariant violation: %s", p)
    return EXIT_INVARIANT if problems else 0


# ---------------------------------------------------------------------------
# sweep

PARAM_COLUMNS = ["encoder", "bits", "sigma", "dt_delay", "sb", "sgs_tau", "tsmle", "tsmle_window", "levels",
                 "slcs", "pe_rows", "pe_cols"]
COUNTER_COLUMNS = ["total_cycles", "encoder_cycles", "pe_cycles", "weight_fetches", "input_spikes",
                   "output_spikes", "skipped_neurons", "accumulate_ops", "values_encoded", "threshold_ops"]
METRIC_COLUMNS = ["encoded_spike_ratio", "max_spikes_per_value", "spike_ratio", "speedup", "total_speedup",
                  "fetch_ratio"] + COUNTER_COLUMNS + ["baseline_pe_cycles", "baseline_weight_fetches", "seed"]
SWEEP_COLUMNS = PARAM_COLUMNS + METRIC_COLUMNS

_BOOL_KEYS = {"sb", "tsmle", "slcs"}
_INT_KEYS = {"bits", "dt_delay", "tsmle_window", "levels", "pe_rows", "pe_cols"}
_FLOAT_KEYS = {"sigma", "sgs_tau"}


def _parse_bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "on", "yes"):
        return True
    if v in ("0", "false", "off", "no"):
        return False
    raise UsageError(f"expected a boolean, got {v!r}")


def parse_grid(specs: list[str]) -> dict[str, list]:
    if not specs:
        raise UsageError("sweep needs at least one --grid key=v1,v2,...")
    grid: dict[str, list] = {}
    for spec in specs:
        if "=" not in spec:
            raise UsageError(f"bad grid entry {spec!r}; expected key=v1,v2,...")
        key, raw = spec.split("=", 1)
        key = key.strip().replace("-", "_")
        items = [v.strip() for v in raw.split(",") if v.strip()]
        if not items:
            raise UsageError(f"grid key {key!r} has no values")
        try:
            if key == "encoder":
                bad = [v for v in items if v not in ENCODERS]
                if bad:
                    raise UsageError(f"unknown encoder(s) {bad}")
                vals = items
            elif key in _BOOL_KEYS:
                vals = [_parse_bool(v) for v in items]
            elif key in _INT_KEYS:
                vals = [int(v) for v in items]
            elif key in _FLOAT_KEYS:
                vals = [float(v) for v in items]
            else:
                raise UsageError(f"unknown grid key {key!r}")
        except ValueError as exc:
            raise UsageError(f"grid key {key!r}: {exc}") from exc
        grid[key] = vals
    return grid


def _sweep_point(task) -> dict:
    point, base, net_path, input_path = task
    p = {**base, **point}
    params = EncodingParams(p["bits"])
    sb = p["sb"] or p["encoder"] == "etg+sb"
    row = {k: p[k] for k in PARAM_COLUMNS}
    row["sb"] = sb
    row["seed"] = p["seed"]
    if net_path:
        net = load_network(net_path)
        params = net.encoding
        row["bits"] = params.m
        image = load_tensor(input_path) if input_path else gen_synthetic(net.in_shape, params, p["seed"], p["sigma"])
    else:
        layer = synthetic_layer(params, p["seed"], sigma=p["sigma"])
        net = NetworkSpec([layer], params, ArchConfig(), seed=p["seed"])
        image = gen_synthetic(layer.in_shape, params, p["seed"] + 100, p["sigma"])
    trains = encode_values(image.ravel(), p["encoder"], params, seed=DEFAULT_SEED)
    per_value = trains.sum(axis=1)
    row["encoded_spike_ratio"] = spike_ratio(int(per_value.sum()), image.size, trains.shape[1])
    row["max_spikes_per_value"] = int(per_value.max()) if per_value.size else 0
    if p["encoder"] not in ("etg", "etg+sb"):
        # the simulated core only consumes eigen-train encodings
        return row
    arch = ArchConfig(pe_rows=p["pe_rows"], pe_cols=p["pe_cols"], tsmle_enabled=p["tsmle"],
                      tsmle_window=p["tsmle_window"], levels=p["levels"], slcs_enabled=p["slcs"], sb_enabled=sb,
                      dt_delay=p["dt_delay"], sgs_tau=p["sgs_tau"])
    _, report = run_network(image, net, arch)
    d = report.to_dict()
    row.update({k: d[k] for k in ("spike_ratio", "speedup", "total_speedup", "fetch_ratio")})
    row.update(d["counters"])
    row["baseline_pe_cycles"] = d["baseline_counters"]["pe_cycles"]
    row["baseline_weight_fetches"] = d["baseline_counters"]["weight_fetches"]
    return row


def sweep_rows(grid: dict[str, list], base: dict, net_path=None, input_path=None, workers: int = 1) -> list[dict]:
    keys = list(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    tasks = [(pt, base, net_path, input_path) for pt in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]


def cmd_sweep(args) -> int:
    grid = parse_grid(args.grid)
    base = {"encoder": "etg", "bits": args.bits, "sigma": args.sigma, "dt_delay": args.dt_delay,
            "sb": bool(args.sb), "sgs_tau": args.sgs_threshold or 0.0,
            "tsmle": True if args.tsmle is None else args.tsmle, "tsmle_window": args.tsmle_window or 8,
            "levels": args.levels or 4, "slcs": True if args.slcs is None else args.slcs,
            "pe_rows": args.pe_rows, "pe_cols": args.pe_cols, "seed": args.seed}
    if base["dt_delay"] is None:
        base["dt_delay"] = EncodingParams(args.bits).tw
    if args.input and not args.network:
        raise UsageError("--input needs --network for sweeps")
    rows = sweep_rows(grid, base, args.network, args.input, args.workers)
    if args.format == "json":
        text = format_json({"grid": grid, "base": base, "rows": rows})
    elif args.format == "table":
        text = format_table(rows, SWEEP_COLUMNS)
    else:
        text = format_csv(rows, SWEEP_COLUMNS)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# gen


def _shape(text: str) -> tuple[int, ...]:
    shape = tuple(_int_list(text))
    if not shape or any(s < 1 for s in shape):
        raise UsageError(f"bad shape {text!r}")
    return shape


def cmd_gen(args) -> int:
    if not args.out:
        raise UsageError("gen needs --out")
    params = EncodingParams(args.bits)
    if args.kind == "network":
        net = random_network(args.seed, params, n_layers=args.layers, max_dim=args.max_dim)
        save_network(net, args.out)
        print(f"wrote {len(net.layers)}-layer network (input {net.in_shape}) to {args.out}")
        return 0
    if args.like:
        net = load_network(args.like)
        params, shape = net.encoding, net.in_shape
    else:
        shape = _shape(args.shape)
    x = gen_synthetic(shape, params, seed=args.seed, sigma=args.sigma)
    save_tensor(x, args.out)
    print(f"wrote tensor {x.shape} mean={x.mean():.4f} etg_spike_ratio={100 * x.mean() / params.tw:.2f}% to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--bits", type=int, default=4, choices=(2, 4, 6, 8), help="bit width m (tw = 2**m)")
    p.add_argument("--tw", type=int, default=None, help="time window for baseline encoders")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")


def _add_source(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--values", help="comma-separated values")
    src.add_argument("--input", help="u8 tensor container")
    src.add_argument("--synthetic", type=int, default=1024, help="number of half-normal samples")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--lfsr-seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)


def _add_features(p):
    p.add_argument("--sb", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--sgs-threshold", type=float, default=None)
    p.add_argument("--dt-delay", type=int, default=None)
    p.add_argument("--tsmle", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--tsmle-window", type=int, default=None)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--slcs", action=argparse.BooleanOptionalAction, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spikecodec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode values into spike trains")
    _add_common(p)
    _add_source(p)
    p.add_argument("--encoder", choices=ENCODERS, default="etg")
    p.add_argument("--accuracy", type=float, default=None, help="external accuracy (%%) for the FOM")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compare", help="spike ratio / FOM table across encoders")
    _add_common(p)
    _add_source(p)
    p.add_argument("--encoder", default=",".join(ENCODERS), help="comma-separated encoders")
    p.add_argument("--accuracy", default=None, help="ACC or enc=ACC,... (percent)")
    p.add_argument("--spike-ratio", default=None, help="R or enc=R,... (percent) overriding measurement")
    p.set_defaults(func=cmd_compare, format="table")

    p = sub.add_parser("run", help="simulate a network manifest on an input tensor")
    p.add_argument("--network", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--accuracy", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")
    _add_features(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid sweep to CSV")
    p.add_argument("--grid", action="append", default=[], help="key=v1,v2,... (repeatable)")
    p.add_argument("--network", default=None)
    p.add_argument("--input", default=None)
    p.add_argument("--bits", type=int, default=4, choices=(2, 4, 6, 8))
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--pe-rows", type=int, default=4)
    p.add_argument("--pe-cols", type=int, default=4)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv", "table"), default="csv")
    _add_features(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="generate a synthetic tensor or random network")
    p.add_argument("--kind", choices=("tensor", "network"), default="tensor")
    p.add_argument("--shape", default="16,8,8")
    p.add_argument("--like", default=None, help="take tensor shape and bits from a network manifest")
    p.add_argument("--bits", type=int, default=4, choices=(2, 4, 6, 8))
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--max-dim", type=int, default=8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"spikecodec: error: {exc}\n")
        return EXIT_USAGE
    except (ManifestError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"spikecodec: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
