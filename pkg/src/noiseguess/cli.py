"""Command-line front end.

Subcommands mirror the library surface: ``types`` (type census CSV),
``metric`` (evaluate a metric on a sequence), ``code info``, ``decode``,
``bounds`` (per-n bound table CSV) and ``sim run`` / ``sim plotdata``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import analysis, sim
from .channel import load_model, make_memoryless
from .codes import make_bch_63_51, make_modified_bch, word_from_hex, unpack_bits
from .decoders import (
    MatchedMetric,
    MaximisingMetric,
    WeightingMetric,
    decode_deterministic,
    decode_randomised,
    decode_training,
    query_cap,
)
from .ftypes import empirical_entropy, iter_types, type_class_size, count_stats
from .metrics import KTSequentialSampler, kt_log_prob, matched_log_metric, maximising_log_metric


def _parse_sequence(text: str) -> np.ndarray:
    return np.array([int(tok) for tok in text.split(",")], dtype=np.int64)


def _code_by_name(name: str):
    if name == "bch63-51":
        return make_bch_63_51()
    if name == "bch63-51-pruned":
        return make_modified_bch()
    raise SystemExit("unknown code %r" % name)


def _cmd_types(args) -> int:
    model = load_model(args.model)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["type_id", "counts_flat", "size", "H_bits"])
    for i, c in enumerate(iter_types(model.structure, args.n)):
        writer.writerow(
            [
                i,
                " ".join(str(v) for v in c.flat()),
                type_class_size(c, model.structure),
                format(empirical_entropy(c), ".12g"),
            ]
        )
    return 0


def _cmd_metric(args) -> int:
    model = load_model(args.model)
    z = _parse_sequence(args.z)
    c = count_stats(model.structure, z)
    if args.metric == "matched":
        value = matched_log_metric(model, c)
    elif args.metric == "max":
        value = maximising_log_metric(c)
    elif args.metric == "kt":
        value = kt_log_prob(c)
    else:
        raise SystemExit("unknown metric %r" % args.metric)
    json.dump({"log2_metric": value}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_code_info(args) -> int:
    code = _code_by_name(args.code)
    info = {
        "n": code.n,
        "k": code.k,
        "effective_rate": code.k / code.n,
        "d_min_bound": code.d_min_bound,
        "modifier": code.modifier,
    }
    json.dump(info, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_decode(args) -> int:
    code = _code_by_name(args.code)
    y_packed = word_from_hex(args.y, code.n)
    y = unpack_bits(y_packed, code.n)
    model = load_model(args.model)
    cap = args.cap if args.cap else query_cap(code.n, code.k / code.n, 2)
    family = model.structure
    if args.decoder == "dg-max":
        outcome = decode_deterministic(y, code, MaximisingMetric(family), cap)
    elif args.decoder == "dg-kt":
        outcome = decode_deterministic(y, code, WeightingMetric(family), cap)
    elif args.decoder == "dg-matched":
        outcome = decode_deterministic(y, code, MatchedMetric(model), cap)
    elif args.decoder == "rg-kt":
        rng = np.random.default_rng(args.seed)
        sampler = KTSequentialSampler(family, code.n)
        outcome = decode_randomised(y, code, sampler, args.list_size, cap, rng)
    elif args.decoder == "training":
        outcome = decode_training(y, code, cap)
    elif args.decoder == "memoryless":
        pi = analysis.stationary_symbol_law(model)
        outcome = decode_deterministic(y, code, MatchedMetric(make_memoryless(pi)), cap)
    else:
        raise SystemExit("unknown decoder %r" % args.decoder)
    json.dump(
        {
            "message": outcome.message,
            "queries": outcome.queries,
            "metric_of_winner": outcome.metric_of_winner,
            "abandoned": outcome.abandoned,
        },
        sys.stdout,
    )
    sys.stdout.write("\n")
    return 0


def _cmd_bounds(args) -> int:
    model = load_model(args.model)
    ns = [int(tok) for tok in args.n.split(",")]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(
        [
            "n",
            "rate",
            "H_half",
            "zeta",
            "epsilon",
            "sigma",
            "delta",
            "lambda1",
            "lambda2",
            "red_dg_max",
            "red_dg_wt",
            "red_rg_max",
            "red_rg_wt",
            "cx_dg_max",
            "cx_dg_wt",
            "cx_rg_max",
            "cx_rg_wt",
            "asymptote",
        ]
    )

    def fmt(x):
        return "" if x is None else format(x, ".12g")

    for n in ns:
        report = analysis.build_bound_report(model, n, args.rate)
        writer.writerow(
            [
                n,
                fmt(args.rate),
                fmt(report.h_half),
                fmt(report.zeta),
                fmt(report.epsilon),
                fmt(report.sigma),
                fmt(report.delta),
                fmt(report.lambda1),
                fmt(report.lambda2),
                fmt(report.redundancy.dg_max),
                fmt(report.redundancy.dg_wt),
                fmt(report.redundancy.rg_max),
                fmt(report.redundancy.rg_wt),
                fmt(report.complexity.dg_max),
                fmt(report.complexity.dg_wt),
                fmt(report.complexity.rg_max),
                fmt(report.complexity.rg_wt),
                fmt(report.asymptote),
            ]
        )
    return 0


def _cmd_sim_run(args) -> int:
    config = sim.SimConfig.from_json(args.config)
    try:
        points = sim.run_sweep(config)
    except sim.SimInvariantError as exc:
        print("invariant violation: %s" % exc, file=sys.stderr)
        return 2
    sim.write_csv(points, args.out)
    return 0


def _cmd_sim_plotdata(args) -> int:
    points = sim.read_csv(args.results)
    sim.write_plotdata_csv(points, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noiseguess",
        description="Noise-guessing decoders for finite-state additive channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_types = sub.add_parser("types", help="type census as CSV")
    p_types.add_argument("--model", required=True)
    p_types.add_argument("--n", type=int, required=True)
    p_types.set_defaults(func=_cmd_types)

    p_metric = sub.add_parser("metric", help="evaluate a metric on a sequence")
    p_metric.add_argument("--metric", choices=("matched", "max", "kt"), required=True)
    p_metric.add_argument("--model", required=True)
    p_metric.add_argument("--z", required=True, help="comma-separated symbols")
    p_metric.set_defaults(func=_cmd_metric)

    p_code = sub.add_parser("code", help="code utilities")
    code_sub = p_code.add_subparsers(dest="code_command", required=True)
    p_info = code_sub.add_parser("info", help="print code parameters")
    p_info.add_argument("--code", default="bch63-51-pruned")
    p_info.set_defaults(func=_cmd_code_info)

    p_decode = sub.add_parser("decode", help="decode one received word")
    p_decode.add_argument(
        "--decoder",
        choices=("dg-max", "dg-kt", "dg-matched", "rg-kt", "training", "memoryless"),
        required=True,
    )
    p_decode.add_argument("--model", required=True)
    p_decode.add_argument("--y", required=True, help="received word as hex")
    p_decode.add_argument("--code", default="bch63-51-pruned")
    p_decode.add_argument("--cap", type=int, default=None)
    p_decode.add_argument("--seed", type=int, default=0)
    p_decode.add_argument("--list-size", type=int, default=20)
    p_decode.set_defaults(func=_cmd_decode)

    p_bounds = sub.add_parser("bounds", help="bound table as CSV")
    p_bounds.add_argument("--model", required=True)
    p_bounds.add_argument("--n", required=True, help="comma-separated block lengths")
    p_bounds.add_argument("--rate", type=float, required=True)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_sim = sub.add_parser("sim", help="Monte-Carlo sweeps")
    sim_sub = p_sim.add_subparsers(dest="sim_command", required=True)
    p_run = sim_sub.add_parser("run", help="run a sweep from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=_cmd_sim_run)
    p_plot = sim_sub.add_parser("plotdata", help="reshape results for plotting")
    p_plot.add_argument("--results", required=True)
    p_plot.add_argument("--out", required=True)
    p_plot.set_defaults(func=_cmd_sim_plotdata)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
