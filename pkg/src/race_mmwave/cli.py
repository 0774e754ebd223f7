"""Command-line entry point: sweep, trial, codebook, calibrate-switch."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import engine
from .array_channel import AngleGrid, NoiseModel, sample_channel
from .codebook import StagePlan, build_codebook, export_beam_patterns
from .harness import ConfigError, emit_results, load_config, run_sweep
from .schemes import RaceConfig, calibrate_switch_table, run_fixed, run_race


def _k_vector(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k-vector {text!r}; expected e.g. 2,2,2") from None


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    table = run_sweep(cfg, workers=args.workers)
    emit_results(table, args.format, args.out)
    print(f"wrote {len(table)} rows to {args.out} (backend: {engine.BACKEND})", file=sys.stderr)
    return 0


def _trace_lines(outcome, channel) -> list[dict]:
    lines = [{"event": "channel", "tx_index": channel.tx_index, "rx_index": channel.rx_index,
              "alpha_re": channel.alpha.real, "alpha_im": channel.alpha.imag}]
    for st in outcome.trace:
        for j, slot in enumerate(st.log.slots):
            lines.append({"event": "slot", "stage": st.log.stage, "slot": j + 1,
                          "tx_k": slot.tx_k, "rx_k": slot.rx_k,
                          "re": slot.observation.real, "im": slot.observation.imag})
        for post, h, p in st.rounds:
            lines.append({"event": "posterior", "stage": st.log.stage,
                          "probabilities": post.probabilities.tolist(),
                          "map": [h.tx_k, h.rx_k], "p_map": p})
        lines.append({"event": "select", "stage": st.log.stage,
                      "pair": [st.selected.tx_k, st.selected.rx_k]})
    lines.append({"event": "outcome", "tx_estimate": outcome.tx_estimate,
                  "rx_estimate": outcome.rx_estimate,
                  "alpha_re": outcome.alpha_estimate.real,
                  "alpha_im": outcome.alpha_estimate.imag,
                  "total_measurements": outcome.total_measurements,
                  "per_stage_measurements": list(outcome.per_stage_measurements),
                  "feedback_bits": outcome.feedback_bits, "success": outcome.success})
    return lines


def cmd_trial(args) -> int:
    plan = StagePlan(args.k_vector, args.n)
    noise = NoiseModel.from_snr_db(args.snr_db, args.p_r)
    rng = np.random.default_rng(args.seed)
    channel = sample_channel(AngleGrid(args.n), noise, rng)
    if args.scheme == "race":
        outcome = run_race(RaceConfig(args.gamma, args.m_max, plan), channel, noise, rng)
    else:
        outcome = run_fixed(plan, channel, noise, rng)
    text = "".join(json.dumps(line) + "\n" for line in _trace_lines(outcome, channel))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_codebook(args) -> int:
    plan = StagePlan(args.k_vector, args.n)
    rows = export_beam_patterns(build_codebook(plan, AngleGrid(args.n)), args.out)
    print(f"wrote {rows} rows to {args.out}", file=sys.stderr)
    return 0


def cmd_calibrate(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    try:
        n = doc["n_antennas"]
        plans = [StagePlan(kv, n) for kv in doc["candidates"]]
        table = calibrate_switch_table(plans, doc["snr_grid_db"], doc["gamma"],
                                       doc.get("trials", 1000),
                                       np.random.default_rng(doc.get("seed", 0)),
                                       doc.get("p_r", 1.0))
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]}") from None
    with open(args.out, "w") as fh:
        fh.write(table.to_json() + "\n")
    print(f"wrote {len(table.entries)} switch entries to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="race-mmwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run an SNR sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trial", help="dump one trial as JSON lines")
    p.add_argument("--scheme", choices=["fixed", "race"], required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--k-vector", type=_k_vector, default=None)
    p.add_argument("--gamma", type=float, default=1e-2)
    p.add_argument("--m-max", type=int, default=264)
    p.add_argument("--p-r", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("codebook", help="export beam magnitude responses as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k-vector", type=_k_vector, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("calibrate-switch", help="build a rate-switching table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "k_vector", 0) is None:
        args.k_vector = [2] * (args.n.bit_length() - 1)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"race-mmwave {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
