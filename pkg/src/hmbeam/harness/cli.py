"""Command-line entry point: ``hmbeam <subcommand> [options]``.

Exit codes: 0 success, 1 failed check, 2 configuration or usage error,
3 accuracy target unreachable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from ..baselines import exhaustive_train, hierarchical_train
from ..errors import ConfigError, HmbError, TargetUnreachable
from ..galois_hash import HashFamilySpec, balanced_partition, hash_to_text, sample_hash
from ..identify import demultiplex_and_vote
from . import io
from .config import SCHEMA_HELP, ExperimentConfig, load_config
from .engine import hmb_codebooks, resolve_threads, scan_hmb, snr_scale, stream, trial_channels
from .sweeps import (log_linear_fit, require_methods, run_accuracy_sweep, run_overhead_sweep,
                     theorem2_trend_check)

log = logging.getLogger("hmbeam")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\n{SCHEMA_HELP}")
        raise SystemExit(2)


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=d(None), help="config file (default: built-in defaults)")
    parser.add_argument("--seed", type=int, default=d(None), help="override the config seed")
    parser.add_argument("--out", default=d(None), help="output file or directory")
    parser.add_argument("--threads", type=int, default=d(1), help="worker threads (HMB_THREADS wins)")
    parser.add_argument("--format", choices=["csv"], default=d("csv"))
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg.validate()


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        yield fh


def _out_path(args, cfg: ExperimentConfig, name: str) -> Path:
    return Path(args.out) if args.out else Path(cfg.out_dir) / name


def _bins(args, cfg: ExperimentConfig) -> int:
    return args.bins if args.bins is not None else cfg.B[0]


def cmd_gen_hash(args, cfg: ExperimentConfig) -> int:
    keys = args.keys or cfg.n_directions
    bins = _bins(args, cfg)
    spec = HashFamilySpec.for_grid(keys, bins, args.k or cfg.k_wise)
    h = sample_hash(spec, np.random.default_rng(np.random.SeedSequence(cfg.seed)))
    with _output(args.out) as fh:
        fh.write(f"p={h.field.p} k={h.k} B={h.bins} N={keys} coeffs={hash_to_text(h)}\n")
        if args.partition:
            for b, part in enumerate(balanced_partition(h, keys, bins)):
                fh.write(f"{b}: " + " ".join(str(int(x)) for x in part) + "\n")
    return 0


def cmd_gen_codebook(args, cfg: ExperimentConfig) -> int:
    bins = _bins(args, cfg)
    rounds = args.rounds or cfg.rounds
    books = hmb_codebooks(cfg, args.trial, bins, rounds)
    with _output(args.out) as fh:
        for i, book in enumerate(books):
            if args.beams_only:
                io.write_codebook(fh, book.beam_set, cfg.geometry.n_elements, args.trial, i)
            else:
                io.write_codebook(fh, book, trial=args.trial, ris=i)
    return 0


def cmd_simulate(args, cfg: ExperimentConfig) -> int:
    snr = args.snr if args.snr is not None else max(cfg.snr_db)
    out_dir = Path(args.out) if args.out else Path(cfg.out_dir) / "simulate"
    out_dir.mkdir(parents=True, exist_ok=True)
    scale = snr_scale(snr)
    trials = range(args.first_trial, args.first_trial + args.trials)
    truth = []
    if args.method == "hmb":
        bins = _bins(args, cfg)
        rounds = args.rounds or cfg.rounds
        trace, beams_path = [], out_dir / "beams.txt"
        with open(beams_path, "w") as fh:
            for t in trials:
                scanned = scan_hmb(cfg, t, bins, rounds)
                trace.extend(io.trace_rows(t, scanned.powers(cfg.scenario(snr), snr), bins))
                truth.extend(io.truth_rows(t, scanned.channels.scaled(scale)))
                for i, beams in enumerate(scanned.beam_sets):
                    io.write_codebook(fh, beams, cfg.geometry.n_elements, t, i)
        io.write_csv(out_dir / "trace.csv", io.TRACE_COLUMNS, trace)
    else:
        require_methods(cfg, args.method)
        train = exhaustive_train if args.method == "exhaustive" else hierarchical_train
        rows = []
        for t in trials:
            channels = trial_channels(cfg, t)
            outcome = train(cfg.scenario(snr), channels.scaled(scale), stream(cfg.seed, t, args.method))
            truth.extend(io.truth_rows(t, channels.scaled(scale)))
            for k in range(cfg.K):
                rank_hat = list(outcome.ranking[k])
                rank_true = list(channels.ranking[k])
                for i in range(cfg.I):
                    rows.append((t, k, i, int(channels.directions[i, k]), int(outcome.gamma_hat[i, k]),
                                 1, rank_true.index(i), rank_hat.index(i), outcome.slots_used))
        io.write_csv(out_dir / f"{args.method}_outcomes.csv", io.OUTCOME_COLUMNS, rows)
    io.write_csv(out_dir / "truth.csv", io.TRUTH_COLUMNS, truth)
    log.info("wrote %s", out_dir)
    return 0


def cmd_identify(args, cfg: ExperimentConfig) -> int:
    traces = io.load_traces(args.trace)
    with open(args.beams) as fh:
        blocks = io.read_codebooks(fh)
    by_trial: dict[int, list] = {}
    for blk in blocks:  # RIS order is file order within a trial
        by_trial.setdefault(blk.get("trial", 0), []).append(blk["beams"])
    truth = io.load_truth(args.truth) if args.truth else {}
    rows = []
    for t in sorted(traces):
        if t not in by_trial:
            raise ConfigError(f"no beam sets for trial {t} in {args.beams}", "beams")
        beam_sets = by_trial[t]
        rounds = beam_sets[0].rounds
        results = [demultiplex_and_vote(p, beam_sets, rounds, args.threshold) for p in traces[t]]
        rows.extend(io.result_rows(t, results, truth.get(t)))
    with _output(args.out) as fh:
        io.write_csv(fh, io.RESULT_COLUMNS, rows)
    return 0


def cmd_sweep_accuracy(args, cfg: ExperimentConfig) -> int:
    rows = run_accuracy_sweep(cfg, args.threads)
    path = _out_path(args, cfg, "accuracy.csv")
    io.metrics_csv(rows, path, timing=args.timing)
    for r in rows:
        log.info("%s B=%s snr=%g link=%.4f", r.method, r.B, r.snr_db, r.link_accuracy)
    return 0


def cmd_sweep_overhead(args, cfg: ExperimentConfig) -> int:
    rows = run_overhead_sweep(cfg, tuple(args.n_values), args.snr, args.l_max, args.threads)
    path = _out_path(args, cfg, "overhead.csv")
    io.metrics_csv(rows, path, timing=args.timing, overhead=True)
    hmb = [r for r in rows if r.method == "hmb" and r.status == "ok"]
    for bins in sorted({r.B for r in hmb}):
        sel = [r for r in hmb if r.B == bins]
        if len(sel) >= 2:
            _, slope, r2 = log_linear_fit([r.N for r in sel], [r.slots_at_target for r in sel])
            print(f"B={bins}: slots at target = a + {slope:.3f} log2 N, R^2 = {r2:.4f}")
    unreachable = [r for r in rows if r.status == "unreachable"]
    if unreachable:
        raise TargetUnreachable(", ".join(f"N={r.N} B={r.B}" for r in unreachable))
    return 0


def cmd_check_theorem2(args, cfg: ExperimentConfig) -> int:
    rows, ok = theorem2_trend_check(cfg, tuple(args.l_values), args.snr, args.threads)
    io.rounds_check_csv(rows, _out_path(args, cfg, "rounds.csv"))
    for r in rows:
        print(f"L={r.L:>3} error={r.error_rate:.5f} ({r.errors}/{r.trials * cfg.I * cfg.K}) {r.status}")
    print("trend " + ("holds" if ok else "violated"))
    return 0 if ok else 1


def cmd_selftest(args, cfg: ExperimentConfig) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(cfg, args.threads) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    parser = _Parser(prog="hmbeam", description="Hashing multi-arm beam training simulator.",
                     epilog=SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-hash", parents=[common], help="sample one hash polynomial")
    p.add_argument("--bins", type=int)
    p.add_argument("--keys", type=int, help="key count (default N)")
    p.add_argument("--k", type=int, help="independence order (default k_wise)")
    p.add_argument("--partition", action="store_true", help="also print the balanced partition")
    p.set_defaults(func=cmd_gen_hash)

    p = sub.add_parser("gen-codebook", parents=[common], help="write one trial's HMB codebooks")
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--bins", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--beams-only", action="store_true", help="omit the codeword lines")
    p.set_defaults(func=cmd_gen_codebook)

    p = sub.add_parser("simulate", parents=[common], help="scan trials and write traces and truth")
    p.add_argument("--method", choices=["hmb", "exhaustive", "hierarchical"], default="hmb")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--first-trial", type=int, default=0)
    p.add_argument("--snr", type=float, help="SNR in dB (default: highest config point)")
    p.add_argument("--bins", type=int)
    p.add_argument("--rounds", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", parents=[common], help="identify directions from a trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--beams", required=True)
    p.add_argument("--truth")
    p.add_argument("--threshold", type=float, help="stop when a block's weakest power is below this")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("sweep-accuracy", parents=[common], help="accuracy versus SNR")
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.set_defaults(func=cmd_sweep_accuracy)

    p = sub.add_parser("sweep-overhead", parents=[common], help="training slots versus grid size")
    p.add_argument("--n-values", type=int, nargs="+", default=[16, 32, 64, 128])
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--l-max", type=int, default=64)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_sweep_overhead)

    p = sub.add_parser("check-theorem2", parents=[common], help="error rate versus hashing rounds")
    p.add_argument("--l-values", type=int, nargs="+", default=[2, 4, 8, 16])
    p.add_argument("--snr", type=float, default=0.0)
    p.set_defaults(func=cmd_check_theorem2)

    p = sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.threads = resolve_threads(args.threads)
        cfg = _load(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        sys.stderr.write(f"config error{key}: {exc}\n\n{SCHEMA_HELP}")
        return 2
    except TargetUnreachable as exc:
        sys.stderr.write(f"accuracy target unreachable: {exc}\n")
        return 3
    except HmbError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
