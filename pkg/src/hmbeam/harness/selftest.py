"""Fast internal consistency checks run by ``hmbeam selftest``.

Each check prints one PASS/FAIL line.  Trial counts are small so the whole
suite finishes in well under a minute on one core.
"""

from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from ..array_model import AngleGrid, UpaGeometry
from ..baselines import overhead_model
from ..codebook import (beam_gain, build_hierarchical_codebook, build_hmb_codebook,
                        build_multiarm_beams, build_single_beam_codebook, dft_form_check)
from ..errors import ConfigError
from ..galois_hash import HashFamilySpec, PrimeField, balanced_partition, enumerate_family, sample_hash
from ..protocol import alignment_record
from . import io
from .config import ExperimentConfig, dump_config, parse_config
from .engine import hmb_codebooks, trial_channels
from .sweeps import baseline_accuracy, hmb_accuracy, run_accuracy_sweep


def _dft() -> str:
    worst = max(dft_form_check(build_single_beam_codebook(UpaGeometry(h, v), AngleGrid(h, v)))
                for h, v in ((4, 1), (8, 4), (32, 32)))
    assert worst < 1e-9, worst
    return f"max deviation {worst:.1e}"


def _family() -> str:
    members = list(enumerate_family(PrimeField(5), 2, 5))
    assert len(members) == 5 ** 2 - 5
    return f"{len(members)} polynomials"


def _partition(seed: int) -> str:
    rng = np.random.default_rng(seed)
    for n, bins in ((16, 4), (32, 8), (128, 8), (30, 5)):
        spec = HashFamilySpec.for_grid(n, bins)
        for _ in range(20):
            parts = balanced_partition(sample_hash(spec, rng), n, bins)
            assert all(len(p) == n // bins for p in parts)
            assert np.array_equal(np.sort(np.concatenate(parts)), np.arange(n))
    return "balanced and exhaustive"


def _collision(seed: int) -> str:
    rng = np.random.default_rng(seed)
    n, bins, draws = 32, 4, 4000
    spec = HashFamilySpec.for_grid(n, bins)
    hits = 0
    for _ in range(draws):
        a, b = rng.integers(0, n, size=2)
        pa = np.argmax([a in p for p in balanced_partition(sample_hash(spec, rng), n, bins)])
        pb = np.argmax([b in p for p in balanced_partition(sample_hash(spec, rng), n, bins)])
        hits += pa == 0 and pb == 0
    rate, sigma = hits / draws, math.sqrt(1 / 16 * 15 / 16 / draws)
    assert abs(rate - 1 / bins ** 2) < 4 * sigma, rate
    return f"slot-0 joint rate {rate:.4f} vs {1 / bins ** 2:.4f}"


def _alignment(cfg: ExperimentConfig) -> str:
    for t in range(50):
        books = hmb_codebooks(cfg, t, cfg.B[0])
        seen = alignment_record(trial_channels(cfg, t), [b.beam_set for b in books])
        assert np.all(seen.counts() == cfg.rounds)
    return f"every link aligned exactly L={cfg.rounds} times"


def _splice() -> str:
    geom, grid = UpaGeometry(16, 4), AngleGrid(16)
    single = build_single_beam_codebook(geom, grid)
    beams = build_multiarm_beams(grid, 4, 1, HashFamilySpec.for_grid(16, 4), np.random.default_rng(1))
    book = build_hmb_codebook(single, beams)
    members = beams.dirs[0, 0]
    gains = np.array([beam_gain(book.codewords[0, 0], single.rows[d]) for d in range(16)])
    others = np.setdiff1d(np.arange(16), members)
    ratio = gains[members].min() / max(gains[others].max(), 1e-12)
    assert ratio >= 3, ratio
    return f"member/non-member gain ratio {ratio:.3g}"


def _hierarchy() -> str:
    tree = build_hierarchical_codebook(UpaGeometry(32, 1), AngleGrid(32))
    assert tree.depth == 5
    return "5 layers over 32 directions"


def _identification(cfg: ExperimentConfig) -> str:
    small = cfg.replace(I=1, K=2, n_h=16, n_v=4, N1=16, N2=1, B=(4,), L=8, trials=50)
    acc = hmb_accuracy(small, 4, 8, 30.0)
    assert acc >= 0.98, acc
    return f"I=1 accuracy {acc:.3f} at 30 dB"


def _overhead(cfg: ExperimentConfig) -> str:
    for n in (16, 32):
        sub = cfg.replace(N1=n, N2=1, n_h=max(16, n), n_v=4, trials=2)
        for method in ("exhaustive", "hierarchical"):
            _, slots = baseline_accuracy(sub, method, 0.0)
            assert slots == overhead_model(method, n, sub.I), (method, n, slots)
    return "baseline slot counts match the closed forms"


def _determinism(cfg: ExperimentConfig, threads: int) -> str:
    small = cfg.replace(n_h=16, n_v=4, N1=16, N2=1, B=(4,), L=4, trials=6, snr_db=(0.0, 10.0),
                        I=min(cfg.I, 4))
    text = [io.csv_text(io.metrics_csv, run_accuracy_sweep(small, threads)) for threads in (1, max(3, threads))]
    assert text[0] == text[1]
    return f"identical CSV at 1 and {max(3, threads)} threads"


def _chance(cfg: ExperimentConfig) -> str:
    small = cfg.replace(n_h=16, n_v=4, N1=16, N2=1, B=(4,), L=4, trials=400, I=1, K=3)
    acc, _ = baseline_accuracy(small, "exhaustive", float("-inf"))
    links = small.trials * small.K
    sigma = math.sqrt(1 / 16 * 15 / 16 / links)
    assert abs(acc - 1 / 16) <= 3 * sigma, acc
    return f"noise-only accuracy {acc:.3f} vs 1/N = {1 / 16:.3f}"


def _config(cfg: ExperimentConfig) -> str:
    text = dump_config(cfg)
    assert parse_config(text) == cfg
    try:
        parse_config("\n".join(ln for ln in text.splitlines() if not ln.startswith("seed")))
    except ConfigError as exc:
        assert exc.key == "seed"
    else:
        raise AssertionError("missing key accepted")
    return "round trip and missing-key detection"


def run_selftest(cfg: ExperimentConfig, threads: int = 1, stream=None) -> bool:
    checks: list[tuple[str, Callable[[], str]]] = [
        ("dft-equivalence", _dft),
        ("hash-family-size", _family),
        ("balanced-partition", lambda: _partition(cfg.seed)),
        ("collision-rate", lambda: _collision(cfg.seed)),
        ("alignment-count", lambda: _alignment(cfg)),
        ("multiarm-splice", _splice),
        ("hierarchical-tiling", _hierarchy),
        ("single-ris-identification", lambda: _identification(cfg)),
        ("slot-accounting", lambda: _overhead(cfg)),
        ("thread-determinism", lambda: _determinism(cfg, threads)),
        ("chance-level", lambda: _chance(cfg)),
        ("config-schema", lambda: _config(cfg)),
    ]
    ok = True
    for name, check in checks:
        start = time.perf_counter()
        try:
            detail, status = check(), "PASS"
        except Exception as exc:  # report every failure, keep going
            detail, status, ok = f"{type(exc).__name__}: {exc}", "FAIL", False
        print(f"{status} {name:<26} {detail} ({time.perf_counter() - start:.1f}s)", file=stream)
    print("selftest " + ("passed" if ok else "FAILED"), file=stream)
    return ok
