"""CSV tables and the plain-text codebook format.

Floats are written with 17 significant digits so every file round-trips
exactly.  Codebook files hold one or more blocks::

    HMB trial=0 ris=0 N=16 Ni=64 B=4 R=4 L=2 p=17 k=4 codewords=1 hashes=3,1,4,1;5,9,2,6
    <Q lines of interleaved re im pairs, slot order q = l*B + b>   (if codewords=1)
    <Q lines of R direction indices>
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import fields
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from ..array_model import Channels
from ..codebook import HmbCodebook, MultiArmBeamSet
from ..galois_hash import PolyHash, PrimeField, coeffs_from_text, hash_to_text
from ..identify import UNRESOLVED, IdentificationResult
from .sweeps import MetricsRow, RoundsCheckRow

TRACE_COLUMNS = ("trial", "user", "slot", "round", "beam", "power")
TRUTH_COLUMNS = ("trial", "user", "ris", "gamma_true", "rank_true", "gain_re", "gain_im")
RESULT_COLUMNS = ("trial", "user", "ris", "gamma_true", "gamma_hat", "resolved", "rank_true",
                  "rank_hat")
OUTCOME_COLUMNS = RESULT_COLUMNS + ("slots_used",)
METRIC_COLUMNS = ("method", "B", "L", "snr_db", "N", "I", "K", "trials", "link_accuracy",
                  "strongest_link_accuracy", "ranking_accuracy", "slots_used", "status")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def write_csv(path_or_stream, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    def emit(stream: TextIO):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])

    if isinstance(path_or_stream, (str, Path)):
        Path(path_or_stream).parent.mkdir(parents=True, exist_ok=True)
        with open(path_or_stream, "w", newline="") as fh:
            emit(fh)
    else:
        emit(path_or_stream)


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def metrics_csv(rows: Sequence[MetricsRow], path_or_stream, timing: bool = False,
                overhead: bool = False) -> None:
    columns = list(METRIC_COLUMNS)
    if overhead:
        columns.append("slots_at_target")
    if timing:
        columns.append("wall_time")
    write_csv(path_or_stream, columns, ([getattr(r, c) for c in columns] for r in rows))


def rounds_check_csv(rows: Sequence[RoundsCheckRow], path_or_stream) -> None:
    columns = [f.name for f in fields(RoundsCheckRow)]
    write_csv(path_or_stream, columns, ([getattr(r, c) for c in columns] for r in rows))


def csv_text(writer, *args, **kwargs) -> str:
    buf = io.StringIO()
    writer(*args, buf, **kwargs)
    return buf.getvalue()


def trace_rows(trial: int, powers: np.ndarray, bins: int):
    """Rows of the trace CSV for a (K, Q) power array."""
    for user, trace in enumerate(powers):
        for slot, power in enumerate(trace):
            rnd, beam = divmod(slot, bins)
            yield trial, user, slot, rnd, beam, float(power)


def truth_rows(trial: int, channels: Channels):
    for user in range(channels.user_count):
        rank = {int(r): pos for pos, r in enumerate(channels.ranking[user])}
        for ris in range(channels.ris_count):
            g = complex(channels.gains[ris, user])
            yield trial, user, ris, int(channels.directions[ris, user]), rank[ris], g.real, g.imag


def result_rows(trial: int, results: Sequence[IdentificationResult],
                channels: Channels | None = None):
    for user, res in enumerate(results):
        for ris, gamma in enumerate(res.gamma_hat):
            if channels is None:
                g_true, r_true = UNRESOLVED, UNRESOLVED
            else:
                g_true = int(channels.directions[ris, user])
                r_true = int(list(channels.ranking[user]).index(ris))
            yield (trial, user, ris, g_true, int(gamma), int(gamma != UNRESOLVED), r_true,
                   res.rank_of(ris))


def load_traces(path) -> dict[int, np.ndarray]:
    """trial -> (K, Q) power array from a trace CSV."""
    table: dict[int, dict[int, dict[int, float]]] = {}
    for row in read_csv(path):
        t, k, q = int(row["trial"]), int(row["user"]), int(row["slot"])
        table.setdefault(t, {}).setdefault(k, {})[q] = float(row["power"])
    out = {}
    for t, users in table.items():
        K = max(users) + 1
        Q = max(max(slots) for slots in users.values()) + 1
        arr = np.zeros((K, Q))
        for k, slots in users.items():
            for q, p in slots.items():
                arr[k, q] = p
        out[t] = arr
    return out


def load_truth(path) -> dict[int, Channels]:
    rows: dict[int, list[dict[str, str]]] = {}
    for row in read_csv(path):
        rows.setdefault(int(row["trial"]), []).append(row)
    out = {}
    for t, items in rows.items():
        I = max(int(r["ris"]) for r in items) + 1
        K = max(int(r["user"]) for r in items) + 1
        gains = np.zeros((I, K), dtype=complex)
        dirs = np.zeros((I, K), dtype=np.int64)
        ranking = np.zeros((K, I), dtype=np.int64)
        for r in items:
            i, k = int(r["ris"]), int(r["user"])
            gains[i, k] = complex(float(r["gain_re"]), float(r["gain_im"]))
            dirs[i, k] = int(r["gamma_true"])
            ranking[k, int(r["rank_true"])] = i
        out[t] = Channels(gains, dirs, ranking)
    return out


def _header(beams: MultiArmBeamSet, n_elements: int, codewords: bool, trial: int | None,
            ris: int | None) -> str:
    h0 = beams.hashes[0]
    hashes = ";".join(hash_to_text(h) for h in beams.hashes)
    tags = []
    if trial is not None:
        tags.append(f"trial={trial}")
    if ris is not None:
        tags.append(f"ris={ris}")
    tags += [f"N={beams.n_directions}", f"Ni={n_elements}", f"B={beams.beams}", f"R={beams.arms}",
             f"L={beams.rounds}", f"p={h0.field.p}", f"k={h0.k}", f"codewords={int(codewords)}",
             f"hashes={hashes}"]
    return "HMB " + " ".join(tags)


def write_codebook(stream: TextIO, book: HmbCodebook | MultiArmBeamSet, n_elements: int | None = None,
                   trial: int | None = None, ris: int | None = None) -> None:
    """Write one block; pass a bare beam set to omit codewords."""
    if isinstance(book, HmbCodebook):
        beams, words = book.beam_set, book.slot_codewords()
        n_elements = words.shape[1]
    else:
        beams, words = book, None
        if n_elements is None:
            raise ValueError("n_elements is required when writing a bare beam set")
    stream.write(_header(beams, n_elements, words is not None, trial, ris) + "\n")
    if words is not None:
        for w in words:
            pairs = np.column_stack([w.real, w.imag]).ravel()
            stream.write(" ".join(fmt(x) for x in pairs) + "\n")
    for d in beams.slot_dirs():
        stream.write(" ".join(str(int(x)) for x in d) + "\n")


def read_codebooks(stream: TextIO) -> list[dict]:
    """Parse every block; each dict has the header tags, ``beams`` and optionally ``codewords``."""
    lines = [ln.strip() for ln in stream if ln.strip()]
    blocks, pos = [], 0
    while pos < len(lines):
        head = lines[pos].split()
        if head[0] != "HMB":
            raise ValueError(f"expected a codebook header, got {lines[pos][:40]!r}")
        tags = dict(tok.split("=", 1) for tok in head[1:])
        N, n_el, B, R, L = (int(tags[k]) for k in ("N", "Ni", "B", "R", "L"))
        p, k = int(tags["p"]), int(tags["k"])
        Q = L * B
        pos += 1
        block: dict = {key: int(v) for key, v in tags.items() if key in ("trial", "ris")}
        block.update(N=N, Ni=n_el, B=B, R=R, L=L)
        if int(tags["codewords"]):
            vals = np.array([[float(x) for x in lines[pos + q].split()] for q in range(Q)])
            block["codewords"] = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(L, B, n_el)
            pos += Q
        dirs = np.array([[int(x) for x in lines[pos + q].split()] for q in range(Q)], dtype=np.int64)
        pos += Q
        field_ = PrimeField(p)
        hashes = tuple(PolyHash(field_, coeffs_from_text(part), B)
                       for part in tags["hashes"].split(";"))
        block["beams"] = MultiArmBeamSet(dirs.reshape(L, B, R), hashes, N)
        blocks.append(block)
    return blocks
