"""Experiment configuration: a flat ``key = value`` text file.

Every key of :data:`CONFIG_KEYS` must be present; lists are comma separated,
``#`` starts a comment.  ``L = auto`` selects ceil(log2 N) rounds.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..array_model import AngleGrid, ScenarioConfig, UpaGeometry
from ..baselines import METHODS, default_rounds
from ..codebook import is_power_of_two
from ..errors import ConfigError

CONFIG_KEYS = ("I", "K", "n_h", "n_v", "d_h", "d_v", "N1", "N2", "B", "L", "k_wise",
               "gain_gap_db", "snr_db", "trials", "seed", "methods", "target_error",
               "accuracy_target", "out_dir")

SCHEMA_HELP = """\
Config file: one 'key = value' per line, all keys required, lists comma separated.
  I, K             RIS count, user count
  n_h, n_v         UPA elements per RIS (horizontal, vertical)
  d_h, d_v         element spacing in wavelengths
  N1, N2           direction grid size (N = N1 * N2)
  B                multi-arm beams per round, one value or a list
  L                hashing rounds, an integer or 'auto' (= ceil(log2 N))
  k_wise           independence order of the hash polynomials
  gain_gap_db      dB gap between successive links of a user
  snr_db           list of SNR points (strongest link, pre-beamforming)
  trials           Monte Carlo trials per point
  seed             64-bit base seed
  methods          subset of hmb, exhaustive, hierarchical
  target_error     error-rate target for the rounds check
  accuracy_target  link accuracy target for the overhead sweep
  out_dir          directory for CSV outputs
"""


@dataclass(frozen=True)
class ExperimentConfig:
    I: int = 3
    K: int = 3
    n_h: int = 32
    n_v: int = 32
    d_h: float = 0.5
    d_v: float = 0.5
    N1: int = 32
    N2: int = 1
    B: tuple[int, ...] = (8,)
    L: int | None = None
    k_wise: int = 4
    gain_gap_db: float = 3.0
    snr_db: tuple[float, ...] = (-40.0, -35.0, -30.0, -20.0, -10.0, -5.0, 0.0, 5.0, 10.0)
    trials: int = 2000
    seed: int = 20240601
    methods: tuple[str, ...] = METHODS
    target_error: float = 0.01
    accuracy_target: float = 0.6
    out_dir: str = "results"
    noise_power: float = field(default=1.0, compare=False)
    tx_power: float = field(default=1.0, compare=False)

    @property
    def n_directions(self) -> int:
        return self.N1 * self.N2

    @property
    def rounds(self) -> int:
        return default_rounds(self.n_directions) if self.L is None else self.L

    @property
    def geometry(self) -> UpaGeometry:
        return UpaGeometry(self.n_h, self.n_v, self.d_h, self.d_v)

    @property
    def grid(self) -> AngleGrid:
        return AngleGrid(self.N1, self.N2)

    def scenario(self, snr_db: float = 0.0) -> ScenarioConfig:
        return ScenarioConfig(self.I, self.K, self.geometry, self.grid, self.tx_power,
                              self.noise_power, self.gain_gap_db, snr_db)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "ExperimentConfig":
        """Raise ConfigError on the first violated constraint."""
        positive = {"I": self.I, "K": self.K, "n_h": self.n_h, "n_v": self.n_v,
                    "N1": self.N1, "N2": self.N2, "trials": self.trials}
        for key, value in positive.items():
            if value < 1:
                raise ConfigError(f"{key} must be >= 1, got {value}", key)
        if self.d_h <= 0 or self.d_v <= 0:
            raise ConfigError("element spacings must be positive", "d_h" if self.d_h <= 0 else "d_v")
        if self.L is not None and self.L < 1:
            raise ConfigError(f"L must be >= 1 or auto, got {self.L}", "L")
        if self.k_wise < 2:
            raise ConfigError(f"k_wise must be >= 2, got {self.k_wise}", "k_wise")
        if self.gain_gap_db < 0:
            raise ConfigError("gain_gap_db must be >= 0", "gain_gap_db")
        if not self.snr_db:
            raise ConfigError("snr_db must list at least one point", "snr_db")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a subset of {METHODS}, got {self.methods}", "methods")
        if not 0 < self.target_error < 1:
            raise ConfigError("target_error must lie in (0, 1)", "target_error")
        if not 0 < self.accuracy_target <= 1:
            raise ConfigError("accuracy_target must lie in (0, 1]", "accuracy_target")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        n, n_el = self.n_directions, self.n_h * self.n_v
        if "hmb" in self.methods:
            if not self.B:
                raise ConfigError("B must list at least one value", "B")
            for b in self.B:
                if b < 1 or n % b:
                    raise ConfigError(f"B={b} does not divide N={n}", "B")
                if n_el % (n // b):
                    raise ConfigError(f"R=N/B={n // b} does not divide N_i={n_el}", "B")
                if self.I > b:
                    raise ConfigError(f"I={self.I} RISs need B >= I, got B={b}", "B")
        if "hierarchical" in self.methods and (not is_power_of_two(n) or n < 2):
            raise ConfigError(f"hierarchical training needs N a power of two, got {n}", "N1")
        return self


_INT_KEYS = {"I", "K", "n_h", "n_v", "N1", "N2", "k_wise", "trials", "seed"}
_FLOAT_KEYS = {"d_h", "d_v", "gain_gap_db", "target_error", "accuracy_target"}


def _parse_value(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw, 0)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "B":
            return tuple(int(t) for t in raw.split(",") if t.strip())
        if key == "L":
            return None if raw.strip().lower() == "auto" else int(raw)
        if key == "snr_db":
            return tuple(float(t) for t in raw.split(",") if t.strip())
        if key == "methods":
            return tuple(t.strip() for t in raw.split(",") if t.strip())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})", key) from None


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key)
        values[key] = _parse_value(key, raw)
    for key in CONFIG_KEYS:
        if key not in values:
            raise ConfigError(f"missing config key {key!r}", key)
    return ExperimentConfig(**values).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float) and math.isfinite(value) and value == int(value):
        return repr(value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{key} = {_format_value(getattr(cfg, key))}\n" for key in CONFIG_KEYS)
