"""Flat key/value run configuration for the CLI.

Config files hold one `key = value` pair per line; `#` starts a comment.
Recognized keys (defaults in parentheses):

  dataset            synth | files (synth)
  base_path          fvecs file with base vectors (files mode)
  query_path         fvecs file with query vectors (files mode)
  metric             l2 | angular (l2)
  synth_points       synthetic base size n_o (n + steps*batch)
  synth_dim          synthetic dimension (32)
  synth_clusters     mixture components (8)
  synth_queries      synthetic query count (200)
  max_queries        cap on the number of queries used (all)
  n                  working index size (10000)
  batch              per-step delete/insert batch size b (2000)
  steps              update steps S (5)
  k                  recall depth (10)
  ef_search          search beam width (100)
  ef_ladder          comma list for QPS-recall curves (10,20,40,80,160,320)
  m                  HNSW max degree (16)
  ef_construction    HNSW construction beam (200)
  seed               master RNG seed (0)
  methods            comma list of logical,physical,rebuild (bench only)
  alpha              target recall (control only)
  training_fraction  share of queries used for estimation (0.1)
  curve              record QPS-recall curves, true/false (false)
  plots              write SVG plots, true/false (false)
  out                output directory (results)

Exactly one of `methods` (bench) or `alpha` (control) may be set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .harness import ProtocolConfig

DEFAULT_EF_LADDER = (10, 20, 40, 80, 160, 320)
_VALID_METHODS = ("logical", "physical", "rebuild")


@dataclass
class RunConfig:
    dataset: str = "synth"
    base_path: str | None = None
    query_path: str | None = None
    metric: str = "l2"
    synth_points: int | None = None
    synth_dim: int = 32
    synth_clusters: int = 8
    synth_queries: int = 200
    max_queries: int | None = None
    n: int = 10000
    batch: int = 2000
    steps: int = 5
    k: int = 10
    ef_search: int = 100
    ef_ladder: tuple[int, ...] = DEFAULT_EF_LADDER
    m: int = 16
    ef_construction: int = 200
    seed: int = 0
    methods: tuple[str, ...] | None = None
    alpha: float | None = None
    training_fraction: float = 0.1
    curve: bool = False
    plots: bool = False
    out: str = "results"

    def __post_init__(self):
        if self.dataset not in ("synth", "files"):
            raise ConfigError(f"dataset must be synth or files, got {self.dataset!r}")
        if self.dataset == "files" and not (self.base_path and self.query_path):
            raise ConfigError("dataset=files requires base_path and query_path")
        if self.methods is not None and self.alpha is not None:
            raise ConfigError(
                "set either methods (bench) or alpha (control), not both"
            )
        if self.methods is not None:
            bad = [m for m in self.methods if m not in _VALID_METHODS]
            if bad:
                raise ConfigError(f"unknown methods: {', '.join(bad)}")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.training_fraction < 1.0:
            raise ConfigError(
                f"training_fraction must be in (0, 1), got {self.training_fraction}"
            )

    @property
    def n_total(self) -> int:
        return self.synth_points or (self.n + self.steps * self.batch)

    def protocol_config(self, method) -> ProtocolConfig:
        return ProtocolConfig(
            n=self.n,
            batch_size=self.batch,
            steps=self.steps,
            method=method,
            k=self.k,
            ef_search=self.ef_search,
            m=self.m,
            ef_construction=self.ef_construction,
            metric=self.metric,
            seed=self.seed,
            curve_ladder=self.ef_ladder if self.curve else None,
        )


_PARSERS = {
    "dataset": str,
    "base_path": str,
    "query_path": str,
    "metric": str,
    "synth_points": int,
    "synth_dim": int,
    "synth_clusters": int,
    "synth_queries": int,
    "max_queries": int,
    "n": int,
    "batch": int,
    "steps": int,
    "k": int,
    "ef_search": int,
    "m": int,
    "ef_construction": int,
    "seed": int,
    "alpha": float,
    "training_fraction": float,
    "out": str,
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_methods(text: str) -> tuple[str, ...]:
    return tuple(part.strip().lower() for part in text.split(",") if part.strip())


def load_config(path) -> RunConfig:
    """Parse a flat key/value config file into a RunConfig."""
    values: dict[str, object] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        try:
            if key in _PARSERS:
                values[key] = _PARSERS[key](value)
            elif key in ("curve", "plots"):
                values[key] = _parse_bool(value)
            elif key == "ef_ladder":
                values[key] = _parse_int_list(value)
            elif key == "methods":
                values[key] = _parse_methods(value)
            else:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{line_no}: bad value for {key}: {exc}") from None
    return RunConfig(**values)
