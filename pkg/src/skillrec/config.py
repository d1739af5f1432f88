"""Run configuration: key=value config file, flag overrides, stable digest.

A run's effective configuration is digested (sha256 of its canonical JSON)
and embedded in every artifact the run writes, so identical digests mean
byte-identical reproductions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .embed import (
    DEFAULT_DIM,
    PrecomputedProvider,
    RemoteProvider,
    StaticProviderFactory,
    TfIdfProviderFactory,
)
from .skillnet import Hyperparams


@dataclass
class Config:
    corpus: str = "corpus"
    provider: str = "tfidf"  # tfidf | precomputed:<file> | remote:<url>
    dim: int = DEFAULT_DIM
    hidden_units: int = 100
    epochs: int = 200
    learning_rate: float = 0.001
    l2_lambda: float = 0.1
    strategy: str = "centroid-last-lab"
    metric: str = "skills"
    k: int = 5
    suitability: str = "strict"
    seed: int = 42
    out: str = "out"
    remote_timeout_s: float = 30.0
    week_filter: bool = True
    context_correct_only: bool = False
    rank_by_labels: bool = False

    def hyper(self) -> Hyperparams:
        return Hyperparams(
            hidden_units=self.hidden_units,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            l2_lambda=self.l2_lambda,
            seed=self.seed,
        )

    def digest(self) -> str:
        """Digest of every computation-affecting field (the output directory
        names where results land, not what they are)."""
        doc = {k: v for k, v in asdict(self).items() if k != "out"}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def provider_factory(self):
        if self.provider == "tfidf":
            return TfIdfProviderFactory(max_terms=self.dim)
        if self.provider.startswith("precomputed:"):
            path = self.provider.split(":", 1)[1]
            return StaticProviderFactory(PrecomputedProvider.from_file(path, self.dim))
        if self.provider.startswith("remote:"):
            url = self.provider.split(":", 1)[1]
            return StaticProviderFactory(
                RemoteProvider(url, self.dim, timeout_s=self.remote_timeout_s)
            )
        raise ValueError(f"unknown provider {self.provider!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def parse_config_file(path: str | Path) -> dict:
    """Parse a key=value config file: '#' comments, JSON-ish scalar values."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(value.strip())
    return values


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare string


def build_config(config_file: str | None = None, overrides: dict | None = None) -> Config:
    """Config file values first, command-line flags win."""
    values: dict = {}
    if config_file:
        values.update(parse_config_file(config_file))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return Config(**values)
