"""Summarize a student's submission embeddings into one context vector.

Four strategies, crossing scope (all submissions vs. last lab only) with
reduction (componentwise average vs. the real submission closest to the
centroid).  The centroid reduction never synthesizes a vector: its output
is one of the input embeddings, bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import Submission
from .embed import Embedding
from .errors import DimMismatch, EmptyAfterScope

STRATEGY_NAMES = ("avg-all", "avg-last-lab", "centroid-all", "centroid-last-lab")

SYNTHETIC_AVERAGE = "synthetic-average"


@dataclass(frozen=True)
class SummarizationStrategy:
    scope: str  # "all" | "last-lab"
    reduction: str  # "average" | "centroid"

    def __post_init__(self):
        if self.scope not in ("all", "last-lab"):
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.reduction not in ("average", "centroid"):
            raise ValueError(f"unknown reduction {self.reduction!r}")

    @property
    def name(self) -> str:
        scope = "all" if self.scope == "all" else "last-lab"
        prefix = "avg" if self.reduction == "average" else "centroid"
        return f"{prefix}-{scope}"

    @classmethod
    def parse(cls, name: str) -> "SummarizationStrategy":
        prefix, _, scope = name.partition("-")
        reduction = {"avg": "average", "centroid": "centroid"}.get(prefix)
        if reduction is None or scope not in ("all", "last-lab"):
            raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}")
        return cls(scope=scope, reduction=reduction)


ALL_STRATEGIES = tuple(SummarizationStrategy.parse(n) for n in STRATEGY_NAMES)


@dataclass(frozen=True)
class StudentContext:
    vector: Embedding
    strategy: SummarizationStrategy
    # Either SYNTHETIC_AVERAGE or (student_id, offering_year, problem_id, attempt_index).
    provenance: str | tuple[str, int, str, int]


def summarize(
    embedded: Sequence[tuple[Submission, Embedding]],
    strategy: SummarizationStrategy,
    current_lab: int,
) -> StudentContext:
    """Reduce an ordered (by submitted_at) embedding sequence to one context.

    Last-lab scope keeps only the submissions of the highest lab index still
    <= current_lab; the centroid reduction returns the embedding closest
    (Euclidean) to the scoped mean, earliest submission winning ties.
    Distances within one part in 1e9 count as tied, so the selection is
    stable under translation of all inputs (exact ties round differently
    once a constant is added).
    """
    scoped = [(s, e) for s, e in embedded if s.lab_index <= current_lab]
    if strategy.scope == "last-lab" and scoped:
        last_lab = max(s.lab_index for s, _ in scoped)
        scoped = [(s, e) for s, e in scoped if s.lab_index == last_lab]
    if not scoped:
        raise EmptyAfterScope(f"no submissions in scope at lab {current_lab}")

    dim = scoped[0][1].dim
    for _, e in scoped:
        if e.dim != dim:
            raise DimMismatch(f"mixed embedding dims {dim} and {e.dim}")

    matrix = np.stack([e.values for _, e in scoped])
    centroid = matrix.mean(axis=0)

    if strategy.reduction == "average":
        digest = hashlib.sha256(
            ("avg:" + ",".join(e.source_digest for _, e in scoped)).encode("ascii")
        ).hexdigest()
        vector = Embedding(centroid, dim, scoped[0][1].provider_tag, digest)
        return StudentContext(vector=vector, strategy=strategy, provenance=SYNTHETIC_AVERAGE)

    distances = np.linalg.norm(matrix - centroid, axis=1)
    dmin = float(distances.min())
    tolerance = 1e-9 * (1.0 + dmin)
    best_i = int(np.argmax(distances <= dmin + tolerance))  # earliest within the tie band
    sub, emb = scoped[best_i]
    provenance = (sub.student_id, sub.offering_year, sub.problem_id, sub.attempt_index)
    return StudentContext(vector=emb, strategy=strategy, provenance=provenance)
