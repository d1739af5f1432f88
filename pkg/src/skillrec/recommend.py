"""Rank homework candidates for a student.

The skills metric compares the student's predicted skill vector against
each candidate's predicted skill vector by cosine similarity; the two
baseline metrics order candidates by predicted solution time (ascending)
or predicted correctness probability (descending).  All ties break by
ascending problem_id so lists are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .context import StudentContext, SummarizationStrategy, summarize
from .domain import TOPICS, Problem, SkillLevel, SkillTopic, SkillVector, skill_vector_as_reals
from .embed import Embedding
from .errors import DimMismatch, EmptyAfterScope
from .ingest import Corpus, student_sequence
from .skillnet import BaselineModel, SkillModel, predict, predict_baseline

METRICS = ("skills", "solution-time", "correctness")


@dataclass(frozen=True)
class RankedRecommendation:
    problem_id: str
    score: float
    rank: int
    metric: str


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """a.b / (|a||b|); 0.0 when either norm is zero (documented convention)."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise DimMismatch(f"vector dims differ: {av.shape} vs {bv.shape}")
    na2 = float(np.dot(av, av))
    nb2 = float(np.dot(bv, bv))
    if na2 == 0.0 or nb2 == 0.0:
        return 0.0
    # single sqrt keeps colinear integer vectors at exactly 1.0
    return max(-1.0, min(1.0, float(np.dot(av, bv)) / math.sqrt(na2 * nb2)))


def rank_scored(
    scored: Sequence[tuple[str, float]], k: int, metric: str, descending: bool = True
) -> list[RankedRecommendation]:
    """Order (problem_id, score) pairs; any strictly monotone transform of the
    scores yields the same ordering, ties always fall back to problem_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sign = -1.0 if descending else 1.0
    ordered = sorted(scored, key=lambda pair: (sign * pair[1], pair[0]))
    return [
        RankedRecommendation(problem_id=pid, score=float(score), rank=i + 1, metric=metric)
        for i, (pid, score) in enumerate(ordered[:k])
    ]


def rank(
    student_skills: SkillVector,
    candidates: Sequence[tuple[str, SkillVector]],
    k: int,
) -> list[RankedRecommendation]:
    """Top-k candidates by cosine similarity of skill vectors."""
    student = skill_vector_as_reals(student_skills)
    scored = [
        (pid, cosine_similarity(student, skill_vector_as_reals(skills)))
        for pid, skills in candidates
    ]
    return rank_scored(scored, k, "skills", descending=True)


def rank_baseline(
    metric: str,
    model: BaselineModel,
    candidates: Sequence[tuple[str, Embedding]],
    k: int,
) -> list[RankedRecommendation]:
    """Top-k by predicted solution time (shortest first) or correctness (most likely first)."""
    if metric not in ("solution-time", "correctness"):
        raise ValueError(f"baseline metric must be solution-time or correctness, got {metric!r}")
    if model.kind != metric:
        raise ValueError(f"model kind {model.kind!r} does not match metric {metric!r}")
    scored = [(pid, predict_baseline(model, emb)) for pid, emb in candidates]
    return rank_scored(scored, k, metric, descending=(metric == "correctness"))


def predict_student_skills(
    models: Mapping[SkillTopic, SkillModel], context: StudentContext
) -> SkillVector:
    """Apply the eight topic models to the context vector."""
    levels = tuple(SkillLevel(predict(models[t], context.vector)[0]) for t in TOPICS)
    return SkillVector(levels)


def predict_problem_skills(
    models: Mapping[SkillTopic, SkillModel], problem: Problem, embedder
) -> SkillVector:
    """Predict a candidate's skills from its reference solution.

    Same path as students; instructor labels are never consulted here.
    """
    emb = embedder.embed_one(problem.reference_solution)
    levels = tuple(SkillLevel(predict(models[t], emb)[0]) for t in TOPICS)
    return SkillVector(levels)


def homework_candidates(
    corpus: Corpus, current_week: int | None = None
) -> list[Problem]:
    """Homework-pool problems, optionally restricted to week <= current_week."""
    out = [
        p
        for p in corpus.problems.values()
        if p.role == "homework" and (current_week is None or p.week <= current_week)
    ]
    return sorted(out, key=lambda p: p.problem_id)


def recommend_for_student(
    corpus: Corpus,
    bundle,
    student_id: str,
    current_week: int,
    strategy: SummarizationStrategy,
    metric: str,
    k: int,
    week_filter: bool = True,
    correct_only: bool = False,
    rank_by_labels: bool = False,
) -> list[RankedRecommendation]:
    """Full pipeline: sequence -> embeddings -> context -> predictions -> ranking.

    ``bundle`` carries the trained models and the embedding provider (see
    skillrec.bundle.ModelBundle).
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    schedule = corpus.schedules[bundle.year]
    upto_lab = 0
    for i, wp in enumerate(schedule.lab_weeks(), start=1):
        if wp.week <= current_week:
            upto_lab = i
    seq = student_sequence(corpus, student_id, bundle.year, upto_lab)
    subs = [s for s in seq.submissions if s.correct] if correct_only else list(seq.submissions)
    if not subs:
        raise EmptyAfterScope(f"student {student_id!r} has no submissions at or before week {current_week}")

    candidates = homework_candidates(corpus, current_week if week_filter else None)

    if metric == "skills":
        embedded = list(zip(subs, bundle.provider.embed_many([s.source for s in subs])))
        ctx = summarize(embedded, strategy, current_lab=upto_lab)
        profile = predict_student_skills(bundle.skill_models, ctx)
        if rank_by_labels:
            cand_skills = [(p.problem_id, p.skills) for p in candidates]
        else:
            cand_skills = [
                (p.problem_id, predict_problem_skills(bundle.skill_models, p, bundle.provider))
                for p in candidates
            ]
        return rank(profile, cand_skills, k)

    model = bundle.time_model if metric == "solution-time" else bundle.correct_model
    if model is None:
        raise ValueError(f"bundle has no {metric} baseline model")
    cand_embs = [
        (p.problem_id, bundle.provider.embed_one(p.reference_solution)) for p in candidates
    ]
    return rank_baseline(metric, model, cand_embs, k)
