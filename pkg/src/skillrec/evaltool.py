"""Offline evaluation: skill-prediction accuracy and suitable-exercise rates.

Experiment 1 trains the eight classifiers on all offerings before the test
year and reports per-topic accuracy across the test year's labs (mean and
sample stdev).  Experiment 2 walks the test year lab by lab, retraining on
everything strictly before lab l, and measures the percentage of suitable
problems among each student's top-k recommendations for every ranking
metric and summarization strategy, next to an exact random baseline.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .bundle import derive_seed, train_bundle
from .context import ALL_STRATEGIES, summarize
from .domain import TOPICS, CourseSchedule, Problem, topics_introduced_between
from .errors import EmptyPool, InsufficientData
from .ingest import Corpus, correct_submissions, student_sequence
from .recommend import (
    METRICS,
    homework_candidates,
    predict_problem_skills,
    predict_student_skills,
    rank,
    rank_baseline,
)
from .skillnet import Hyperparams, balance_downsample, predict, train

SUITABILITY_MODES = ("strict", "loose")

RANDOM_METRIC = "random"


@dataclass(frozen=True)
class TemporalSplit:
    """Train on offerings before test_year; test the test year lab by lab."""

    test_year: int
    train_years: tuple[int, ...]
    test_labs: tuple[int, ...]

    @classmethod
    def build(cls, corpus: Corpus, test_year: int) -> "TemporalSplit":
        if test_year not in corpus.schedules:
            raise InsufficientData(f"no schedule for test year {test_year}")
        train_years = tuple(sorted(y for y in corpus.schedules if y < test_year))
        if not train_years:
            raise InsufficientData(f"no offering earlier than {test_year} to train on")
        n_labs = corpus.schedules[test_year].n_labs
        return cls(test_year, train_years, tuple(range(1, n_labs + 1)))


@dataclass
class Experiment1Result:
    method: str
    test_year: int
    labs: list[int]
    # topic value -> lab -> accuracy
    accuracies: dict[str, dict[int, float]]

    def topic_summary(self, topic_value: str) -> tuple[float, float]:
        series = [self.accuracies[topic_value][lab] for lab in self.labs]
        return _mean_stdev(series)

    def mean_row(self) -> tuple[float, float]:
        per_lab = [
            statistics.fmean(self.accuracies[t.value][lab] for t in TOPICS) for lab in self.labs
        ]
        return _mean_stdev(per_lab)

    def to_dict(self) -> dict:
        per_topic = {}
        for t in TOPICS:
            mean, stdev = self.topic_summary(t.value)
            per_topic[t.value] = {
                "per_lab": {lab: self.accuracies[t.value][lab] for lab in self.labs},
                "mean": mean,
                "stdev": stdev,
            }
        mean, stdev = self.mean_row()
        return {
            "method": self.method,
            "test_year": self.test_year,
            "labs": self.labs,
            "per_topic": per_topic,
            "mean_row": {"mean": mean, "stdev": stdev},
        }


@dataclass
class Experiment2Result:
    test_year: int
    k: int
    suitability: str
    labs: list[int]
    # metric -> strategy name -> lab -> percent
    series: dict[str, dict[str, dict[int, float]]]
    random: dict[int, float]
    hygiene_violations: int = 0

    def to_dict(self) -> dict:
        return {
            "test_year": self.test_year,
            "k": self.k,
            "suitability": self.suitability,
            "labs": self.labs,
            "series": self.series,
            "random": self.random,
            "hygiene_violations": self.hygiene_violations,
        }


@dataclass
class EvaluationReport:
    metadata: dict
    experiment1: Experiment1Result | None = None
    experiment2: Experiment2Result | None = None

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "experiment1": self.experiment1.to_dict() if self.experiment1 else None,
            "experiment2": self.experiment2.to_dict() if self.experiment2 else None,
        }


def _mean_stdev(series: Sequence[float]) -> tuple[float, float]:
    if not series:
        return 0.0, 0.0
    mean = statistics.fmean(series)
    stdev = statistics.stdev(series) if len(series) > 1 else 0.0
    return mean, stdev


def accuracy_experiment(
    corpus: Corpus,
    factory,
    hyper: Hyperparams,
    test_year: int,
    seed: int = 42,
) -> Experiment1Result:
    """Experiment 1: per-topic skill-prediction accuracy across test labs."""
    split = TemporalSplit.build(corpus, test_year)
    train_pairs = correct_submissions(corpus, test_year, 0)
    if not train_pairs:
        raise InsufficientData(f"no correct lab submissions before {test_year}")
    sources = [sub.source for sub, _ in train_pairs]
    provider = factory.fit(sources)
    embeddings = provider.embed_many(sources)

    models = {}
    for topic in TOPICS:
        examples = [(emb, int(skills[topic])) for emb, (_, skills) in zip(embeddings, train_pairs)]
        balanced = balance_downsample(examples, derive_seed(seed, f"exp1:balance:{topic.value}"))
        models[topic] = train(
            balanced,
            hyper.with_seed(derive_seed(seed, f"exp1:init:{topic.value}")),
            topic=topic,
            trained_upto=(test_year, 0),
        )

    by_lab: dict[int, list] = {}
    for sub in corpus.submissions():
        if (
            sub.offering_year == test_year
            and sub.correct
            and corpus.problems[sub.problem_id].role == "lab"
        ):
            by_lab.setdefault(sub.lab_index, []).append(sub)

    labs = [lab for lab in split.test_labs if by_lab.get(lab)]
    if not labs:
        raise InsufficientData(f"no correct lab submissions in test year {test_year}")

    accuracies: dict[str, dict[int, float]] = {t.value: {} for t in TOPICS}
    for lab in labs:
        subs = by_lab[lab]
        embs = provider.embed_many([s.source for s in subs])
        for topic in TOPICS:
            hits = 0
            for sub, emb in zip(subs, embs):
                truth = int(corpus.problems[sub.problem_id].skills[topic])
                if predict(models[topic], emb)[0] == truth:
                    hits += 1
            accuracies[topic.value][lab] = hits / len(subs)

    return Experiment1Result(provider.tag, test_year, labs, accuracies)


def is_suitable(
    problem: Problem,
    schedule: CourseSchedule,
    last_submission_week: int,
    current_week: int,
    mode: str = "strict",
) -> bool:
    """Does the problem fit the window between the last submission and now?

    Required topics must all be introduced by current_week (clause a); in
    strict mode at least one required topic must come from the interval
    (last_submission_week, current_week] whenever that interval introduced
    anything (clause b), so long-mastered problems no longer qualify.
    """
    if mode not in SUITABILITY_MODES:
        raise ValueError(f"mode must be one of {SUITABILITY_MODES}")
    if last_submission_week > current_week:
        raise ValueError("last_submission_week must be <= current_week")
    interval = topics_introduced_between(schedule, last_submission_week, current_week)
    known = topics_introduced_between(schedule, 0, last_submission_week)
    required = problem.skills.required_topics()
    if not required <= (known | interval):
        return False
    if mode == "strict" and interval and not (required & interval):
        return False
    return True


def random_baseline(suitable_flags: Sequence[bool], k: int) -> float:
    """Expected suitable percentage of a uniform random k-subset: exactly the
    pool share, by linearity of expectation (k does not enter)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not suitable_flags:
        raise EmptyPool("no candidates to draw from")
    return 100.0 * sum(bool(f) for f in suitable_flags) / len(suitable_flags)


def suitability_experiment(
    corpus: Corpus,
    factory,
    hyper: Hyperparams,
    test_year: int,
    k: int,
    seed: int = 42,
    suitability: str = "strict",
    week_filter: bool = False,
    context_correct_only: bool = False,
) -> Experiment2Result:
    """Experiment 2: suitable-percentage series per (metric x strategy) + random.

    For test lab l, models and vocabulary see only data before lab l and the
    student context stops at lab l-1; the recommendation targets the week of
    lab l.  Labs where no student has prior-lab context are omitted.
    """
    split = TemporalSplit.build(corpus, test_year)
    schedule = corpus.schedules[test_year]
    students = corpus.students(test_year)

    series: dict[str, dict[str, dict[int, float]]] = {
        metric: {s.name: {} for s in ALL_STRATEGIES} for metric in METRICS
    }
    random_series: dict[int, float] = {}
    labs_evaluated: list[int] = []
    violations = 0

    for lab in split.test_labs:
        per_student_subs = {}
        for student in students:
            seq = student_sequence(corpus, student, test_year, lab - 1)
            subs = [s for s in seq.submissions if s.correct or not context_correct_only]
            if subs:
                per_student_subs[student] = subs
        if not per_student_subs:
            continue

        bundle = train_bundle(
            corpus,
            factory,
            hyper,
            test_year,
            lab - 1,
            with_baselines=True,
            seed=derive_seed(seed, f"exp2:lab:{lab}"),
        )
        violations += len(bundle.hygiene_violations(test_year, lab))
        violations += sum(
            1
            for subs in per_student_subs.values()
            for s in subs
            if s.lab_index >= lab
        )

        current_week = schedule.week_of_lab(lab)
        candidates = homework_candidates(corpus, current_week if week_filter else None)
        if not candidates:
            raise EmptyPool(f"no homework candidates at lab {lab}")

        cand_skills = [
            (p.problem_id, predict_problem_skills(bundle.skill_models, p, bundle.provider))
            for p in candidates
        ]
        cand_embs = [
            (p.problem_id, bundle.provider.embed_one(p.reference_solution)) for p in candidates
        ]
        time_top = rank_baseline("solution-time", bundle.time_model, cand_embs, k)
        correct_top = rank_baseline("correctness", bundle.correct_model, cand_embs, k)

        sums: dict[tuple[str, str], float] = {
            (m, s.name): 0.0 for m in METRICS for s in ALL_STRATEGIES
        }
        random_sum = 0.0
        for student in sorted(per_student_subs):
            subs = per_student_subs[student]
            last_week = schedule.week_of_lab(max(s.lab_index for s in subs))
            flags = {
                p.problem_id: is_suitable(p, schedule, last_week, current_week, suitability)
                for p in candidates
            }
            random_sum += random_baseline([flags[p.problem_id] for p in candidates], k)

            embedded = list(zip(subs, bundle.provider.embed_many([s.source for s in subs])))
            for strategy in ALL_STRATEGIES:
                ctx = summarize(embedded, strategy, current_lab=lab - 1)
                profile = predict_student_skills(bundle.skill_models, ctx)
                recs = rank(profile, cand_skills, k)
                pct = 100.0 * sum(flags[r.problem_id] for r in recs) / len(recs)
                sums[("skills", strategy.name)] += pct
            time_pct = 100.0 * sum(flags[r.problem_id] for r in time_top) / len(time_top)
            correct_pct = 100.0 * sum(flags[r.problem_id] for r in correct_top) / len(correct_top)
            for strategy in ALL_STRATEGIES:
                sums[("solution-time", strategy.name)] += time_pct
                sums[("correctness", strategy.name)] += correct_pct

        n = len(per_student_subs)
        for (metric, strategy_name), total in sums.items():
            series[metric][strategy_name][lab] = total / n
        random_series[lab] = random_sum / n
        labs_evaluated.append(lab)

    if not labs_evaluated:
        raise InsufficientData(f"no evaluable lab in test year {test_year}")

    return Experiment2Result(
        test_year=test_year,
        k=k,
        suitability=suitability,
        labs=labs_evaluated,
        series=series,
        random=random_series,
        hygiene_violations=violations,
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def emit_report(report: EvaluationReport, out_dir: str | Path) -> list[Path]:
    """Write experiment1.csv / experiment2.csv / report.json; byte-deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if report.experiment1 is not None:
        r1 = report.experiment1
        lines = ["topic,method,mean,stdev"]
        for t in TOPICS:
            mean, stdev = r1.topic_summary(t.value)
            lines.append(f"{t.value},{r1.method},{mean:.4f},{stdev:.4f}")
        mean, stdev = r1.mean_row()
        lines.append(f"mean,{r1.method},{mean:.4f},{stdev:.4f}")
        path = out / "experiment1.csv"
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        written.append(path)

    if report.experiment2 is not None:
        r2 = report.experiment2
        lines = ["lab,metric,strategy,percent"]
        for lab in r2.labs:
            for metric in METRICS:
                for strategy in ALL_STRATEGIES:
                    pct = r2.series[metric][strategy.name][lab]
                    lines.append(f"{lab},{metric},{strategy.name},{pct:.4f}")
            lines.append(f"{lab},{RANDOM_METRIC},none,{r2.random[lab]:.4f}")
        path = out / "experiment2.csv"
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        written.append(path)

    path = out / "report.json"
    path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(path)
    return written
