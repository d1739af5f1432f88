"""Command-line entry point: ingest / train / recommend / evaluate / serve.

Thin wrappers over the library; ``serve`` boots the FastAPI app.  Exit codes:
1 usage error, 2 corpus validation failure, 3 insufficient data,
4 unknown student, 5 student has no submissions in scope.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bundle as bundle_mod
from .config import Config, build_config
from .context import STRATEGY_NAMES, SummarizationStrategy
from .errors import (
    DanglingReference,
    EmptyAfterScope,
    EmptyCorpus,
    EmptyInput,
    EmptyPool,
    InsufficientData,
    MissingFile,
    OrderViolation,
    SchemaViolation,
    UnknownStudent,
)
from .evaltool import (
    EvaluationReport,
    SUITABILITY_MODES,
    accuracy_experiment,
    emit_report,
    suitability_experiment,
)
from .ingest import correct_submissions, load_corpus
from .recommend import METRICS, recommend_for_student
from .service import ServiceState, create_app, render_recommendations
from .skillnet import accuracy as model_accuracy

_VALIDATION_ERRORS = (MissingFile, SchemaViolation, DanglingReference, OrderViolation)
_DATA_ERRORS = (InsufficientData, EmptyCorpus, EmptyInput, EmptyPool)


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags win")
    parser.add_argument("--corpus", help="corpus root directory")
    parser.add_argument("--provider", help="tfidf | precomputed:<file> | remote:<url>")
    parser.add_argument("--dim", type=int, help="embedding dimension (default 768)")
    parser.add_argument("--seed", type=int, help="master seed (default 42)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--learning-rate", type=float, dest="learning_rate")
    parser.add_argument("--l2-lambda", type=float, dest="l2_lambda")
    parser.add_argument("--hidden-units", type=int, dest="hidden_units")


_CONFIG_KEYS = (
    "corpus",
    "provider",
    "dim",
    "seed",
    "out",
    "epochs",
    "learning_rate",
    "l2_lambda",
    "hidden_units",
    "strategy",
    "metric",
    "k",
    "suitability",
    "week_filter",
    "context_correct_only",
    "rank_by_labels",
)


def _config_from_args(args: argparse.Namespace) -> Config:
    overrides = {
        key: getattr(args, key) for key in _CONFIG_KEYS if getattr(args, key, None) is not None
    }
    return build_config(getattr(args, "config", None), overrides)


def _announce(cfg: Config) -> None:
    print(f"[skillrec] seed={cfg.seed} config_digest={cfg.digest()}", file=sys.stderr)


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _announce(cfg)
    corpus = load_corpus(cfg.corpus)
    students = len(corpus.sequences)
    print(f"{corpus.n_submissions} submissions, {students} students, {len(corpus.problems)} problems")
    for year in sorted(corpus.schedules):
        n_subs = sum(len(seq) for (y, _), seq in corpus.sequences.items() if y == year)
        print(f"  {year}: {corpus.schedules[year].n_labs} labs, {n_subs} submissions")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _announce(cfg)
    corpus = load_corpus(cfg.corpus)
    trained = bundle_mod.train_bundle(
        corpus,
        cfg.provider_factory(),
        cfg.hyper(),
        year=args.year,
        upto_lab=args.lab,
        with_baselines=args.with_baselines,
        seed=cfg.seed,
        config_digest=cfg.digest(),
        provider_spec=cfg.provider,
    )
    out_dir = Path(cfg.out) / f"bundle-y{args.year}-lab{args.lab}"
    bundle_mod.save_bundle(trained, out_dir)
    pairs = correct_submissions(corpus, args.year, args.lab)
    embs = trained.provider.embed_many([sub.source for sub, _ in pairs])
    for topic, model in trained.skill_models.items():
        examples = [(emb, int(skills[topic])) for emb, (_, skills) in zip(embs, pairs)]
        print(f"{topic.value}: training accuracy {model_accuracy(model, examples):.4f}")
    print(f"bundle written to {out_dir}")
    return 0


def cmd_recommend(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _announce(cfg)
    if cfg.k < 1:
        raise UsageError("--k must be >= 1")
    if cfg.strategy not in STRATEGY_NAMES:
        raise UsageError(f"--strategy must be one of {STRATEGY_NAMES}")
    if cfg.metric not in METRICS:
        raise UsageError(f"--metric must be one of {METRICS}")
    corpus = load_corpus(cfg.corpus)
    loaded = bundle_mod.load_bundle(args.bundle)
    recs = recommend_for_student(
        corpus,
        loaded,
        student_id=args.student,
        current_week=args.week,
        strategy=SummarizationStrategy.parse(cfg.strategy),
        metric=cfg.metric,
        k=cfg.k,
        week_filter=cfg.week_filter,
        correct_only=cfg.context_correct_only,
        rank_by_labels=cfg.rank_by_labels,
    )
    sys.stdout.write(render_recommendations(recs))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _announce(cfg)
    corpus = load_corpus(cfg.corpus)
    factory = cfg.provider_factory()
    metadata = {
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "test_year": args.test_year,
        "k": cfg.k,
        "suitability": cfg.suitability,
        "provider": cfg.provider,
    }
    report = EvaluationReport(metadata=metadata)
    if args.experiment in ("1", "both"):
        report.experiment1 = accuracy_experiment(
            corpus, factory, cfg.hyper(), args.test_year, seed=cfg.seed
        )
        mean, stdev = report.experiment1.mean_row()
        print(f"experiment 1 ({report.experiment1.method}): mean accuracy {mean:.4f} +/- {stdev:.4f}")
    if args.experiment in ("2", "both"):
        report.experiment2 = suitability_experiment(
            corpus,
            factory,
            cfg.hyper(),
            args.test_year,
            cfg.k,
            seed=cfg.seed,
            suitability=cfg.suitability,
            week_filter=False,
            context_correct_only=cfg.context_correct_only,
        )
        r2 = report.experiment2
        for metric in METRICS:
            for strategy in STRATEGY_NAMES:
                points = r2.series[metric][strategy]
                mean = sum(points.values()) / len(points)
                print(f"experiment 2: {metric}/{strategy}: mean suitable {mean:.2f}%")
        mean_random = sum(r2.random.values()) / len(r2.random)
        print(f"experiment 2: random baseline: mean suitable {mean_random:.2f}%")
        print(f"experiment 2: hygiene violations: {r2.hygiene_violations}")
    written = emit_report(report, cfg.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    cfg = _config_from_args(args)
    _announce(cfg)
    corpus = load_corpus(cfg.corpus)
    loaded = bundle_mod.load_bundle(args.bundle)
    state = ServiceState(
        corpus=corpus,
        bundle=loaded,
        default_k=cfg.k,
        default_strategy=cfg.strategy,
        default_metric=cfg.metric,
        week_filter=cfg.week_filter,
        context_correct_only=cfg.context_correct_only,
    )
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


class UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="skillrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a corpus and print counts")
    _common_flags(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_train = sub.add_parser("train", help="train a model bundle up to --year/--lab")
    _common_flags(p_train)
    p_train.add_argument("--year", type=int, required=True)
    p_train.add_argument("--lab", type=int, required=True)
    p_train.add_argument("--with-baselines", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_rec = sub.add_parser("recommend", help="rank homework for one student")
    _common_flags(p_rec)
    p_rec.add_argument("--student", required=True)
    p_rec.add_argument("--week", type=int, required=True)
    p_rec.add_argument("--bundle", required=True, help="trained bundle directory")
    p_rec.add_argument("--k", type=int)
    p_rec.add_argument("--strategy", choices=STRATEGY_NAMES)
    p_rec.add_argument("--metric", choices=METRICS)
    p_rec.add_argument("--rank-by-labels", action="store_true", dest="rank_by_labels", default=None)
    p_rec.add_argument(
        "--no-week-filter",
        action="store_false",
        dest="week_filter",
        default=None,
        help="offer the whole homework pool regardless of the current week",
    )
    p_rec.add_argument(
        "--context-correct-only", action="store_true", dest="context_correct_only", default=None
    )
    p_rec.set_defaults(func=cmd_recommend)

    p_eval = sub.add_parser("evaluate", help="run the offline experiments")
    _common_flags(p_eval)
    p_eval.add_argument("--test-year", type=int, required=True, dest="test_year")
    p_eval.add_argument("--k", type=int)
    p_eval.add_argument("--suitability", choices=SUITABILITY_MODES)
    p_eval.add_argument("--experiment", choices=("1", "2", "both"), default="both")
    p_eval.add_argument(
        "--context-correct-only", action="store_true", dest="context_correct_only", default=None
    )
    p_eval.set_defaults(func=cmd_evaluate)

    p_serve = sub.add_parser("serve", help="serve recommendations over HTTP")
    _common_flags(p_serve)
    p_serve.add_argument("--bundle", required=True)
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--k", type=int)
    p_serve.add_argument("--strategy", choices=STRATEGY_NAMES)
    p_serve.add_argument("--metric", choices=METRICS)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"skillrec: error: {e}", file=sys.stderr)
        return 1
    except _VALIDATION_ERRORS as e:
        print(f"skillrec: corpus validation failed: {e}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as e:
        print(f"skillrec: insufficient data: {e}", file=sys.stderr)
        return 3
    except UnknownStudent as e:
        print(f"skillrec: {e}", file=sys.stderr)
        return 4
    except EmptyAfterScope as e:
        print(f"skillrec: {e}", file=sys.stderr)
        return 5
    except (ValueError, OSError) as e:
        print(f"skillrec: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
