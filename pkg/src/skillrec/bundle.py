"""Trained-model bundles: the eight topic classifiers plus optional baselines,
their embedding provider, and provenance of every training example.

On disk a bundle is a directory with one ``model-*.json`` file per model, a
``manifest.json`` (year/lab, seed, config digest, provider description,
provenance) and, for the TF-IDF provider, the fitted ``vocabulary.json``.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .domain import TOPICS, SkillTopic
from .embed import (
    PrecomputedProvider,
    RemoteProvider,
    TfIdfProvider,
    TfIdfVocabulary,
)
from .errors import InsufficientData
from .ingest import Corpus, correct_submissions
from .skillnet import (
    BaselineModel,
    Hyperparams,
    SkillModel,
    balance_downsample,
    load_model,
    save_model,
    train,
    train_baseline,
)


def derive_seed(master: int, label: str) -> int:
    """Stable per-purpose sub-seed; independent of call order and platform."""
    digest = hashlib.sha256(f"{master}:{label}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class ModelBundle:
    year: int
    lab: int
    provider: object
    skill_models: dict[SkillTopic, SkillModel]
    time_model: BaselineModel | None = None
    correct_model: BaselineModel | None = None
    seed: int = 42
    config_digest: str = ""
    provider_spec: str = "tfidf"
    # (offering_year, lab_index) pairs every training example came from.
    provenance: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def hygiene_violations(self, test_year: int, test_lab: int) -> list[tuple[int, int]]:
        """Provenance entries that would leak test data into lab ``test_lab``."""
        return [
            (y, l)
            for (y, l) in self.provenance
            if y == test_year and l >= test_lab or y > test_year
        ]


def train_bundle(
    corpus: Corpus,
    factory,
    hyper: Hyperparams,
    year: int,
    upto_lab: int,
    with_baselines: bool = False,
    seed: int = 42,
    config_digest: str = "",
    provider_spec: str = "tfidf",
) -> ModelBundle:
    """Train the eight skill models (plus baselines) on data up to (year, upto_lab).

    The embedding provider is fitted on the correct lab submissions of the
    training window only; baselines additionally embed incorrect submissions
    with it, which adds no fitting.
    """
    pairs = correct_submissions(corpus, year, upto_lab)
    if not pairs:
        raise InsufficientData(f"no correct lab submissions up to ({year}, lab {upto_lab})")
    sources = [sub.source for sub, _ in pairs]
    provider = factory.fit(sources)
    embeddings = provider.embed_many(sources)

    provenance = {(sub.offering_year, sub.lab_index) for sub, _ in pairs}

    skill_models: dict[SkillTopic, SkillModel] = {}
    for topic in TOPICS:
        examples = [(emb, int(skills[topic])) for emb, (_, skills) in zip(embeddings, pairs)]
        balanced = balance_downsample(
            examples, derive_seed(seed, f"balance:{topic.value}:{year}:{upto_lab}")
        )
        model_hyper = hyper.with_seed(derive_seed(seed, f"init:{topic.value}:{year}:{upto_lab}"))
        skill_models[topic] = train(
            balanced, model_hyper, topic=topic, trained_upto=(year, upto_lab)
        )

    time_model = correct_model = None
    if with_baselines:
        timed = [
            (emb, sub.solution_time_s)
            for emb, (sub, _) in zip(embeddings, pairs)
            if sub.solution_time_s is not None
        ]
        if not timed:
            raise InsufficientData("no solution-time examples in the training window")
        time_model = train_baseline(
            timed,
            "solution-time",
            hyper.with_seed(derive_seed(seed, f"init:time:{year}:{upto_lab}")),
            trained_upto=(year, upto_lab),
        )

        all_lab_subs = [
            sub
            for sub in corpus.submissions()
            if corpus.problems[sub.problem_id].role == "lab"
            and (
                sub.offering_year < year
                or (sub.offering_year == year and sub.lab_index <= upto_lab)
            )
        ]
        correctness_examples = [
            (provider.embed_one(sub.source), 1.0 if sub.correct else 0.0)
            for sub in all_lab_subs
        ]
        provenance.update((s.offering_year, s.lab_index) for s in all_lab_subs)
        with warnings.catch_warnings():
            # Single-class correctness data is expected on all-correct fixtures.
            warnings.simplefilter("ignore")
            correct_model = train_baseline(
                correctness_examples,
                "correctness",
                hyper.with_seed(derive_seed(seed, f"init:correct:{year}:{upto_lab}")),
                trained_upto=(year, upto_lab),
            )

    return ModelBundle(
        year=year,
        lab=upto_lab,
        provider=provider,
        skill_models=skill_models,
        time_model=time_model,
        correct_model=correct_model,
        seed=seed,
        config_digest=config_digest,
        provider_spec=provider_spec,
        provenance=tuple(sorted(provenance)),
    )


def save_bundle(bundle: ModelBundle, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for topic, model in bundle.skill_models.items():
        save_model(model, directory / f"model-{topic.value}.json")
    if bundle.time_model is not None:
        save_model(bundle.time_model, directory / "model-time.json")
    if bundle.correct_model is not None:
        save_model(bundle.correct_model, directory / "model-correct.json")
    if isinstance(bundle.provider, TfIdfProvider):
        (directory / "vocabulary.json").write_text(bundle.provider.vocab.to_json(), encoding="utf-8")
    manifest = {
        "year": bundle.year,
        "lab": bundle.lab,
        "seed": bundle.seed,
        "config_digest": bundle.config_digest,
        "provider": bundle.provider_spec,
        "dim": bundle.provider.dim,
        "with_baselines": bundle.time_model is not None,
        "provenance": [list(p) for p in bundle.provenance],
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return directory


def load_bundle(directory: str | Path, provider=None) -> ModelBundle:
    """Reload a bundle; ``provider`` overrides the manifest's provider spec."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if provider is None:
        provider = _provider_from_spec(manifest["provider"], manifest["dim"], directory)
    skill_models: dict[SkillTopic, SkillModel] = {}
    for topic in TOPICS:
        model = load_model(directory / f"model-{topic.value}.json")
        assert isinstance(model, SkillModel)
        skill_models[topic] = model
    time_model = correct_model = None
    if (directory / "model-time.json").exists():
        time_model = load_model(directory / "model-time.json")
    if (directory / "model-correct.json").exists():
        correct_model = load_model(directory / "model-correct.json")
    return ModelBundle(
        year=manifest["year"],
        lab=manifest["lab"],
        provider=provider,
        skill_models=skill_models,
        time_model=time_model,
        correct_model=correct_model,
        seed=manifest["seed"],
        config_digest=manifest["config_digest"],
        provider_spec=manifest["provider"],
        provenance=tuple(tuple(p) for p in manifest["provenance"]),
    )


def _provider_from_spec(spec: str, dim: int, bundle_dir: Path):
    if spec == "tfidf":
        vocab_path = bundle_dir / "vocabulary.json"
        vocab = TfIdfVocabulary.from_json(vocab_path.read_text(encoding="utf-8"))
        return TfIdfProvider(vocab)
    if spec.startswith("precomputed:"):
        return PrecomputedProvider.from_file(spec.split(":", 1)[1], dim)
    if spec.startswith("remote:"):
        return RemoteProvider(spec.split(":", 1)[1], dim)
    raise ValueError(f"unknown provider spec {spec!r}")
