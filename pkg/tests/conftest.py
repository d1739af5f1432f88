import warnings

import pytest

from helpers import build_exp1_corpus, build_exp2_corpus, build_demo_corpus

from skillrec.embed import PrecomputedProvider, StaticProviderFactory
from skillrec.ingest import load_corpus


@pytest.fixture(scope="session")
def demo_root(tmp_path_factory):
    return build_demo_corpus(tmp_path_factory.mktemp("demo") / "corpus")


@pytest.fixture(scope="session")
def demo_corpus(demo_root):
    return load_corpus(demo_root)


@pytest.fixture(scope="session")
def demo_two_years_root(tmp_path_factory):
    return build_demo_corpus(tmp_path_factory.mktemp("demo2y") / "corpus", years=(2024, 2025))


@pytest.fixture(scope="session")
def exp1_noise(tmp_path_factory):
    root, emb = build_exp1_corpus(tmp_path_factory.mktemp("exp1") / "corpus")
    return load_corpus(root), StaticProviderFactory(PrecomputedProvider.from_file(emb, 8)), root, emb


@pytest.fixture(scope="session")
def exp1_random(tmp_path_factory):
    root, emb = build_exp1_corpus(tmp_path_factory.mktemp("exp1r") / "corpus", random_labels=True)
    return load_corpus(root), StaticProviderFactory(PrecomputedProvider.from_file(emb, 8)), root, emb


@pytest.fixture(scope="session")
def exp2_oracle(tmp_path_factory):
    root, emb = build_exp2_corpus(tmp_path_factory.mktemp("exp2") / "corpus")
    return load_corpus(root), StaticProviderFactory(PrecomputedProvider.from_file(emb, 8)), root, emb


@pytest.fixture()
def quiet_degenerate_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="degenerate training data")
        yield
