import math
from collections import Counter

import numpy as np
import pytest

from skillrec.embed import Embedding
from skillrec.errors import DimMismatch, EmptyInput, NonFiniteLoss
from skillrec.skillnet import (
    BaselineModel,
    Hyperparams,
    SkillModel,
    accuracy,
    balance_downsample,
    gradient_check,
    load_model,
    predict,
    predict_baseline,
    save_model,
    train,
    train_baseline,
)
from skillrec.domain import SkillTopic


def _emb(values, tag="t", d=[0]):
    d[0] += 1
    return Embedding(np.asarray(values, float), len(values), tag, f"x{d[0]}")


def _separable_clusters(scale=10.0, n=20, seed=5):
    rng = np.random.default_rng(seed)
    pos = [(_emb(rng.normal([scale, scale], 0.5)), 3) for _ in range(n)]
    neg = [(_emb(rng.normal([-scale, -scale], 0.5)), 0) for _ in range(n)]
    return pos + neg


def test_hyperparams_defaults_and_validation():
    h = Hyperparams()
    assert (h.hidden_units, h.epochs, h.learning_rate, h.l2_lambda) == (100, 200, 0.001, 0.1)
    for bad in (
        dict(hidden_units=0),
        dict(epochs=0),
        dict(learning_rate=0.0),
        dict(l2_lambda=0.0),
        dict(seed=-1),
    ):
        with pytest.raises(ValueError):
            Hyperparams(**bad)


def test_balance_downsample_counts():
    rng = np.random.default_rng(0)
    examples = []
    for label, count in ((0, 50), (1, 10), (2, 20), (3, 15)):
        examples += [(_emb(rng.normal(size=3)), label) for _ in range(count)]
    balanced = balance_downsample(examples, seed=9)
    assert Counter(label for _, label in balanced) == {0: 10, 1: 10, 2: 10, 3: 10}


def test_balance_downsample_already_balanced_and_subset():
    rng = np.random.default_rng(1)
    examples = [(_emb(rng.normal(size=3)), label) for label in (0, 1) for _ in range(5)]
    balanced = balance_downsample(examples, seed=3)
    assert len(balanced) == 10
    ids = {id(e) for e, _ in examples}
    assert all(id(e) in ids for e, _ in balanced)  # never invents examples


def test_balance_downsample_single_class_and_determinism():
    examples = [(_emb([float(i)]), 2) for i in range(7)]
    balanced = balance_downsample(examples, seed=4)
    assert len(balanced) == 7
    again = balance_downsample(examples, seed=4)
    assert [id(e) for e, _ in balanced] == [id(e) for e, _ in again]
    with pytest.raises(EmptyInput):
        balance_downsample([], seed=1)


def test_train_separable_clusters_reaches_full_accuracy():
    examples = _separable_clusters()
    # independent oracle: a linear classifier separates the two clusters
    from sklearn.linear_model import LogisticRegression

    X = np.stack([e.values for e, _ in examples])
    y = [label for _, label in examples]
    assert LogisticRegression().fit(X, y).score(X, y) == 1.0

    model = train(examples, Hyperparams(seed=11))
    assert accuracy(model, examples) == 1.0


def test_train_is_deterministic():
    examples = _separable_clusters(seed=6)
    m1 = train(examples, Hyperparams(seed=21))
    m2 = train(examples, Hyperparams(seed=21))
    for a, b in zip((m1.w1, m1.b1, m1.w2, m1.b2), (m2.w1, m2.b1, m2.w2, m2.b2)):
        assert np.array_equal(a, b)
    m3 = train(examples, Hyperparams(seed=22))
    assert not np.array_equal(m1.w1, m3.w1)


def test_train_identical_inputs_predicts_majority():
    x = _emb(np.ones(4) * 8.0)
    examples = [(x, 0)] * 6 + [(x, 3)] * 4
    model = train(examples, Hyperparams(seed=2))
    assert predict(model, x)[0] == 0
    assert accuracy(model, examples) == pytest.approx(0.6)


def test_train_loss_non_increasing_on_fixture():
    model = train(_separable_clusters(seed=8), Hyperparams(seed=1))
    hist = model.loss_history
    assert len(hist) == 200
    assert all(a >= b - 1e-12 for a, b in zip(hist, hist[1:]))


def test_train_input_validation():
    with pytest.raises(EmptyInput):
        train([], Hyperparams())
    with pytest.raises(ValueError):
        train([(_emb([1.0]), 7)], Hyperparams())
    with pytest.raises(DimMismatch):
        train([(_emb([1.0, 2.0]), 1), (_emb([1.0]), 2)], Hyperparams())


def test_train_single_class_warns():
    examples = [(_emb([float(i), 1.0]), 2) for i in range(5)]
    with pytest.warns(UserWarning, match="degenerate"):
        train(examples, Hyperparams(seed=3))


def test_non_finite_loss_reports_epoch():
    examples = [(_emb(np.ones(4) * 50.0), 3600.0) for _ in range(10)]
    with pytest.raises(NonFiniteLoss) as exc:
        train_baseline(examples, "solution-time", Hyperparams(seed=3, learning_rate=1e6))
    assert exc.value.epoch >= 1


def _zero_skill_model(dim=4, hidden=3):
    return SkillModel(
        topic=None,
        input_dim=dim,
        w1=np.zeros((dim, hidden)),
        b1=np.zeros(hidden),
        w2=np.zeros((hidden, 4)),
        b2=np.zeros(4),
        hyper=Hyperparams(),
    )


def test_predict_zero_model_uniform_and_tiebreak():
    model = _zero_skill_model()
    cls, probs = predict(model, _emb([1.0, 2.0, 3.0, 4.0]))
    assert cls == 0
    assert np.allclose(probs, 0.25)


def test_predict_probabilities_are_distribution():
    model = train(_separable_clusters(seed=9), Hyperparams(seed=5))
    rng = np.random.default_rng(17)
    for _ in range(25):
        _, probs = predict(model, _emb(rng.normal(0, 20, 2)))
        assert np.all(probs >= 0)
        assert abs(float(probs.sum()) - 1.0) < 1e-9


def test_logit_shift_leaves_argmax_unchanged():
    model = train(_separable_clusters(seed=10), Hyperparams(seed=6))
    shifted = SkillModel(
        topic=model.topic,
        input_dim=model.input_dim,
        w1=model.w1,
        b1=model.b1,
        w2=model.w2,
        b2=model.b2 + 13.5,
        hyper=model.hyper,
    )
    rng = np.random.default_rng(18)
    for _ in range(25):
        x = _emb(rng.normal(0, 20, 2))
        assert predict(model, x)[0] == predict(shifted, x)[0]


def test_predict_dim_mismatch():
    model = _zero_skill_model(dim=4)
    with pytest.raises(DimMismatch):
        predict(model, _emb([1.0, 2.0]))


def test_baseline_constant_target_regression():
    x = np.ones(4) * 6.0
    examples = [(_emb(x), 60.0) for _ in range(20)]
    model = train_baseline(examples, "solution-time", Hyperparams(seed=3))
    pred = predict_baseline(model, examples[0][0])
    assert abs(pred - math.log(61.0)) < 1e-2
    hist = model.loss_history
    assert all(a >= b - 1e-12 for a, b in zip(hist, hist[1:]))


def test_baseline_correctness_separable():
    rng = np.random.default_rng(4)
    pos = [(_emb(rng.normal([8, 8], 0.5)), True) for _ in range(15)]
    neg = [(_emb(rng.normal([-8, -8], 0.5)), False) for _ in range(15)]
    model = train_baseline(pos + neg, "correctness", Hyperparams(seed=5))
    for e, _ in pos:
        assert predict_baseline(model, e) > 0.5
    for e, _ in neg:
        assert predict_baseline(model, e) < 0.5
    for e, _ in pos + neg:
        assert 0.0 < predict_baseline(model, e) < 1.0


def test_baseline_validation():
    with pytest.raises(EmptyInput):
        train_baseline([], "solution-time", Hyperparams())
    with pytest.raises(ValueError):
        train_baseline([(_emb([1.0]), 1.0)], "difficulty", Hyperparams())
    with pytest.raises(ValueError):
        train_baseline([(_emb([1.0]), -5.0)], "solution-time", Hyperparams())


def test_gradient_check_random_instances():
    rng = np.random.default_rng(0)
    worst = 0.0
    for seed in range(3):
        r = np.random.default_rng(seed)
        examples = [(_emb(r.normal(0, 3, 6)), int(r.integers(0, 4))) for _ in range(5)]
        model = train(examples, Hyperparams(hidden_units=8, epochs=5, seed=seed))
        worst = max(worst, gradient_check(model, examples, epsilon=1e-5))
    assert worst < 1e-4


def test_gradient_check_penalty_only_is_exact():
    r = np.random.default_rng(9)
    examples = [(_emb(r.normal(0, 3, 6)), int(r.integers(0, 4))) for _ in range(5)]
    model = train(examples, Hyperparams(hidden_units=8, epochs=5, seed=1))
    # quadratic penalty: central differences are exact, larger eps kills rounding
    assert gradient_check(model, [], epsilon=0.5) < 1e-10


def test_gradient_check_large_epsilon_documents_sensitivity():
    r = np.random.default_rng(3)
    examples = [(_emb(r.normal(0, 3, 6)), int(r.integers(0, 4))) for _ in range(5)]
    model = train(examples, Hyperparams(hidden_units=8, epochs=5, seed=2))
    assert gradient_check(model, examples, epsilon=0.1) > 1e-4


def test_model_save_load_round_trip(tmp_path):
    examples = _separable_clusters(seed=12, n=5)
    model = train(examples, Hyperparams(seed=7), topic=SkillTopic.ARRAY, trained_upto=(2025, 2))
    path = tmp_path / "m.json"
    save_model(model, path)
    loaded = load_model(path)
    assert isinstance(loaded, SkillModel)
    assert loaded.topic is SkillTopic.ARRAY
    assert loaded.trained_upto == (2025, 2)
    for a, b in zip((model.w1, model.b1, model.w2, model.b2), (loaded.w1, loaded.b1, loaded.w2, loaded.b2)):
        assert np.array_equal(a, b)
    x = examples[0][0]
    assert predict(model, x) == (predict(loaded, x)[0], pytest.approx(predict(loaded, x)[1]))

    base = train_baseline([(e, 30.0) for e, _ in examples], "solution-time", Hyperparams(seed=8))
    save_model(base, tmp_path / "b.json")
    loaded_base = load_model(tmp_path / "b.json")
    assert isinstance(loaded_base, BaselineModel)
    assert loaded_base.kind == "solution-time"
    assert predict_baseline(base, x) == predict_baseline(loaded_base, x)
