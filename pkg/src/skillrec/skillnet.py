"""From-scratch single-hidden-layer MLPs trained by full-batch gradient descent.

Architecture: input -> hidden (ReLU) -> output.  The multiclass skill model
has 4 softmax outputs (levels 0..3); baselines have one output (linear for
solution time, trained on ln(1+seconds); sigmoid for correctness).  The loss
is the mean data term plus (lambda/2)*||weights||^2 with biases excluded, so
the penalty gradient is exactly lambda*w.  Training runs exactly ``epochs``
steps and is fully determined by (examples order, hyperparameters).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import SkillTopic
from .embed import Embedding
from .errors import DimMismatch, EmptyInput, NonFiniteLoss

N_CLASSES = 4

BASELINE_KINDS = ("solution-time", "correctness")


@dataclass(frozen=True)
class Hyperparams:
    hidden_units: int = 100
    epochs: int = 200
    learning_rate: float = 0.001
    l2_lambda: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_lambda <= 0:
            raise ValueError("l2_lambda must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_mapping(self) -> dict:
        return {
            "hidden_units": self.hidden_units,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2_lambda": self.l2_lambda,
            "seed": self.seed,
        }

    def with_seed(self, seed: int) -> "Hyperparams":
        return replace(self, seed=seed)


@dataclass
class SkillModel:
    """Multiclass classifier for one topic's level (0..3)."""

    topic: SkillTopic | None
    input_dim: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    hyper: Hyperparams
    trained_upto: tuple[int, int] | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)


@dataclass
class BaselineModel:
    """Single-output predictor: solution time (regression) or correctness."""

    kind: str
    input_dim: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    hyper: Hyperparams
    trained_upto: tuple[int, int] | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)


def _init_weights(input_dim: int, hidden: int, out: int, seed: int):
    rng = np.random.default_rng(seed)
    lim1 = math.sqrt(6.0 / (input_dim + hidden))
    lim2 = math.sqrt(6.0 / (hidden + out))
    w1 = rng.uniform(-lim1, lim1, size=(input_dim, hidden))
    w2 = rng.uniform(-lim2, lim2, size=(hidden, out))
    return w1, np.zeros(hidden), w2, np.zeros(out)


def _stack_embeddings(embeddings: Sequence[Embedding]) -> np.ndarray:
    dim = embeddings[0].dim
    for e in embeddings:
        if e.dim != dim:
            raise DimMismatch(f"mixed embedding dims {dim} and {e.dim}")
    return np.stack([e.values for e in embeddings])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_and_grads(w1, b1, w2, b2, X, targets, kind: str, lam: float):
    """Full loss (data mean + L2 penalty on weights) and its gradients.

    ``targets``: one-hot (N,4) for multiclass, column (N,1) otherwise.
    Empty X contributes no data term (used by the gradient checker).
    """
    n = X.shape[0]
    if n:
        z1 = X @ w1 + b1
        h = np.maximum(z1, 0.0)
        z2 = h @ w2 + b2
        if kind == "multiclass":
            zmax = z2.max(axis=1, keepdims=True)
            lse = zmax[:, 0] + np.log(np.exp(z2 - zmax).sum(axis=1))
            data_loss = float(np.mean(lse - (z2 * targets).sum(axis=1)))
            probs = np.exp(z2 - zmax)
            probs /= probs.sum(axis=1, keepdims=True)
            dz2 = (probs - targets) / n
        elif kind == "solution-time":
            resid = z2 - targets
            data_loss = float(np.mean(0.5 * resid**2))
            dz2 = resid / n
        elif kind == "correctness":
            data_loss = float(
                np.mean(np.maximum(z2, 0.0) - z2 * targets + np.log1p(np.exp(-np.abs(z2))))
            )
            dz2 = (_sigmoid(z2) - targets) / n
        else:
            raise ValueError(f"unknown kind {kind!r}")
        dw2 = h.T @ dz2
        db2 = dz2.sum(axis=0)
        dh = dz2 @ w2.T
        dz1 = dh * (z1 > 0.0)
        dw1 = X.T @ dz1
        db1 = dz1.sum(axis=0)
    else:
        data_loss = 0.0
        dw1 = np.zeros_like(w1)
        db1 = np.zeros_like(b1)
        dw2 = np.zeros_like(w2)
        db2 = np.zeros_like(b2)

    loss = data_loss + 0.5 * lam * (float(np.sum(w1**2)) + float(np.sum(w2**2)))
    dw1 = dw1 + lam * w1
    dw2 = dw2 + lam * w2
    return loss, (dw1, db1, dw2, db2)


def _run_training(X, targets, kind: str, hyper: Hyperparams, out_units: int):
    input_dim = X.shape[1]
    w1, b1, w2, b2 = _init_weights(input_dim, hyper.hidden_units, out_units, hyper.seed)
    lr = hyper.learning_rate
    history: list[float] = []
    # Divergence shows up as inf/nan loss and aborts; the transient numpy
    # overflow warnings on the way there are noise.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, hyper.epochs + 1):
            loss, (dw1, db1, dw2, db2) = _loss_and_grads(
                w1, b1, w2, b2, X, targets, kind, hyper.l2_lambda
            )
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch)
            history.append(loss)
            w1 -= lr * dw1
            b1 -= lr * db1
            w2 -= lr * dw2
            b2 -= lr * db2
    return w1, b1, w2, b2, history


def train(
    examples: Sequence[tuple[Embedding, int]],
    hyper: Hyperparams,
    topic: SkillTopic | None = None,
    trained_upto: tuple[int, int] | None = None,
) -> SkillModel:
    """Train a 4-class skill classifier."""
    if not examples:
        raise EmptyInput("no training examples")
    labels = [label for _, label in examples]
    for label in labels:
        if not 0 <= label < N_CLASSES:
            raise ValueError(f"class label {label} outside 0..{N_CLASSES - 1}")
    if len(set(labels)) == 1:
        warnings.warn(
            f"degenerate training data: single class {labels[0]}"
            + (f" for topic {topic.value}" if topic else ""),
            stacklevel=2,
        )
    X = _stack_embeddings([e for e, _ in examples])
    onehot = np.zeros((len(examples), N_CLASSES))
    onehot[np.arange(len(examples)), labels] = 1.0
    w1, b1, w2, b2, history = _run_training(X, onehot, "multiclass", hyper, N_CLASSES)
    return SkillModel(topic, X.shape[1], w1, b1, w2, b2, hyper, trained_upto, history)


def train_baseline(
    examples: Sequence[tuple[Embedding, float]],
    kind: str,
    hyper: Hyperparams,
    trained_upto: tuple[int, int] | None = None,
) -> BaselineModel:
    """Train a baseline predictor.

    Targets are raw: seconds for solution-time (regressed on ln(1+seconds)),
    truthy/falsy correctness flags for the binary model.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"kind must be one of {BASELINE_KINDS}")
    if not examples:
        raise EmptyInput("no training examples")
    X = _stack_embeddings([e for e, _ in examples])
    raw = np.asarray([t for _, t in examples], dtype=np.float64)
    if kind == "solution-time":
        if np.any(raw < 0):
            raise ValueError("solution times must be >= 0")
        y = np.log1p(raw)[:, None]
    else:
        y = (raw != 0).astype(np.float64)[:, None]
        if len(np.unique(y)) == 1:
            warnings.warn("degenerate training data: single correctness class", stacklevel=2)
    w1, b1, w2, b2, history = _run_training(X, y, kind, hyper, 1)
    return BaselineModel(kind, X.shape[1], w1, b1, w2, b2, hyper, trained_upto, history)


def _forward_logits(model, x: Embedding) -> np.ndarray:
    if x.dim != model.input_dim:
        raise DimMismatch(f"model expects dim {model.input_dim}, got {x.dim}")
    h = np.maximum(x.values @ model.w1 + model.b1, 0.0)
    return h @ model.w2 + model.b2


def predict(model: SkillModel, x: Embedding) -> tuple[int, np.ndarray]:
    """Predicted class (argmax, ties to the lower index) and the 4 probabilities."""
    z = _forward_logits(model, x)
    z = z - z.max()
    probs = np.exp(z)
    probs /= probs.sum()
    return int(np.argmax(probs)), probs


def predict_baseline(model: BaselineModel, x: Embedding) -> float:
    """Predicted ln(1+seconds) or probability of a correct submission."""
    z = _forward_logits(model, x)
    if model.kind == "correctness":
        return float(_sigmoid(z)[0])
    return float(z[0])


def accuracy(model: SkillModel, examples: Sequence[tuple[Embedding, int]]) -> float:
    if not examples:
        return 0.0
    hits = sum(1 for e, label in examples if predict(model, e)[0] == label)
    return hits / len(examples)


def balance_downsample(
    examples: Sequence[tuple[Embedding, int]], seed: int
) -> list[tuple[Embedding, int]]:
    """Downsample every class to the minority-class count; order shuffled by seed."""
    if not examples:
        raise EmptyInput("no examples to balance")
    by_class: dict[int, list[tuple[Embedding, int]]] = {}
    for ex in examples:
        by_class.setdefault(ex[1], []).append(ex)
    m = min(len(group) for group in by_class.values())
    rng = np.random.default_rng(seed)
    kept: list[tuple[Embedding, int]] = []
    for label in sorted(by_class):
        group = by_class[label]
        idx = rng.choice(len(group), size=m, replace=False)
        kept.extend(group[i] for i in sorted(idx))
    order = rng.permutation(len(kept))
    return [kept[i] for i in order]


def gradient_check(
    model: SkillModel | BaselineModel,
    examples: Sequence[tuple[Embedding, float]],
    epsilon: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Evaluated at the model's current parameters over the full loss.  An empty
    example list isolates the L2 penalty term.
    """
    kind = "multiclass" if isinstance(model, SkillModel) else model.kind
    if examples:
        X = _stack_embeddings([e for e, _ in examples])
        raw = [t for _, t in examples]
        if kind == "multiclass":
            targets = np.zeros((len(raw), N_CLASSES))
            targets[np.arange(len(raw)), np.asarray(raw, dtype=int)] = 1.0
        elif kind == "solution-time":
            targets = np.log1p(np.asarray(raw, dtype=np.float64))[:, None]
        else:
            targets = (np.asarray(raw, dtype=np.float64) != 0).astype(np.float64)[:, None]
    else:
        X = np.zeros((0, model.input_dim))
        targets = np.zeros((0, model.w2.shape[1]))

    params = [model.w1.copy(), model.b1.copy(), model.w2.copy(), model.b2.copy()]
    lam = model.hyper.l2_lambda

    def loss_at(ps):
        loss, _ = _loss_and_grads(ps[0], ps[1], ps[2], ps[3], X, targets, kind, lam)
        return loss

    _, analytic = _loss_and_grads(params[0], params[1], params[2], params[3], X, targets, kind, lam)

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_at(params)
            flat[i] = orig - epsilon
            down = loss_at(params)
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(abs(gflat[i]) + abs(numeric), 1e-12)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# Model files: JSON header + weight arrays (shortest round-trip decimals)
# ---------------------------------------------------------------------------


def _weights_doc(model) -> dict:
    return {
        "w1": [[float(v) for v in row] for row in model.w1],
        "b1": [float(v) for v in model.b1],
        "w2": [[float(v) for v in row] for row in model.w2],
        "b2": [float(v) for v in model.b2],
    }


def save_model(model: SkillModel | BaselineModel, path: str | Path) -> None:
    if isinstance(model, SkillModel):
        head = {"model": "skill", "topic": model.topic.value if model.topic else None}
    else:
        head = {"model": "baseline", "kind": model.kind}
    doc = {
        **head,
        "input_dim": model.input_dim,
        "hidden_units": model.hyper.hidden_units,
        "output_units": model.w2.shape[1],
        "hyper": model.hyper.to_mapping(),
        "trained_upto": list(model.trained_upto) if model.trained_upto else None,
        "weights": _weights_doc(model),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> SkillModel | BaselineModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    hyper = Hyperparams(**doc["hyper"])
    w = doc["weights"]
    arrays = dict(
        w1=np.asarray(w["w1"], dtype=np.float64),
        b1=np.asarray(w["b1"], dtype=np.float64),
        w2=np.asarray(w["w2"], dtype=np.float64),
        b2=np.asarray(w["b2"], dtype=np.float64),
    )
    trained_upto = tuple(doc["trained_upto"]) if doc["trained_upto"] else None
    if doc["model"] == "skill":
        topic = SkillTopic(doc["topic"]) if doc["topic"] else None
        return SkillModel(topic, doc["input_dim"], hyper=hyper, trained_upto=trained_upto, **arrays)
    return BaselineModel(doc["kind"], doc["input_dim"], hyper=hyper, trained_upto=trained_upto, **arrays)
