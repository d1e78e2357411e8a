"""Stage 2: multinomial logistic regression on frozen sentence embeddings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .encoder import SentenceEmbedding
from .errors import ConfigError, EmbeddingError, LabelError
from .optim import Adam


@dataclass(frozen=True)
class HeadConfig:
    l2_lambda: float = 1e-4
    learning_rate: float = 0.1
    iterations: int = 300
    seed: int = 0
    normalize_embeddings: bool = True

    def validate(self):
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class HeadParams:
    weights: np.ndarray
    bias: np.ndarray
    class_order: tuple[str, ...]
    normalize_embeddings: bool = True
    final_loss: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.weights.shape[0] != len(self.class_order) or self.bias.shape != (len(self.class_order),):
            raise ConfigError("head weight/bias rows must match the class order")

    @property
    def dim(self):
        return self.weights.shape[1]


@dataclass(frozen=True)
class Prediction:
    label: str
    probabilities: np.ndarray


def _as_matrix(embeddings):
    if isinstance(embeddings, np.ndarray):
        return np.asarray(embeddings, dtype=np.float64)
    rows = [e.vector if isinstance(e, SentenceEmbedding) else e for e in embeddings]
    dims = {len(r) for r in rows}
    if len(dims) > 1:
        raise EmbeddingError(f"embedding dimensions disagree: {sorted(dims)}")
    return np.asarray(rows, dtype=np.float64)


def l2_normalize(x):
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise EmbeddingError(f"cannot L2-normalize zero embedding(s) at rows {np.flatnonzero(norms == 0).tolist()}")
    return x / norms


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def head_loss_and_grad(weights, bias, x, y, l2_lambda):
    """Mean cross-entropy plus (lambda/2)||W||^2, with gradients for W and bias.

    ``y`` holds integer class indices into the rows of ``weights``.
    """
    n = len(y)
    z = x @ weights.T + bias
    z = z - z.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_p[np.arange(n), y].mean() + 0.5 * l2_lambda * np.sum(weights * weights)
    dz = np.exp(log_p)
    dz[np.arange(n), y] -= 1.0
    dz /= n
    return float(loss), dz.T @ x + l2_lambda * weights, dz.sum(axis=0)


def train_head(embeddings, labels, config: HeadConfig | None = None, class_order=None) -> HeadParams:
    """Fit W, b from zero by full-batch Adam for ``config.iterations`` steps.

    ``class_order`` defaults to the first-occurrence order of ``labels``.
    """
    config = (config or HeadConfig()).validate()
    x = _as_matrix(embeddings)
    labels = list(labels)
    if len(labels) != len(x):
        raise LabelError(f"{len(labels)} labels for {len(x)} embeddings")
    order = tuple(class_order) if class_order is not None else tuple(dict.fromkeys(labels))
    if len(set(labels)) < 2:
        raise LabelError("head training needs at least two distinct labels")
    index = {lab: i for i, lab in enumerate(order)}
    try:
        y = np.asarray([index[lab] for lab in labels], dtype=np.int64)
    except KeyError as exc:
        raise LabelError(f"label {exc.args[0]!r} not in class order {order}") from None
    if config.normalize_embeddings:
        x = l2_normalize(x)

    weights = np.zeros((len(order), x.shape[1]))
    bias = np.zeros(len(order))
    adam = Adam([weights, bias], lr=config.learning_rate)
    for _ in range(config.iterations):
        _, dw, db = head_loss_and_grad(weights, bias, x, y, config.l2_lambda)
        adam.step([dw, db])
    final, _, _ = head_loss_and_grad(weights, bias, x, y, config.l2_lambda)
    return HeadParams(weights, bias, order, config.normalize_embeddings, final)


def predict_proba(head: HeadParams, embeddings) -> np.ndarray:
    x = _as_matrix(embeddings)
    if x.ndim != 2 or x.shape[1] != head.dim:
        raise EmbeddingError(f"embedding dimension {x.shape[-1]} != head dimension {head.dim}")
    if head.normalize_embeddings:
        x = l2_normalize(x)
    w = np.asarray(head.weights, dtype=np.float64)
    b = np.asarray(head.bias, dtype=np.float64)
    return softmax(x @ w.T + b)


def predict_labels(head: HeadParams, embeddings) -> list[str]:
    # argmax returns the first maximum, i.e. ties go to the smallest class index
    return [head.class_order[i] for i in predict_proba(head, embeddings).argmax(axis=1)]


def predict(head: HeadParams, embedding) -> Prediction:
    vec = embedding.vector if isinstance(embedding, SentenceEmbedding) else embedding
    probs = predict_proba(head, np.asarray(vec, dtype=np.float64)[None, :])[0]
    return Prediction(head.class_order[int(np.argmax(probs))], probs)
