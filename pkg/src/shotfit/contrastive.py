"""Stage 1: contrastive fine-tuning of the hashed n-gram encoder.

Pairs of shots are labeled 1.0 (same sentiment) or 0.0 (different), and
the encoder matrix is trained to make the cosine similarity of each pair's
embeddings match its target under a squared-error loss.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import ShotfitWarning, ShotSet
from .encoder import EncoderParams, feature_matrix
from .errors import ConfigError, EmbeddingError, LabelError
from .optim import Adam

log = logging.getLogger(__name__)


class Pair(NamedTuple):
    left: int
    right: int
    target: float


@dataclass(frozen=True)
class ContrastiveConfig:
    epochs: int = 3
    batch_size: int = 16
    pair_iterations: int = 20
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def validate(self):
        for name in ("epochs", "batch_size", "pair_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ConfigError("adam betas must lie in [0, 1)")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _labels_of(shots):
    return shots.labels if isinstance(shots, ShotSet) else list(shots)


def generate_pairs(shots: ShotSet | Sequence[str], iterations: int, seed: int) -> list[Pair]:
    """One positive and one negative pair per anchor per iteration, then shuffled.

    ``shots`` may be a ShotSet or the bare label sequence. Anchors whose
    class has a single member are skipped entirely (no positive partner
    exists), keeping targets balanced.
    """
    if iterations < 1:
        raise ConfigError(f"pair iterations must be >= 1, got {iterations}")
    labels = _labels_of(shots)
    groups: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    if len(groups) < 2:
        raise LabelError("pair generation needs at least two distinct classes")
    singles = [lab for lab, g in groups.items() if len(g) == 1]
    if singles:
        warnings.warn(f"classes with a single shot produce no pairs: {singles}",
                      ShotfitWarning, stacklevel=2)

    position = {i: p for g in groups.values() for p, i in enumerate(g)}
    others = {lab: [i for i, l in enumerate(labels) if l != lab] for lab in groups}
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(iterations):
        for i, lab in enumerate(labels):
            same = groups[lab]
            if len(same) < 2:
                continue
            u = int(rng.integers(len(same) - 1))
            j = same[u if u < position[i] else u + 1]
            diff = others[lab]
            k = diff[int(rng.integers(len(diff)))]
            pairs.append(Pair(i, j, 1.0))
            pairs.append(Pair(i, k, 0.0))
    order = rng.permutation(len(pairs))
    return [pairs[o] for o in order]


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise EmbeddingError("cosine similarity of a zero-norm vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def pair_loss(u, v, y) -> float:
    return (cosine_similarity(u, v) - y) ** 2


def batch_loss(embeddings, pairs) -> float:
    return float(np.mean([pair_loss(embeddings[a], embeddings[b], y) for a, b, y in pairs]))


def _pairs_array(pairs):
    arr = np.asarray(pairs, dtype=np.float64).reshape(-1, 3)
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]


def _loss_and_grad(pool, matrix, left, right, y, ids=None):
    """Mean pair loss and its gradient w.r.t. ``matrix`` (rows = pool columns)."""
    emb = np.asarray(pool @ matrix)
    u, v = emb[left], emb[right]
    nu = np.sqrt(np.einsum("ij,ij->i", u, u))
    nv = np.sqrt(np.einsum("ij,ij->i", v, v))
    bad = np.flatnonzero((nu == 0) | (nv == 0))
    if bad.size:
        k = bad[0]
        who = left[k] if nu[k] == 0 else right[k]
        name = ids[who] if ids is not None else who
        raise EmbeddingError(f"zero-norm embedding for review {name!r}")
    s = np.einsum("ij,ij->i", u, v) / (nu * nv)
    r = s - y
    loss = float(np.mean(r * r))
    c = (2.0 * r / len(y))[:, None]
    inv = (1.0 / (nu * nv))[:, None]
    du = c * (v * inv - (s / (nu * nu))[:, None] * u)
    dv = c * (u * inv - (s / (nv * nv))[:, None] * v)
    d_emb = np.zeros_like(emb)
    np.add.at(d_emb, left, du)
    np.add.at(d_emb, right, dv)
    return loss, np.asarray(pool.T @ d_emb)


def loss_gradient(pairs: Sequence[Pair], texts: Sequence[str], params: EncoderParams, ids=None):
    """Gradient of the mean squared cosine loss w.r.t. the full encoder matrix.

    ``pairs`` index into ``texts``. Returns ``(loss, gradient)``; the
    gradient has the matrix's shape and is zero on rows no text touches.
    """
    pool = feature_matrix(texts, params.config, ids)
    left, right, y = _pairs_array(pairs)
    return _loss_and_grad(pool, np.asarray(params.matrix, dtype=np.float64), left, right, y, ids)


def finetune_encoder(params: EncoderParams, shots: ShotSet, config: ContrastiveConfig,
                     texts: Sequence[str] | None = None):
    """Fine-tune ``params`` on pairs drawn from ``shots``.

    Returns ``(trained_params, epoch_log)``; the input params are not modified.
    ``texts`` overrides the shot texts (e.g. normalized versions), aligned by index.

    Only matrix rows reachable from the shot features ever receive a
    nonzero gradient; every other row keeps zero Adam moments and therefore
    never moves. The optimizer runs on that row block, which is exactly
    equivalent to Adam over the whole matrix.
    """
    config.validate()
    texts = [r.text for r in shots.reviews] if texts is None else list(texts)
    ids = [r.id for r in shots.reviews]
    pairs = generate_pairs(shots, config.pair_iterations, config.seed)
    left, right, y = _pairs_array(pairs)

    pool = feature_matrix(texts, params.config, ids)
    active = np.unique(pool.indices)
    pool = pool[:, active].tocsr()
    block = np.array(params.matrix[active], dtype=np.float64)
    adam = Adam([block], lr=config.learning_rate, beta1=config.adam_beta1,
                beta2=config.adam_beta2, eps=config.adam_epsilon)

    rng = np.random.default_rng([config.seed, 1])
    bs = config.batch_size
    epoch_log = []
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(order), bs):
            b = order[start:start + bs]
            # forward/backward only through the texts this batch touches
            members = np.unique(np.concatenate([left[b], right[b]]))
            loss, grad = _loss_and_grad(
                pool[members], block,
                np.searchsorted(members, left[b]), np.searchsorted(members, right[b]), y[b],
                [ids[i] for i in members],
            )
            total += loss * len(b)
            adam.step([grad])
        rec = {"epoch": epoch, "mean_loss": total / len(y), "pairs": int(len(y)),
               "seconds": time.perf_counter() - t0}
        log.info("contrastive epoch %d: mean loss %.6f over %d pairs", epoch, rec["mean_loss"], len(y))
        epoch_log.append(rec)

    matrix = np.array(params.matrix, dtype=np.float64)
    matrix[active] = block
    return EncoderParams(matrix, params.config), epoch_log
