"""Sentence embedding providers.

The reference backbone hashes character n-grams of the boundary-marked
text into ``buckets`` rows of a trainable matrix and mean-pools the rows.
:class:`PrecomputedProvider` serves vectors exported offline from an
external sentence encoder, looked up by review id.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence, TextIO

import numpy as np
from scipy import sparse

from .errors import ConfigError, EmbeddingError, FeatureError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

# STX / ETX never appear in normalized review text
BOS = "\x02"
EOS = "\x03"


@dataclass(frozen=True)
class EncoderConfig:
    ngram_min: int = 3
    ngram_max: int = 5
    buckets: int = 2**16
    dim: int = 64
    seed: int = 0

    def validate(self):
        if self.ngram_min < 1 or self.ngram_max < self.ngram_min:
            raise ConfigError(f"need 1 <= ngram_min <= ngram_max, got {self.ngram_min}..{self.ngram_max}")
        if self.buckets < 2 or self.buckets & (self.buckets - 1):
            raise ConfigError(f"buckets must be a power of two >= 2, got {self.buckets}")
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class EncoderParams:
    matrix: np.ndarray
    config: EncoderConfig

    def __post_init__(self):
        expected = (self.config.buckets, self.config.dim)
        if self.matrix.shape != expected:
            raise ConfigError(f"matrix shape {self.matrix.shape} != {expected}")


@dataclass(frozen=True)
class SentenceEmbedding:
    vector: np.ndarray
    source_id: str | None = None


def init_encoder(config: EncoderConfig) -> EncoderParams:
    config.validate()
    bound = 1.0 / math.sqrt(config.dim)
    rng = np.random.default_rng(config.seed)
    matrix = rng.uniform(-bound, bound, size=(config.buckets, config.dim))
    return EncoderParams(matrix, config)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 16)
def _featurize(text, ngram_min, ngram_max, buckets):
    marked = BOS + text + EOS
    mask = buckets - 1
    out = []
    for n in range(ngram_min, ngram_max + 1):
        for i in range(len(marked) - n + 1):
            out.append(fnv1a64(marked[i:i + n].encode("utf-8")) & mask)
    return tuple(out)


def featurize(text: str, config: EncoderConfig) -> list[int]:
    """Bucket indices of every boundary-marked character n-gram, with repeats."""
    if not text:
        raise FeatureError("text is empty after normalization; no features")
    feats = _featurize(text, config.ngram_min, config.ngram_max, config.buckets)
    if not feats:
        raise FeatureError(f"text {text!r} is shorter than the smallest n-gram")
    return list(feats)


def feature_matrix(texts: Sequence[str], config: EncoderConfig, ids=None) -> sparse.csr_matrix:
    """Row-stochastic pooling matrix P with P @ M = mean-pooled embeddings.

    Entry (i, g) is multiplicity(g in text i) / |features(text i)|.
    """
    indptr, indices, data = [0], [], []
    for k, text in enumerate(texts):
        try:
            counts = Counter(featurize(text, config))
        except FeatureError as exc:
            rid = ids[k] if ids is not None else k
            raise FeatureError(f"review {rid!r}: {exc}") from None
        total = sum(counts.values())
        rows = sorted(counts)
        indices.extend(rows)
        data.extend(counts[g] / total for g in rows)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(texts), config.buckets),
    )


def encode(params: EncoderParams, text: str, source_id=None) -> SentenceEmbedding:
    pool = feature_matrix([text], params.config)
    vec = np.asarray(pool @ np.asarray(params.matrix, dtype=np.float64))[0]
    return SentenceEmbedding(vec, source_id)


class HashedEncoderProvider:
    """Embeds reviews by text with the reference hashed n-gram backbone."""

    trainable = True

    def __init__(self, params: EncoderParams):
        self.params = params

    @property
    def dim(self):
        return self.params.config.dim

    def embed(self, reviews) -> np.ndarray:
        reviews = list(reviews)
        pool = feature_matrix([r.text for r in reviews], self.params.config, [r.id for r in reviews])
        return np.asarray(pool @ np.asarray(self.params.matrix, dtype=np.float64))


class PrecomputedProvider:
    """Serves externally computed embeddings by review id; nothing to train."""

    trainable = False

    def __init__(self, table: dict):
        self.table = table
        self.dim = len(next(iter(table.values())))

    def __len__(self):
        return len(self.table)

    def lookup(self, review_id) -> SentenceEmbedding:
        try:
            return SentenceEmbedding(self.table[review_id], review_id)
        except KeyError:
            raise EmbeddingError(f"no precomputed embedding for id {review_id!r}") from None

    def embed(self, reviews) -> np.ndarray:
        return np.stack([self.lookup(r.id).vector for r in reviews]) if reviews else np.zeros((0, self.dim))


def _rows_jsonl(text):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            yield str(rec["id"]), rec["vec"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise EmbeddingError(f"line {lineno}: bad embedding record ({exc})") from None


def _rows_csv(text):
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if rows:
        try:
            float(rows[0][1])
        except (IndexError, ValueError):
            rows = rows[1:]  # header
    for r in rows:
        yield r[0], r[1:]


def load_precomputed_provider(source: TextIO | str) -> PrecomputedProvider:
    """Load an embedding table: JSON lines ``{"id", "vec"}`` or CSV ``id,v1..vd``.

    The format is detected from the first non-blank character.
    """
    text = source if isinstance(source, str) else source.read()
    stripped = text.lstrip()
    rows = _rows_jsonl(text) if stripped.startswith("{") else _rows_csv(text)
    table, dim = {}, None
    for rid, values in rows:
        try:
            vec = np.asarray([float(v) for v in values], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise EmbeddingError(f"id {rid!r}: non-numeric vector entry ({exc})") from None
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise EmbeddingError(f"id {rid!r}: vector length {len(vec)} != {dim}")
        if rid in table:
            raise EmbeddingError(f"duplicate id {rid!r} in embedding table")
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError(f"id {rid!r}: non-finite vector entry")
        table[rid] = vec
    if not table or not dim:
        raise EmbeddingError("embedding table is empty; dimension cannot be determined")
    return PrecomputedProvider(table)


def dump_embeddings_jsonl(ids, vectors, sink: TextIO):
    for rid, vec in zip(ids, vectors):
        sink.write(json.dumps({"id": rid, "vec": [float(x) for x in vec]}) + "\n")
