"""Review corpora: CSV ingestion, distributions, stratified splits, shot sampling.

All operations are pure functions of their inputs and seed. Corpora and
reviews are immutable.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ConfigError, DuplicateIdError, LabelError, RowError, SchemaError
from .normalize import NormalizationOptions, normalize_text

SENTIMENTS = ("positive", "negative", "neutral")
DIALECTS = ("darija", "saudi")
COLUMNS = ("ID", "Sentiment", "Text", "Dialect")


class ShotfitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Review:
    id: str
    text: str
    dialect: str
    sentiment: str | None = None


@dataclass(frozen=True)
class Corpus:
    reviews: tuple[Review, ...]
    label_set: tuple[str, ...] = field(init=False)
    dialect_set: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        reviews = tuple(self.reviews)
        seen = Counter(r.id for r in reviews)
        dupes = sorted(i for i, c in seen.items() if c > 1)
        if dupes:
            raise DuplicateIdError(f"duplicate review id(s): {', '.join(dupes)}")
        labels = dict.fromkeys(r.sentiment for r in reviews if r.sentiment is not None)
        dialects = dict.fromkeys(r.dialect for r in reviews)
        object.__setattr__(self, "reviews", reviews)
        object.__setattr__(self, "label_set", tuple(labels))
        object.__setattr__(self, "dialect_set", tuple(dialects))

    def __len__(self):
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)

    @property
    def ids(self):
        return [r.id for r in self.reviews]

    @property
    def labels(self):
        return [r.sentiment for r in self.reviews]

    def is_labeled(self):
        return all(r.sentiment is not None for r in self.reviews)

    def normalized(self, options: NormalizationOptions | None = None) -> "Corpus":
        return Corpus(tuple(
            Review(r.id, normalize_text(r.text, options), r.dialect, r.sentiment)
            for r in self.reviews
        ))


@dataclass(frozen=True)
class ShotSet:
    reviews: tuple[Review, ...]
    requested_per_class: int
    seed: int
    shortfall: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.reviews)

    @property
    def labels(self):
        return [r.sentiment for r in self.reviews]

    def as_corpus(self) -> Corpus:
        return Corpus(self.reviews)


def _require_labeled(corpus: Corpus, what: str):
    for r in corpus.reviews:
        if r.sentiment is None:
            raise LabelError(f"{what} needs labeled reviews; review {r.id!r} has no sentiment")


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def load_corpus(source: TextIO | str, labels: Sequence[str] = SENTIMENTS) -> Corpus:
    """Read a review CSV (columns ID, Sentiment, Text, Dialect).

    ``source`` is an open text stream or the CSV content itself. Header
    names match case-insensitively; the Sentiment column may be omitted
    for prediction-only inputs, and an empty Sentiment cell means unlabeled.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None
    index = {name.strip().lower(): i for i, name in enumerate(header)}
    if header and header[0].startswith("\ufeff"):
        index[header[0][1:].strip().lower()] = 0
    for col in ("ID", "Text", "Dialect"):
        if col.lower() not in index:
            raise SchemaError(f"missing required column {col!r}")
    i_id, i_text, i_dialect = index["id"], index["text"], index["dialect"]
    i_sent = index.get("sentiment")
    allowed = {lab.lower() for lab in labels}

    reviews = []
    for rowno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise RowError(f"row {rowno}: expected {len(header)} fields, got {len(row)}", row=rowno)
        sentiment = None
        if i_sent is not None:
            raw = row[i_sent].strip().lower()
            if raw:
                if raw not in allowed:
                    raise RowError(f"row {rowno}: unknown sentiment {row[i_sent]!r}",
                                   row=rowno, review_id=row[i_id])
                sentiment = raw
        reviews.append(Review(
            id=row[i_id].strip(),
            text=row[i_text],
            dialect=row[i_dialect].strip().lower(),
            sentiment=sentiment,
        ))
    return Corpus(tuple(reviews))


def read_corpus(path, labels: Sequence[str] = SENTIMENTS) -> Corpus:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return load_corpus(fh, labels=labels)


def dump_corpus(corpus: Corpus | Iterable[Review], sink: TextIO):
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in corpus:
        writer.writerow([r.id, r.sentiment or "", r.text, r.dialect])


def write_corpus(corpus: Corpus | Iterable[Review], path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        dump_corpus(corpus, fh)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """Counts per (sentiment, dialect) cell; fractions are relative to the corpus."""

    counts: dict
    total: int
    label_set: tuple[str, ...]
    dialect_set: tuple[str, ...]

    def fraction(self, sentiment, dialect=None):
        return self.count(sentiment, dialect) / self.total

    def count(self, sentiment, dialect=None):
        if dialect is None:
            return sum(self.counts.get((sentiment, d), 0) for d in self.dialect_set)
        return self.counts.get((sentiment, dialect), 0)

    def overall(self):
        return {lab: self.count(lab) for lab in self.label_set}

    def by_dialect(self, dialect):
        return {lab: self.count(lab, dialect) for lab in self.label_set}

    def rows(self):
        """(sentiment, dialect, count, fraction) for every cell, label-major."""
        return [(s, d, self.counts.get((s, d), 0), self.counts.get((s, d), 0) / self.total)
                for s in self.label_set for d in self.dialect_set]


def class_distribution(corpus: Corpus) -> Distribution:
    _require_labeled(corpus, "class_distribution")
    counts = Counter((r.sentiment, r.dialect) for r in corpus.reviews)
    return Distribution(dict(counts), len(corpus), corpus.label_set, corpus.dialect_set)


# ---------------------------------------------------------------------------
# Stratified split
# ---------------------------------------------------------------------------

def _exact_ratio(ratio) -> Fraction:
    return Fraction(ratio).limit_denominator(10**9)


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def split_cell_sizes(cell_sizes: Sequence[int], ratio) -> list[int]:
    """Train-side size of each stratification cell.

    floor(ratio * size) per cell, then one extra for the cells with the
    largest fractional remainders (ties resolved by cell order) until the
    total reaches round(ratio * sum(cell_sizes)).
    """
    r = _exact_ratio(ratio)
    exact = [r * n for n in cell_sizes]
    take = [math.floor(x) for x in exact]
    missing = _round_half_up(r * sum(cell_sizes)) - sum(take)
    order = sorted(range(len(cell_sizes)), key=lambda i: (-(exact[i] - take[i]), i))
    for i in order[:missing]:
        take[i] += 1
    return take


def stratified_split(corpus: Corpus, ratio: float, seed: int) -> tuple[Corpus, Corpus]:
    """Split into (train, test) stratified by (sentiment, dialect) cells.

    Both halves keep the corpus order. A cell holding a single review sends
    it to train and warns.
    """
    if not 0 < ratio < 1:
        raise ConfigError(f"ratio must lie in (0, 1), got {ratio}")
    _require_labeled(corpus, "stratified_split")
    cells = [(s, d) for s in corpus.label_set for d in corpus.dialect_set]
    members = {c: [] for c in cells}
    for i, r in enumerate(corpus.reviews):
        members[(r.sentiment, r.dialect)].append(i)
    cells = [c for c in cells if members[c]]
    sizes = split_cell_sizes([len(members[c]) for c in cells], ratio)

    rng = np.random.default_rng(seed)
    in_train = np.zeros(len(corpus), dtype=bool)
    for cell, k in zip(cells, sizes):
        idx = members[cell]
        if len(idx) == 1 and k == 0:
            warnings.warn(f"stratification cell {cell} has one review; assigned to train",
                          ShotfitWarning, stacklevel=2)
            k = 1
        perm = rng.permutation(len(idx))
        for j in perm[:k]:
            in_train[idx[j]] = True
    train = tuple(r for r, t in zip(corpus.reviews, in_train) if t)
    test = tuple(r for r, t in zip(corpus.reviews, in_train) if not t)
    return Corpus(train), Corpus(test)


# ---------------------------------------------------------------------------
# Shot sampling
# ---------------------------------------------------------------------------

def sample_shots(corpus: Corpus, n_per_class: int, seed: int,
                 per_dialect: bool = False) -> ShotSet:
    """Sample up to ``n_per_class`` reviews of each sentiment without replacement.

    With ``per_dialect`` the per-class quota is spread evenly over the
    corpus dialects (earlier dialects take the remainder).
    """
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be positive, got {n_per_class}")
    _require_labeled(corpus, "sample_shots")
    rng = np.random.default_rng(seed)
    chosen, shortfall = [], {}
    for label in corpus.label_set:
        pool = [r for r in corpus.reviews if r.sentiment == label]
        if per_dialect:
            picked = []
            dialects = corpus.dialect_set
            for k, d in enumerate(dialects):
                quota = n_per_class // len(dialects) + (k < n_per_class % len(dialects))
                sub = [r for r in pool if r.dialect == d]
                picked += _draw(sub, quota, rng)
        else:
            picked = _draw(pool, n_per_class, rng)
        if len(picked) < n_per_class:
            shortfall[label] = n_per_class - len(picked)
        chosen += picked
    if shortfall:
        warnings.warn(f"classes short of {n_per_class} shots (missing counts): {shortfall}",
                      ShotfitWarning, stacklevel=2)
    return ShotSet(tuple(chosen), n_per_class, seed, shortfall)


def _draw(pool, k, rng):
    k = min(k, len(pool))
    if k == 0:
        return []
    return [pool[i] for i in rng.choice(len(pool), size=k, replace=False)]


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------

# base Arabic letters, no alif variants or punctuation, so normalization is a no-op
_SYN_ALPHABET = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي"
SYNTHETIC_DIALECTS = ("dialect_a", "dialect_b")
INDICATIVE_SHARE = 0.6


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 3
    per_class: int = 100
    indicative_tokens_per_class: int = 100
    noise_tokens: int = 200
    tokens_per_text: int = 12

    def validate(self):
        for name, value in self.__dict__.items():
            if value < 1:
                raise ConfigError(f"synthetic spec field {name} must be positive, got {value}")


def _class_labels(k):
    if k <= len(SENTIMENTS):
        return SENTIMENTS[:k]
    return SENTIMENTS + tuple(f"class_{i}" for i in range(len(SENTIMENTS), k))


def _vocabulary(rng, size, taken):
    words = []
    while len(words) < size:
        length = int(rng.integers(3, 8))
        w = "".join(_SYN_ALPHABET[i] for i in rng.integers(0, len(_SYN_ALPHABET), length))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


def generate_synthetic_corpus(spec: SyntheticSpec, seed: int) -> Corpus:
    """Build a labeled corpus whose classes are separable by vocabulary.

    Each class owns a disjoint indicative vocabulary; every text draws
    ceil(0.6 * tokens_per_text) tokens from it and the rest from a shared
    noise vocabulary. Labels go round-robin, dialect tags alternate.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    labels = _class_labels(spec.classes)
    indicative, noise = _vocabularies(rng, spec)
    n_ind = math.ceil(INDICATIVE_SHARE * spec.tokens_per_text)

    reviews = []
    for i in range(spec.classes * spec.per_class):
        c = i % spec.classes
        toks = [indicative[c][j] for j in rng.integers(0, len(indicative[c]), n_ind)]
        toks += [noise[j] for j in rng.integers(0, len(noise), spec.tokens_per_text - n_ind)]
        toks = [toks[j] for j in rng.permutation(len(toks))]
        reviews.append(Review(f"syn-{i:05d}", " ".join(toks), SYNTHETIC_DIALECTS[i % 2], labels[c]))
    return Corpus(tuple(reviews))


def _vocabularies(rng, spec):
    taken: set[str] = set()
    indicative = [_vocabulary(rng, spec.indicative_tokens_per_class, taken)
                  for _ in range(spec.classes)]
    return indicative, _vocabulary(rng, spec.noise_tokens, taken)


def synthetic_vocabularies(spec: SyntheticSpec, seed: int):
    """Return (indicative vocabularies per class, noise vocabulary) for ``seed``."""
    return _vocabularies(np.random.default_rng(seed), spec)
