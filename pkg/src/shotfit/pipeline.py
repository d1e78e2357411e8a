"""Two-stage training, model persistence, prediction, evaluation and sweeps.

One global seed drives a whole run; component seeds are fixed offsets
from it (see ``SEED_OFFSETS``).
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Sequence, TextIO

import numpy as np

from . import container
from .contrastive import ContrastiveConfig, finetune_encoder
from .corpus import Corpus, ShotSet, load_corpus, sample_shots
from .encoder import EncoderConfig, EncoderParams, HashedEncoderProvider, init_encoder
from .errors import ConfigError, EmbeddingError, LabelError, RowError, ShotfitError, StageError
from .head import HeadConfig, HeadParams, predict_labels, train_head
from .metrics import EvalReport, dialect_breakdown, format_duration
from .normalize import NormalizationOptions

log = logging.getLogger(__name__)

SEED_OFFSETS = {"split": 1, "shots": 2, "pairs": 3, "encoder": 4, "head": 5}
_U64 = (1 << 64) - 1


def derive_seed(global_seed: int, component: str) -> int:
    return (global_seed + SEED_OFFSETS[component]) & _U64


@dataclass(frozen=True)
class RunConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    contrastive: ContrastiveConfig = field(default_factory=ContrastiveConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    shots_per_class: int = 64
    global_seed: int = 0
    normalization: NormalizationOptions = field(default_factory=NormalizationOptions)
    per_dialect_shots: bool = False

    def resolved(self) -> "RunConfig":
        """Copy with every component seed derived from ``global_seed``."""
        g = self.global_seed
        return replace(
            self,
            encoder=replace(self.encoder, seed=derive_seed(g, "encoder")),
            contrastive=replace(self.contrastive, seed=derive_seed(g, "pairs")),
            head=replace(self.head, seed=derive_seed(g, "head")),
        )

    def validate(self):
        self.encoder.validate()
        self.contrastive.validate()
        self.head.validate()
        if self.shots_per_class < 1:
            raise ConfigError(f"shots_per_class must be >= 1, got {self.shots_per_class}")
        return self

    def to_dict(self):
        return {
            "encoder": self.encoder.to_dict(),
            "contrastive": self.contrastive.to_dict(),
            "head": self.head.to_dict(),
            "shots_per_class": self.shots_per_class,
            "global_seed": self.global_seed,
            "normalization": self.normalization.to_dict(),
            "per_dialect_shots": self.per_dialect_shots,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        base = cls()
        known = {"encoder", "contrastive", "head", "shots_per_class", "global_seed",
                 "normalization", "per_dialect_shots"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(
                encoder=replace(base.encoder, **data.get("encoder", {})),
                contrastive=replace(base.contrastive, **data.get("contrastive", {})),
                head=replace(base.head, **data.get("head", {})),
                shots_per_class=data.get("shots_per_class", base.shots_per_class),
                global_seed=data.get("global_seed", base.global_seed),
                normalization=replace(base.normalization, **data.get("normalization", {})),
                per_dialect_shots=data.get("per_dialect_shots", base.per_dialect_shots),
            )
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None


@dataclass
class ModelArtifact:
    head: HeadParams
    normalization: NormalizationOptions
    encoder: EncoderParams | None = None
    dialect_set: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)
    # wall-clock figures; kept out of the container unless asked for, so that
    # identical runs serialize to identical bytes
    timings: dict = field(default_factory=dict)
    training_log: list = field(default_factory=list)
    version: int = container.FORMAT_VERSION


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def serialize_model(artifact: ModelArtifact, sink: BinaryIO | None = None, *, timings: bool = False) -> bytes:
    header = {
        "class_order": list(artifact.head.class_order),
        "normalize_embeddings": artifact.head.normalize_embeddings,
        "normalization": artifact.normalization.to_dict(),
        "dialect_set": list(artifact.dialect_set),
        "metadata": artifact.metadata,
        "encoder_config": artifact.encoder.config.to_dict() if artifact.encoder is not None else None,
    }
    if timings:
        header["timings"] = artifact.timings
    arrays = {}
    if artifact.encoder is not None:
        arrays["encoder.matrix"] = artifact.encoder.matrix
    arrays["head.weights"] = artifact.head.weights
    arrays["head.bias"] = artifact.head.bias
    blob = container.pack(header, arrays)
    if sink is not None:
        sink.write(blob)
    return blob


def deserialize_model(source: BinaryIO | bytes) -> ModelArtifact:
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    header, arrays = container.unpack(bytes(data))
    encoder = None
    if header.get("encoder_config") is not None:
        cfg = EncoderConfig.from_dict(header["encoder_config"])
        if "encoder.matrix" not in arrays:
            raise container.ArraySizeError("array 'encoder.matrix' missing from payload")
        encoder = EncoderParams(arrays["encoder.matrix"], cfg)
    head = HeadParams(arrays["head.weights"], arrays["head.bias"], tuple(header["class_order"]),
                      header["normalize_embeddings"])
    return ModelArtifact(
        head=head,
        normalization=NormalizationOptions.from_dict(header["normalization"]),
        encoder=encoder,
        dialect_set=tuple(header["dialect_set"]),
        metadata=header["metadata"],
        timings=header.get("timings", {}),
    )


def save_model(artifact: ModelArtifact, path, timings: bool = False):
    with open(path, "wb") as fh:
        serialize_model(artifact, fh, timings=timings)


def load_model(path) -> ModelArtifact:
    with open(path, "rb") as fh:
        return deserialize_model(fh)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _check_texts(corpus: Corpus):
    empty = [r.id for r in corpus if not r.text]
    if empty:
        raise RowError(f"reviews empty after normalization: {', '.join(empty)}")


def _as_float32(params: EncoderParams) -> EncoderParams:
    return EncoderParams(np.asarray(params.matrix, dtype=np.float32), params.config)


def fit_head_stage(embedder, shots: ShotSet, config: HeadConfig) -> HeadParams:
    """Stage 2 alone: embed the shots with a frozen provider and fit the head."""
    x = embedder.embed(shots.reviews)
    head = train_head(x, shots.labels, config)
    return HeadParams(head.weights.astype(np.float32), head.bias.astype(np.float32),
                      head.class_order, head.normalize_embeddings, head.final_loss)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except ShotfitError as exc:
        raise StageError(name, exc) from exc


def train_pipeline(train_corpus: Corpus, config: RunConfig | None = None, provider=None) -> ModelArtifact:
    """normalize -> sample shots -> contrastive fine-tuning -> head on frozen embeddings.

    With a non-trainable ``provider`` (precomputed embeddings) the
    contrastive stage is skipped and the artifact holds no encoder.
    """
    config = (config or RunConfig()).validate().resolved()
    if len(train_corpus) == 0:
        raise StageError("input", "training corpus is empty")
    if not train_corpus.is_labeled():
        raise StageError("input", "training corpus has unlabeled reviews")
    t_start = time.perf_counter()

    corpus = _stage("normalize", train_corpus.normalized, config.normalization)
    shots = _stage("shots", sample_shots, corpus, config.shots_per_class,
                   derive_seed(config.global_seed, "shots"), config.per_dialect_shots)

    t1 = time.perf_counter()
    encoder, epoch_log = None, []
    if provider is None or getattr(provider, "trainable", False):
        _stage("normalize", _check_texts, shots.as_corpus())
        params = init_encoder(config.encoder)
        params, epoch_log = _stage("contrastive", finetune_encoder, params, shots, config.contrastive)
        encoder = _as_float32(params)
        embedder = HashedEncoderProvider(encoder)
    else:
        embedder = provider
    stage1 = time.perf_counter() - t1

    t2 = time.perf_counter()
    head = _stage("head", fit_head_stage, embedder, shots, config.head)
    stage2 = time.perf_counter() - t2

    metadata = {
        "global_seed": config.global_seed,
        "shots_per_class": config.shots_per_class,
        "n_shots": len(shots),
        "shot_counts": {lab: shots.labels.count(lab) for lab in dict.fromkeys(shots.labels)},
        "shot_ids": [r.id for r in shots.reviews],
        "contrastive": config.contrastive.to_dict() if encoder is not None else None,
        "head": config.head.to_dict(),
        "epoch_losses": [rec["mean_loss"] for rec in epoch_log],
        "head_final_loss": head.final_loss,
        "stage1_skipped": encoder is None,
    }
    timings = {"stage1_seconds": stage1, "stage2_seconds": stage2,
               "total_seconds": time.perf_counter() - t_start}
    log.info("trained on %d shots in %s", len(shots), format_duration(timings["total_seconds"]))
    return ModelArtifact(head=head, normalization=config.normalization, encoder=encoder,
                         dialect_set=train_corpus.dialect_set, metadata=metadata,
                         timings=timings, training_log=epoch_log)


# ---------------------------------------------------------------------------
# Inference and evaluation
# ---------------------------------------------------------------------------

def embedder_for(artifact: ModelArtifact, provider=None):
    if provider is not None and not getattr(provider, "trainable", False):
        return provider
    if artifact.encoder is None:
        raise EmbeddingError("model has no encoder (head-only); supply precomputed embeddings")
    return HashedEncoderProvider(artifact.encoder)


def predict_corpus(artifact: ModelArtifact, corpus: Corpus, provider=None) -> list[str]:
    if len(corpus) == 0:
        return []
    embedder = embedder_for(artifact, provider)
    normalized = corpus.normalized(artifact.normalization)
    if isinstance(embedder, HashedEncoderProvider):
        _check_texts(normalized)
    return predict_labels(artifact.head, embedder.embed(normalized.reviews))


def predict_file(artifact: ModelArtifact, source: TextIO | str, sink: TextIO, provider=None) -> int:
    """Write ``ID,Sentiment`` prediction rows for every input row; returns the row count."""
    corpus = load_corpus(source)
    labels = predict_corpus(artifact, corpus, provider)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["ID", "Sentiment"])
    for r, lab in zip(corpus, labels):
        writer.writerow([r.id, lab])
    return len(labels)


def evaluate_pipeline(artifact: ModelArtifact, test_corpus: Corpus, provider=None) -> EvalReport:
    if not test_corpus.is_labeled():
        raise LabelError("evaluation needs a fully labeled corpus")
    t0 = time.perf_counter()
    pred = predict_corpus(artifact, test_corpus, provider)
    order = tuple(dict.fromkeys(tuple(artifact.head.class_order) + test_corpus.label_set))
    return dialect_breakdown(test_corpus, pred, order, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    rows: list

    def to_dict(self):
        return {"rows": self.rows}

    def table(self) -> str:
        """Samples / Epoch / F1 % / Duration table; seeds are averaged per cell."""
        cells: dict = {}
        for row in self.rows:
            cells.setdefault((row["shots"], row["epochs"]), []).append(row)
        lines = [f"{'Samples Number':>14}  {'Epoch':>5}  {'F1 %':>7}  {'Duration in h:m:s':>17}"]
        for (n, e), rows in cells.items():
            ok = [r for r in rows if r["error"] is None]
            f1 = f"{100 * np.mean([r['macro_f1'] for r in ok]):7.2f}" if ok else f"{'failed':>7}"
            dur = format_duration(sum(r["duration_seconds"] for r in rows) / len(rows))
            lines.append(f"{n:>14}  {e:>5}  {f1}  {dur:>17}")
        return "\n".join(lines)


def _sweep_cell(train, test, n, epochs, seed, template, provider):
    cfg = replace(template, shots_per_class=n, global_seed=seed,
                  contrastive=replace(template.contrastive, epochs=epochs))
    t0 = time.perf_counter()
    row = {"shots": n, "epochs": epochs, "seed": seed, "macro_f1": None,
           "weighted_f1": None, "duration_seconds": 0.0, "error": None}
    try:
        artifact = train_pipeline(train, cfg, provider)
        report = evaluate_pipeline(artifact, test, provider)
        row["macro_f1"], row["weighted_f1"] = report.macro_f1, report.weighted_f1
    except Exception as exc:  # one failed cell must not abort the grid
        log.warning("sweep cell n=%s E=%s seed=%s failed: %s", n, epochs, seed, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["duration_seconds"] = time.perf_counter() - t0
    return row


def sweep(train: Corpus, test: Corpus, shots_grid: Sequence[int], epochs_grid: Sequence[int],
          seeds: int = 1, template: RunConfig | None = None, provider=None, workers: int = 1) -> SweepResult:
    """Train and evaluate every (shots, epochs, seed) cell in grid order.

    Seeds are ``template.global_seed + k`` for k in range(seeds).
    """
    if not shots_grid or not epochs_grid or seeds < 1:
        raise ConfigError("sweep grids must be non-empty and seeds >= 1")
    template = template or RunConfig()
    cells = [(n, e, template.global_seed + k)
             for n in shots_grid for e in epochs_grid for k in range(seeds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _sweep_cell(train, test, *c, template, provider), cells))
    else:
        rows = [_sweep_cell(train, test, *c, template, provider) for c in cells]
    return SweepResult(rows)


def write_training_log(records, sink: TextIO):
    for rec in records:
        sink.write(json.dumps(rec) + "\n")


def dumps_report(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False)


