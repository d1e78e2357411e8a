"""shotfit: few-shot sentiment classification for dialectal Arabic reviews.

Two stages: contrastive fine-tuning of a hashed character n-gram encoder on
sentence pairs, then a softmax head trained on the frozen embeddings.
"""

from .corpus import (
    Corpus, Review, ShotSet, SyntheticSpec, class_distribution, generate_synthetic_corpus,
    load_corpus, read_corpus, sample_shots, stratified_split, write_corpus,
)
from .contrastive import ContrastiveConfig, Pair, finetune_encoder, generate_pairs, loss_gradient
from .encoder import EncoderConfig, EncoderParams, encode, init_encoder
from .head import HeadConfig, HeadParams, predict, train_head
from .metrics import EvalReport, confusion_matrix, dialect_breakdown, f1_report
from .normalize import NormalizationOptions, normalize_text
from .pipeline import (
    ModelArtifact, RunConfig, deserialize_model, evaluate_pipeline, load_model, save_model,
    serialize_model, sweep, train_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "ContrastiveConfig", "Corpus", "EncoderConfig", "EncoderParams", "EvalReport", "HeadConfig",
    "HeadParams", "ModelArtifact", "NormalizationOptions", "Pair", "Review", "RunConfig", "ShotSet",
    "SyntheticSpec", "class_distribution", "confusion_matrix", "deserialize_model",
    "dialect_breakdown", "encode", "evaluate_pipeline", "f1_report", "finetune_encoder",
    "generate_pairs", "generate_synthetic_corpus", "init_encoder", "load_corpus", "load_model",
    "loss_gradient", "normalize_text", "predict", "read_corpus", "sample_shots", "save_model",
    "serialize_model", "stratified_split", "sweep", "train_head", "train_pipeline", "write_corpus",
]
