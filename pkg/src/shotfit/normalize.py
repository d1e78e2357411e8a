"""Arabic review text normalization.

Default pipeline, applied in order:

1. NFC canonical composition
2. alif variants (أ إ آ ٱ) folded to bare alif ا
3. punctuation removed (unicode categories P* plus ؟ ، ؛)
4. whitespace runs collapsed, ends trimmed

Hamza-carrier folding and tashkeel stripping exist but are off by default.

>>> normalize_text("إلى الفندق!!")
'الى الفندق'
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import asdict, dataclass

__all__ = ["NormalizationOptions", "normalize_text", "ALIF_VARIANTS"]

ALIF = "ا"
ALIF_VARIANTS = "أإآٱ"  # أ إ آ ٱ
_ALIF_TABLE = str.maketrans({c: ALIF for c in ALIF_VARIANTS})

# ؤ -> و, ئ -> ي, standalone ء dropped
_HAMZA_TABLE = str.maketrans({"ؤ": "و", "ئ": "ي", "ء": None})

_ARABIC_PUNCT = frozenset("؟،؛")  # ؟ ، ؛

# fathatan..sukun, the extended marks up to U+065F, and superscript alif
_TASHKEEL_RE = re.compile("[\u064B-\u065F\u0670]")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizationOptions:
    compose: bool = True
    fold_alif: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True
    fold_hamza: bool = False
    strip_tashkeel: bool = False

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: bool(v) for k, v in (data or {}).items()})


DEFAULT_OPTIONS = NormalizationOptions()


def _is_punct(ch):
    return ch in _ARABIC_PUNCT or unicodedata.category(ch).startswith("P")


def _single_pass(text, opts):
    if opts.compose:
        text = unicodedata.normalize("NFC", text)
    if opts.fold_alif:
        text = text.translate(_ALIF_TABLE)
    if opts.fold_hamza:
        text = text.translate(_HAMZA_TABLE)
    if opts.strip_tashkeel:
        text = _TASHKEEL_RE.sub("", text)
    if opts.strip_punctuation:
        text = "".join(ch for ch in text if not _is_punct(ch))
    if opts.collapse_whitespace:
        text = _WS_RE.sub(" ", text).strip()
    return text


def normalize_text(text: str, options: NormalizationOptions | None = None) -> str:
    """Normalize ``text`` with ``options`` (all default steps on).

    The pass is repeated until the output is stable. Removing punctuation
    can bring a base letter next to a combining mark (``"ا!\\u0653"``),
    which the next composition step would turn into a foldable alif; the
    fixpoint makes the function idempotent for every input. Each pass is
    length non-increasing, so this terminates in a handful of rounds.
    """
    opts = options or DEFAULT_OPTIONS
    prev = text
    for _ in range(len(text) + 2):
        out = _single_pass(prev, opts)
        if out == prev:
            return out
        prev = out
    return prev
