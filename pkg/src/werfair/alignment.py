"""Word-level alignment and corpus WER.

Error counts come from a minimum-edit-distance alignment with unit costs.
Among equal-cost tracebacks we prefer substitution over insertion over
deletion; the total is unaffected, only the reported split.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .backend import get_kernels
from .errors import EmptyCorpusError


def tokenize(text: str, normalize: bool = True) -> list[str]:
    """Split text on whitespace runs; lowercase when `normalize` is on."""
    if normalize:
        text = text.lower()
    return text.split()


@dataclass(frozen=True)
class ErrorCounts:
    insertions: int
    deletions: int
    substitutions: int
    ref_words: int

    def total(self) -> int:
        return self.insertions + self.deletions + self.substitutions

    @property
    def hyp_words(self) -> int:
        return self.ref_words - self.deletions + self.insertions


def align(ref: Sequence[str], hyp: Sequence[str]) -> ErrorCounts:
    """Align hypothesis against reference and count word errors."""
    vocab: dict[str, int] = {}
    ref_codes = np.empty(len(ref), dtype=np.int64)
    for i, tok in enumerate(ref):
        ref_codes[i] = vocab.setdefault(tok, len(vocab))
    hyp_codes = np.empty(len(hyp), dtype=np.int64)
    for i, tok in enumerate(hyp):
        hyp_codes[i] = vocab.setdefault(tok, len(vocab))
    ins, dels, subs = get_kernels().levenshtein_counts(ref_codes, hyp_codes)
    return ErrorCounts(int(ins), int(dels), int(subs), len(ref))


def corpus_wer(counts: Iterable[ErrorCounts]) -> float:
    """Total errors over total reference words; may exceed 1.0."""
    errors = 0
    words = 0
    for c in counts:
        errors += c.total()
        words += c.ref_words
    if words == 0:
        raise EmptyCorpusError("empty corpus exposure")
    return errors / words
