"""Data model and file ingestion for evaluation corpora.

Input is JSON Lines (one utterance object per line) or CSV with a header
row.  Each record supplies either reference/hypothesis text or precomputed
error/word counts, plus speaker and group fields and optional numeric
covariates (e.g. precomputed sentence embeddings).
"""

import csv
import json
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import alignment
from .errors import (
    CorpusError,
    MissingLevelError,
    MixedSchemaError,
    NonNumericCovariateError,
    SpeakerGroupConflictError,
    UnknownGroupError,
)


@dataclass(frozen=True)
class GroupFactor:
    name: str
    levels: tuple[str, ...]
    reference_level: int = 0

    def __post_init__(self):
        if len(set(self.levels)) != len(self.levels):
            raise CorpusError("factor levels must be distinct")
        if len(self.levels) < 2:
            raise CorpusError("factor needs at least two levels")
        if not 0 <= self.reference_level < len(self.levels):
            raise CorpusError("reference_level out of range")

    def index(self, label) -> int:
        """Resolve a level given as label or integer index."""
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < len(self.levels):
                raise UnknownGroupError(f"level index {label} out of range")
            return int(label)
        try:
            return self.levels.index(label)
        except ValueError:
            raise UnknownGroupError(
                f"unknown group label {label!r}; levels are {list(self.levels)}"
            ) from None


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker: str
    level: int
    errors: int
    ref_words: int
    covariates: tuple[float, ...] = ()

    def __post_init__(self):
        if self.ref_words < 1:
            raise CorpusError(f"utterance {self.id!r}: ref_words must be >= 1")
        if self.errors < 0:
            raise CorpusError(f"utterance {self.id!r}: negative error count")


class Corpus:
    """Immutable collection of utterances plus the factor of interest.

    Numeric views are materialized once, in a canonical row order (sorted
    by utterance id, then speaker), so downstream fits are bit-identical
    under any permutation of the input records.
    """

    def __init__(
        self,
        factor: GroupFactor,
        utterances: Sequence[Utterance],
        covariate_names: tuple[str, ...] = (),
        n_excluded: int = 0,
        utterance_level_factor: bool = False,
    ):
        self.factor = factor
        self.utterances = tuple(utterances)
        self.covariate_names = tuple(covariate_names)
        self.n_excluded = int(n_excluded)
        if not self.utterances:
            raise CorpusError("corpus has no utterances")
        dim = len(self.covariate_names)
        for u in self.utterances:
            if len(u.covariates) != dim:
                raise CorpusError(
                    f"utterance {u.id!r}: covariate vector length {len(u.covariates)}"
                    f" != corpus dimension {dim}"
                )
            if not 0 <= u.level < len(factor.levels):
                raise CorpusError(f"utterance {u.id!r}: level index out of range")
        if not utterance_level_factor:
            seen: dict[str, int] = {}
            for u in self.utterances:
                prev = seen.setdefault(u.speaker, u.level)
                if prev != u.level:
                    raise SpeakerGroupConflictError(
                        f"speaker {u.speaker!r} appears under levels "
                        f"{factor.levels[prev]!r} and {factor.levels[u.level]!r}"
                    )
        present = {u.level for u in self.utterances}
        for idx, label in enumerate(factor.levels):
            if idx not in present:
                raise MissingLevelError(f"level {label!r} has no utterances")
        self.utterance_level_factor = bool(utterance_level_factor)

        ids = np.array([u.id for u in self.utterances])
        speakers = np.array([u.speaker for u in self.utterances])
        levels = np.array([u.level for u in self.utterances], dtype=np.int64)
        errors = np.array([u.errors for u in self.utterances], dtype=np.float64)
        words = np.array([u.ref_words for u in self.utterances], dtype=np.float64)
        order = np.lexsort((words, errors, levels, speakers, ids))
        self.ids = ids[order]
        self.speakers = speakers[order]
        self.levels = levels[order]
        self.errors = errors[order]
        self.words = words[order]
        cov = np.array(
            [u.covariates for u in self.utterances], dtype=np.float64
        ).reshape(len(self.utterances), dim)
        self.cov = cov[order]
        # dense speaker codes in sorted-id order
        uniq, codes = np.unique(self.speakers, return_inverse=True)
        self.speaker_labels = uniq
        self.speaker_codes = codes.astype(np.int64)

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def n_speakers(self) -> int:
        return len(self.speaker_labels)

    def snapshot(self) -> tuple:
        """Cheap fingerprint used to verify two fits saw the same data."""
        return (
            len(self.utterances),
            int(self.errors.sum()),
            int(self.words.sum()),
            self.factor.levels,
        )


@dataclass(frozen=True)
class LoadOptions:
    normalize: bool = True
    factor_name: str = "group"
    levels: Optional[tuple[str, ...]] = None
    reference_level: Optional[str] = None
    covariate_names: Optional[tuple[str, ...]] = None
    utterance_level_factor: bool = False
    fmt: Optional[str] = None  # "jsonl" | "csv" | None (by extension)


def _parse_cov(raw, utt_id):
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise NonNumericCovariateError(
            f"utterance {utt_id!r}: non-numeric covariate value in {raw!r}"
        ) from None


def _iter_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None


def _iter_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        cov_cols = sorted(
            (c for c in reader.fieldnames or [] if c.startswith("cov_")),
            key=lambda c: int(c.split("_", 1)[1]),
        )
        for row in reader:
            rec = {k: v for k, v in row.items() if not k.startswith("cov_") and v != ""}
            if cov_cols:
                rec["cov"] = [row[c] for c in cov_cols]
            yield rec


def load_corpus(path, options: LoadOptions = LoadOptions()) -> Corpus:
    """Load a corpus file, aligning text records and dropping empty references.

    Records with empty reference text do not contribute to modeling; they
    are counted in Corpus.n_excluded so the exclusion stays auditable.
    """
    if not os.path.exists(path):
        raise CorpusError(f"file not found: {path}")
    fmt = options.fmt or ("csv" if str(path).endswith(".csv") else "jsonl")
    records = _iter_csv(path) if fmt == "csv" else _iter_jsonl(path)

    level_order: list[str] = list(options.levels) if options.levels else []
    utterances: list[Utterance] = []
    raw: list[tuple] = []
    n_excluded = 0
    schema = None
    cov_dim = None
    for idx, rec in enumerate(records):
        utt_id = str(rec.get("id", idx))
        if "speaker" not in rec or "group" not in rec:
            raise CorpusError(f"utterance {utt_id!r}: missing speaker or group field")
        speaker = str(rec["speaker"])
        group = str(rec["group"])
        has_text = "ref" in rec or "hyp" in rec
        has_counts = "errors" in rec or "words" in rec
        if has_text and has_counts:
            raise MixedSchemaError(
                f"utterance {utt_id!r}: supplies both text and count fields"
            )
        if has_text:
            if "ref" not in rec or "hyp" not in rec:
                raise CorpusError(f"utterance {utt_id!r}: needs both ref and hyp")
            kind = "text"
        elif has_counts:
            if "errors" not in rec or "words" not in rec:
                raise CorpusError(f"utterance {utt_id!r}: needs both errors and words")
            kind = "counts"
        else:
            raise CorpusError(
                f"utterance {utt_id!r}: needs ref+hyp or errors+words fields"
            )
        if schema is None:
            schema = kind
        elif schema != kind:
            raise MixedSchemaError(
                f"utterance {utt_id!r}: {kind} record in a {schema}-record file"
            )

        cov = _parse_cov(rec.get("cov", ()), utt_id)
        if cov_dim is None:
            cov_dim = len(cov)
        elif len(cov) != cov_dim:
            raise NonNumericCovariateError(
                f"utterance {utt_id!r}: covariate length {len(cov)} != {cov_dim}"
            )

        if kind == "text":
            ref = alignment.tokenize(str(rec["ref"]), normalize=options.normalize)
            hyp = alignment.tokenize(str(rec["hyp"]), normalize=options.normalize)
            if not ref:
                n_excluded += 1
                continue
            counts = alignment.align(ref, hyp)
            errors, words = counts.total(), counts.ref_words
        else:
            try:
                errors, words = int(rec["errors"]), int(rec["words"])
            except (TypeError, ValueError):
                raise CorpusError(
                    f"utterance {utt_id!r}: non-integer errors/words"
                ) from None
            if words < 1:
                n_excluded += 1
                continue

        if options.levels is not None and group not in level_order:
            raise UnknownGroupError(
                f"utterance {utt_id!r}: unknown group label {group!r}"
            )
        if group not in level_order:
            level_order.append(group)
        raw.append((utt_id, speaker, group, errors, words, cov))

    if not raw:
        raise CorpusError(f"{path}: no usable utterances ({n_excluded} excluded)")
    ref_level = 0
    if options.reference_level is not None:
        if options.reference_level not in level_order:
            raise UnknownGroupError(
                f"reference level {options.reference_level!r} not among levels"
            )
        ref_level = level_order.index(options.reference_level)
    factor = GroupFactor(options.factor_name, tuple(level_order), ref_level)
    for utt_id, speaker, group, errors, words, cov in raw:
        utterances.append(
            Utterance(utt_id, speaker, level_order.index(group), errors, words, cov)
        )
    names = options.covariate_names or tuple(f"cov_{i}" for i in range(cov_dim or 0))
    if len(names) != (cov_dim or 0):
        raise CorpusError(
            f"covariate_names has {len(names)} entries for dimension {cov_dim}"
        )
    return Corpus(
        factor,
        utterances,
        covariate_names=names,
        n_excluded=n_excluded,
        utterance_level_factor=options.utterance_level_factor,
    )


def summarize(corpus: Corpus) -> dict:
    """Per-level utterance/speaker/word/error counts and empirical WER."""
    rows = []
    for idx, label in enumerate(corpus.factor.levels):
        mask = corpus.levels == idx
        errors = int(corpus.errors[mask].sum())
        words = int(corpus.words[mask].sum())
        rows.append(
            {
                "level": label,
                "n_utterances": int(mask.sum()),
                "n_speakers": int(np.unique(corpus.speakers[mask]).size),
                "words": words,
                "errors": errors,
                "wer": errors / words,
            }
        )
    total_errors = int(corpus.errors.sum())
    total_words = int(corpus.words.sum())
    return {
        "factor": corpus.factor.name,
        "levels": rows,
        "n_utterances": len(corpus),
        "n_speakers": corpus.n_speakers,
        "n_excluded": corpus.n_excluded,
        "words": total_words,
        "errors": total_errors,
        "wer": total_errors / total_words,
    }
