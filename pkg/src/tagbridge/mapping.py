"""Cross-lingual annotation scoring.

Given a music item's tags in a source language, every scorer produces one
real-valued score per tag of a target-language vocabulary. The embedding
scorer averages cosine similarities between each source tag vector and the
candidate target vector; the translation scorer averages one-hot indicator
vectors from a lookup table; the geodesic scorer averages inverse graph
distances. All three feed the same corpus-annotation pathway, and ranking
them per item is what the evaluation layer measures.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import ValidationError
from .ontology import ConceptGraph, geodesic_scores
from .validation import as_float_vector
from .vectors import EmbeddingSet

logger = logging.getLogger(__name__)

Scorer = Callable[[frozenset[str]], np.ndarray]


@dataclass(frozen=True)
class TagVocabulary:
    """Ordered tag list for one language; order defines score-vector indexing."""

    language: str
    tags: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.tags)) != len(self.tags):
            raise ValidationError(f"duplicate tags in {self.language!r} vocabulary")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tags)})

    def __len__(self) -> int:
        return len(self.tags)

    def __contains__(self, tag: str) -> bool:
        return tag in self._index

    def index(self, tag: str) -> int:
        return self._index[tag]


class TranslationTable:
    """Source tag → at most one target tag."""

    def __init__(self, entries: Mapping[str, str]):
        self.entries = dict(entries)

    def translate(self, tag: str) -> str | None:
        return self.entries.get(tag)

    def __len__(self) -> int:
        return len(self.entries)


def cosine(u, v) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    u = as_float_vector(u, "u")
    v = as_float_vector(v, "v")
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (float(nu) * float(nv))


def score_targets(
    source_tags: Iterable[str],
    src_emb: EmbeddingSet,
    tgt_emb: EmbeddingSet,
    tgt_vocab: TagVocabulary,
) -> np.ndarray:
    """Mean cosine similarity of each target tag to the source tag set.

    Raises if any source tag or vocabulary tag lacks an embedding, or if the
    two embedding sets disagree on dimension.
    """
    tags = sorted(set(source_tags))
    if not tags:
        raise ValidationError("source tag set must be non-empty")
    if src_emb.dimension != tgt_emb.dimension:
        raise ValidationError(
            f"dimension mismatch: source {src_emb.dimension}, target {tgt_emb.dimension}"
        )
    target_unit = _unit_rows(np.stack([tgt_emb.vector(t) for t in tgt_vocab.tags]))
    scores = np.zeros(len(tgt_vocab))
    for tag in tags:
        vec = src_emb.vector(tag)
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            scores += target_unit @ (vec / norm)
    return scores / len(tags)


def translation_scores(
    source_tags: Iterable[str],
    table: TranslationTable,
    tgt_vocab: TagVocabulary,
) -> np.ndarray:
    """Mean of one-hot translation indicators over the source tag set.

    A source tag with no translation, or whose translation is outside the
    vocabulary, contributes an all-zero vector. Values lie in [0, 1].
    """
    tags = sorted(set(source_tags))
    scores = np.zeros(len(tgt_vocab))
    for tag in tags:
        translated = table.translate(tag)
        if translated is not None and translated in tgt_vocab:
            scores[tgt_vocab.index(translated)] += 1.0
    if tags:
        scores /= len(tags)
    return scores


@dataclass
class ScoreMatrix:
    """Per-item scores over a target vocabulary, paired with ground truth."""

    item_ids: tuple[str, ...]
    target_tags: tuple[str, ...]
    scores: np.ndarray
    truth: np.ndarray
    skipped_items: int = 0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.truth = np.asarray(self.truth, dtype=np.int8)
        expected = (len(self.item_ids), len(self.target_tags))
        if self.scores.shape != expected or self.truth.shape != expected:
            raise ValidationError(
                f"score/truth shapes {self.scores.shape}/{self.truth.shape} "
                f"do not match {expected}"
            )


class EmbeddingScorer:
    """Callable wrapper around :func:`score_targets` with a cached, unit-norm
    target matrix so corpus-wide annotation avoids re-normalizing per item."""

    def __init__(self, src_emb: EmbeddingSet, tgt_emb: EmbeddingSet, tgt_vocab: TagVocabulary):
        if src_emb.dimension != tgt_emb.dimension:
            raise ValidationError(
                f"dimension mismatch: source {src_emb.dimension}, target {tgt_emb.dimension}"
            )
        self.src_emb = src_emb
        self.tgt_vocab = tgt_vocab
        self._target_unit = _unit_rows(
            np.stack([tgt_emb.vector(t) for t in tgt_vocab.tags])
        )

    def __call__(self, source_tags: Iterable[str]) -> np.ndarray:
        tags = sorted(set(source_tags))
        if not tags:
            raise ValidationError("source tag set must be non-empty")
        scores = np.zeros(len(self.tgt_vocab))
        for tag in tags:
            vec = self.src_emb.vector(tag)
            norm = np.linalg.norm(vec)
            if norm > 0.0:
                scores += self._target_unit @ (vec / norm)
        return scores / len(tags)


class TranslationScorer:
    """Callable wrapper around :func:`translation_scores`; counts misses."""

    def __init__(self, table: TranslationTable, tgt_vocab: TagVocabulary):
        self.table = table
        self.tgt_vocab = tgt_vocab
        self.untranslated = 0

    def __call__(self, source_tags: Iterable[str]) -> np.ndarray:
        tags = sorted(set(source_tags))
        for tag in tags:
            translated = self.table.translate(tag)
            if translated is None or translated not in self.tgt_vocab:
                self.untranslated += 1
        return translation_scores(tags, self.table, self.tgt_vocab)


class GeodesicScorer:
    """Score targets by inverse graph distance from the source tags.

    ``source_key``/``target_key`` map raw tags to concept identifiers in the
    (typically merged, language-prefixed) graph. Per-source breadth-first
    searches are cached across items.
    """

    def __init__(
        self,
        graph: ConceptGraph,
        tgt_vocab: TagVocabulary,
        source_key: Callable[[str], str] = lambda t: t,
        target_key: Callable[[str], str] = lambda t: t,
    ):
        self.graph = graph
        self.tgt_vocab = tgt_vocab
        self.source_key = source_key
        self.target_concepts = [target_key(t) for t in tgt_vocab.tags]
        self.missing_sources = 0
        self.missing_targets = 0
        self._cache: dict[str, dict[str, int]] = {}

    def __call__(self, source_tags: Iterable[str]) -> np.ndarray:
        sources = [self.source_key(t) for t in sorted(set(source_tags))]
        result = geodesic_scores(
            self.graph, sources, self.target_concepts, distance_cache=self._cache
        )
        self.missing_sources += result.missing_sources
        self.missing_targets = result.missing_targets
        return result.scores


def annotate_corpus(
    corpus,
    scorer: Scorer,
    src_lang: str,
    tgt_lang: str,
    tgt_vocab: TagVocabulary,
) -> ScoreMatrix:
    """Score every item of the corpus's language-pair view.

    One score row per item over ``tgt_vocab``, with the binary ground-truth
    matrix built from the item's target-language tags. Items without source
    tags are skipped and counted (the corpus loader normally filters them).
    """
    items = corpus.pair_items(src_lang, tgt_lang)
    ids: list[str] = []
    score_rows: list[np.ndarray] = []
    truth_rows: list[np.ndarray] = []
    skipped = 0
    for item_id, tags_by_lang in items:
        source = tags_by_lang.get(src_lang, frozenset())
        if not source:
            skipped += 1
            continue
        ids.append(item_id)
        score_rows.append(scorer(frozenset(source)))
        row = np.zeros(len(tgt_vocab), dtype=np.int8)
        for tag in tags_by_lang.get(tgt_lang, frozenset()):
            if tag in tgt_vocab:
                row[tgt_vocab.index(tag)] = 1
        truth_rows.append(row)
    if skipped:
        logger.warning("skipped %d item(s) without source-language tags", skipped)
    n, m = len(ids), len(tgt_vocab)
    return ScoreMatrix(
        item_ids=tuple(ids),
        target_tags=tgt_vocab.tags,
        scores=np.vstack(score_rows) if score_rows else np.empty((0, m)),
        truth=np.vstack(truth_rows) if truth_rows else np.empty((0, m), dtype=np.int8),
        skipped_items=skipped,
    )


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Normalize rows to unit length; all-zero rows stay zero."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.where(norms == 0.0, 1.0, norms)
