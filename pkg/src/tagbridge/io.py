"""File ingestion and persistence.

All files are UTF-8 text. Formats:

* corpus: ``item_id<TAB>language<TAB>tag1|tag2|...``
* embeddings / token tables: header ``N d`` then ``id v1 ... vd`` per line;
  identifiers may contain spaces, so the trailing ``d`` fields are the
  vector and everything before them is the identifier
* translation table: ``source_tag<TAB>target_tag``
* score matrices: header ``item_id<TAB>tag...`` then one row per item
* fold assignment: ``item_id<TAB>fold``
* run manifest / reports: JSON with sorted keys
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .compose import TokenTable
from .errors import ParseError, ValidationError
from .evaluation import CrossValidationReport, EvalReport, FoldAssignment
from .mapping import ScoreMatrix, TranslationTable
from .vectors import EmbeddingSet

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"

# %.17g round-trips any float64 exactly
_FLOAT_FORMAT = ".17g"


@dataclass(frozen=True)
class AnnotationCorpus:
    """Items with per-language tag sets.

    Each item is ``(item_id, {language: frozenset(tags)})`` with every stored
    tag set non-empty. A language-pair view keeps only items tagged in both
    languages of the pair.
    """

    items: tuple[tuple[str, Mapping[str, frozenset[str]]], ...]
    dropped_tags: Mapping[str, frozenset[str]] = None
    duplicates_merged: int = 0

    def __post_init__(self):
        if self.dropped_tags is None:
            object.__setattr__(self, "dropped_tags", {})
        ids = [item_id for item_id, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate item ids in corpus")
        for item_id, by_lang in self.items:
            for lang, tags in by_lang.items():
                if not tags:
                    raise ValidationError(f"item {item_id!r} has an empty tag set for {lang!r}")

    @property
    def languages(self) -> frozenset[str]:
        langs: set[str] = set()
        for _, by_lang in self.items:
            langs.update(by_lang)
        return frozenset(langs)

    def __len__(self) -> int:
        return len(self.items)

    def pair_items(self, src_lang: str, tgt_lang: str):
        """Items tagged in both languages, restricted to those two languages."""
        out = []
        for item_id, by_lang in self.items:
            if by_lang.get(src_lang) and by_lang.get(tgt_lang):
                out.append(
                    (item_id, {src_lang: by_lang[src_lang], tgt_lang: by_lang[tgt_lang]})
                )
        return tuple(out)

    def pair_view(self, src_lang: str, tgt_lang: str) -> "AnnotationCorpus":
        return AnnotationCorpus(items=self.pair_items(src_lang, tgt_lang))

    def tag_vocabulary(self, language: str, pair: tuple[str, str] | None = None) -> tuple[str, ...]:
        """Sorted unique tags of ``language``, optionally over a pair view."""
        items = self.pair_items(*pair) if pair else self.items
        tags: set[str] = set()
        for _, by_lang in items:
            tags.update(by_lang.get(language, frozenset()))
        return tuple(sorted(tags))


@dataclass(frozen=True)
class LanguageStats:
    unique_tags: int
    total_occurrences: int
    mean_tags_per_item: float
    std_tags_per_item: float


@dataclass(frozen=True)
class CorpusStats:
    item_count: int
    per_language: Mapping[str, LanguageStats]


def load_corpus(source, min_tag_count: int | None = None) -> AnnotationCorpus:
    """Parse a corpus file; optionally drop tags rarer than ``min_tag_count``.

    Duplicate (item, language) records are merged with a warning. When the
    frequency filter empties an item's tag set for some language, that
    language entry is removed; items left with no languages are dropped.
    """
    lines, path = _as_lines(source)
    records: dict[str, dict[str, set[str]]] = {}
    duplicates = 0
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3 or not all(f.strip() for f in fields):
            raise ParseError(
                "expected item_id<TAB>language<TAB>tags", line_number=number, path=path
            )
        item_id, lang, tag_field = (f.strip() for f in fields)
        tags = {t.strip() for t in tag_field.split("|") if t.strip()}
        if not tags:
            raise ParseError("empty tag list", line_number=number, path=path)
        by_lang = records.setdefault(item_id, {})
        if lang in by_lang:
            duplicates += 1
            by_lang[lang] |= tags
        else:
            by_lang[lang] = tags
    if duplicates:
        logger.warning("merged %d duplicate (item, language) record(s)", duplicates)

    dropped: dict[str, frozenset[str]] = {}
    if min_tag_count is not None:
        from collections import Counter

        counts: dict[str, Counter] = {}
        for by_lang in records.values():
            for lang, tags in by_lang.items():
                counts.setdefault(lang, Counter()).update(tags)
        for lang, counter in counts.items():
            rare = frozenset(t for t, c in counter.items() if c < min_tag_count)
            if rare:
                dropped[lang] = rare
        for by_lang in records.values():
            for lang in list(by_lang):
                by_lang[lang] -= dropped.get(lang, frozenset())
                if not by_lang[lang]:
                    del by_lang[lang]

    items = tuple(
        (item_id, {lang: frozenset(tags) for lang, tags in sorted(by_lang.items())})
        for item_id, by_lang in records.items()
        if by_lang
    )
    return AnnotationCorpus(items=items, dropped_tags=dropped, duplicates_merged=duplicates)


def save_corpus(corpus: AnnotationCorpus, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item_id, by_lang in corpus.items:
            for lang in sorted(by_lang):
                handle.write(f"{item_id}\t{lang}\t" + "|".join(sorted(by_lang[lang])) + "\n")


def corpus_stats(corpus: AnnotationCorpus, pair: tuple[str, str]) -> CorpusStats:
    """Item count and per-language tag statistics over a pair view."""
    for lang in pair:
        if lang not in corpus.languages:
            raise ValidationError(f"unknown language {lang!r}")
    items = corpus.pair_items(*pair)
    per_language: dict[str, LanguageStats] = {}
    for lang in pair:
        sizes = [len(by_lang[lang]) for _, by_lang in items]
        unique: set[str] = set()
        for _, by_lang in items:
            unique.update(by_lang[lang])
        per_language[lang] = LanguageStats(
            unique_tags=len(unique),
            total_occurrences=int(np.sum(sizes)) if sizes else 0,
            mean_tags_per_item=float(np.mean(sizes)) if sizes else 0.0,
            std_tags_per_item=float(np.std(sizes)) if sizes else 0.0,
        )
    return CorpusStats(item_count=len(items), per_language=per_language)


def save_embeddings(embeddings: EmbeddingSet, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(embeddings)} {embeddings.dimension}\n")
        for concept, vector in embeddings.items():
            handle.write(concept + " " + _format_row(vector) + "\n")


def load_embeddings(path) -> EmbeddingSet:
    ids, matrix = _read_vector_file(path)
    return EmbeddingSet(ids, matrix)


def save_token_table(table: TokenTable, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(table)} {table.dimension}\n")
        for token, vector in zip(table.tokens, table.matrix):
            handle.write(token + " " + _format_row(vector) + "\n")


def load_token_table(path) -> TokenTable:
    ids, matrix = _read_vector_file(path, dedupe=True)
    return TokenTable(ids, matrix)


def load_translation_table(source) -> TranslationTable:
    """Parse ``source_tag<TAB>target_tag`` lines; first occurrence wins."""
    lines, path = _as_lines(source)
    entries: dict[str, str] = {}
    duplicates = 0
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not all(f.strip() for f in fields):
            raise ParseError(
                "expected source_tag<TAB>target_tag", line_number=number, path=path
            )
        src, tgt = fields[0].strip(), fields[1].strip()
        if src in entries:
            duplicates += 1
            continue
        entries[src] = tgt
    if duplicates:
        logger.warning("ignored %d duplicate translation source(s)", duplicates)
    return TranslationTable(entries)


def save_score_matrix(matrix: ScoreMatrix, scores_path, truth_path=None) -> None:
    header = "item_id\t" + "\t".join(matrix.target_tags) + "\n"
    with open(scores_path, "w", encoding="utf-8") as handle:
        handle.write(header)
        for item_id, row in zip(matrix.item_ids, matrix.scores):
            handle.write(item_id + "\t" + "\t".join(format(x, _FLOAT_FORMAT) for x in row) + "\n")
    if truth_path is not None:
        with open(truth_path, "w", encoding="utf-8") as handle:
            handle.write(header)
            for item_id, row in zip(matrix.item_ids, matrix.truth):
                handle.write(item_id + "\t" + "\t".join(str(int(x)) for x in row) + "\n")


def load_score_matrix(scores_path, truth_path) -> ScoreMatrix:
    ids, tags, scores = _read_tsv_matrix(scores_path)
    truth_ids, truth_tags, truth = _read_tsv_matrix(truth_path)
    if truth_ids != ids or truth_tags != tags:
        raise ParseError("score and truth files disagree on items or tags", path=truth_path)
    return ScoreMatrix(
        item_ids=ids, target_tags=tags, scores=scores, truth=truth.astype(np.int8)
    )


def save_fold_assignment(folds: FoldAssignment, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item, fold in folds.fold_of.items():
            handle.write(f"{item}\t{fold}\n")


def load_fold_assignment(path) -> FoldAssignment:
    lines, _ = _as_lines(path)
    fold_of: dict[str, int] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError("expected item_id<TAB>fold", line_number=number, path=path)
        fold_of[fields[0]] = int(fields[1])
    return FoldAssignment(fold_of=fold_of, k=max(fold_of.values()) + 1 if fold_of else 0)


def save_eval_report_tsv(report: EvalReport, path) -> None:
    """Per-tag AUC table; undefined entries written as NA."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("tag\tauc\n")
        for tag, auc in report.per_tag_auc.items():
            value = "NA" if auc is None else format(auc, _FLOAT_FORMAT)
            handle.write(f"{tag}\t{value}\n")


def save_cross_validation_report(
    report: CrossValidationReport, json_path, config_echo: Mapping | None = None
) -> None:
    payload = {
        "mean_macro_auc": report.mean_macro_auc,
        "std_macro_auc": report.std_macro_auc,
        "fold_macro_aucs": list(report.fold_macro_aucs),
        "skipped_tags_per_fold": [sorted(r.skipped_tags) for r in report.fold_reports],
        "config": dict(config_echo) if config_echo else {},
    }
    write_json(payload, json_path)


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run byte-for-byte."""

    inputs: Mapping[str, str]
    parameters: Mapping[str, object]
    seed: int | None
    tool_version: str = TOOL_VERSION


def file_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    input_paths: Mapping[str, object], parameters: Mapping[str, object], seed: int | None
) -> RunManifest:
    digests = {label: file_digest(p) for label, p in sorted(input_paths.items())}
    return RunManifest(inputs=digests, parameters=dict(parameters), seed=seed)


def save_manifest(manifest: RunManifest, path) -> None:
    write_json(
        {
            "inputs": dict(manifest.inputs),
            "parameters": manifest.parameters,
            "seed": manifest.seed,
            "tool_version": manifest.tool_version,
        },
        path,
    )


def load_manifest(path) -> RunManifest:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    return RunManifest(
        inputs=data["inputs"],
        parameters=data["parameters"],
        seed=data["seed"],
        tool_version=data.get("tool_version", TOOL_VERSION),
    )


def _format_row(vector: np.ndarray) -> str:
    return " ".join(format(x, _FLOAT_FORMAT) for x in vector)


def _read_vector_file(path, dedupe: bool = False):
    """Read the ``N d`` word-vector text format.

    The final ``d`` whitespace-separated fields of each line are the vector;
    the identifier is whatever precedes them (it may contain spaces).
    """
    lines, src_path = _as_lines(path)
    if not lines:
        raise ParseError("missing header line", path=src_path)
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError("header must be 'N d'", line_number=1, path=src_path)
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError("header must be 'N d' integers", line_number=1, path=src_path) from None
    if count < 0 or dim <= 0:
        raise ParseError(f"bad header counts N={count} d={dim}", line_number=1, path=src_path)

    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    skipped_duplicates = 0
    for number, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) < dim + 1:
            raise ParseError(
                f"expected an identifier plus {dim} values", line_number=number, path=src_path
            )
        identifier = " ".join(parts[: len(parts) - dim]).strip()
        if not identifier:
            raise ParseError("empty identifier", line_number=number, path=src_path)
        try:
            vector = np.array([float(x) for x in parts[len(parts) - dim :]])
        except ValueError:
            raise ParseError("non-numeric vector entry", line_number=number, path=src_path) from None
        if identifier in seen:
            if dedupe:
                skipped_duplicates += 1
                continue
            raise ParseError(f"duplicate identifier {identifier!r}", line_number=number, path=src_path)
        seen.add(identifier)
        ids.append(identifier)
        rows.append(vector)
    if len(ids) != count:
        raise ParseError(f"header says {count} rows, file has {len(ids)}", path=src_path)
    if skipped_duplicates:
        logger.warning("skipped %d duplicate token line(s)", skipped_duplicates)
    matrix = np.vstack(rows) if rows else np.empty((0, dim))
    return tuple(ids), matrix


def _read_tsv_matrix(path):
    lines, src_path = _as_lines(path)
    if not lines:
        raise ParseError("missing header", path=src_path)
    header = lines[0].rstrip("\n").split("\t")
    if header[0] != "item_id":
        raise ParseError("header must start with 'item_id'", line_number=1, path=src_path)
    tags = tuple(header[1:])
    ids: list[str] = []
    rows: list[list[float]] = []
    for number, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(tags) + 1:
            raise ParseError(
                f"expected {len(tags) + 1} columns, got {len(fields)}",
                line_number=number,
                path=src_path,
            )
        ids.append(fields[0])
        try:
            rows.append([float(x) for x in fields[1:]])
        except ValueError:
            raise ParseError("non-numeric entry", line_number=number, path=src_path) from None
    matrix = np.array(rows) if rows else np.empty((0, len(tags)))
    return tuple(ids), tags, matrix


def write_json(payload, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _as_lines(source):
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path, encoding="utf-8") as handle:
            return handle.readlines(), path
    return list(source), None
