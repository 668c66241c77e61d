"""Config-driven orchestration of the annotation pipeline.

Stages hand off through files under ``output_dir`` so each one can be run,
inspected and re-run independently:

    compose/   one embedding file per language
    retrofit/  refined embedding files + solver report
    annotate/  score and ground-truth matrices for the language pair
    evaluate/  cross-validated report, per-tag table, fold assignment

Every stage writes a manifest (input digests, parameters, seed, version);
equal manifests imply byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import io as tbio
from .compose import DEFAULT_SIF_A, build_tag_embeddings, remove_first_component
from .errors import ConfigError
from .mapping import (
    EmbeddingScorer,
    GeodesicScorer,
    TagVocabulary,
    TranslationScorer,
    annotate_corpus,
)
from .evaluation import CrossValidationReport, cross_validate
from .ontology import (
    DEFAULT_RELATION_CLASSES,
    load_alignment,
    load_graph,
    load_relation_classes,
    merge_aligned,
    prefix_concepts,
)
from .retrofit import direct_solve, jacobi_retrofit
from .vectors import ComposedEmbeddings, EmbeddingSet

logger = logging.getLogger(__name__)

STRATEGIES = ("avg", "sif")
SCORERS = ("embedding", "translation", "geodesic")
RETROFIT_MODES = ("off", "monolingual", "aligned")
SOLVERS = ("jacobi", "direct")

_KNOWN_KEYS = {
    "source_language", "target_language", "token_tables", "graphs",
    "relation_classes", "alignment", "corpus", "translation_table",
    "strategy", "sif_a", "joint_pc", "scorer", "retrofit_mode",
    "known_languages", "tol", "max_iter", "solver", "folds", "seed",
    "min_tag_count", "output_dir", "jobs",
}


@dataclass
class PipelineConfig:
    """Declarative description of one language-pair experiment.

    All paths are resolved relative to ``base_dir`` (the config file's
    directory when loaded from JSON).
    """

    source_language: str = ""
    target_language: str = ""
    corpus: str = ""
    token_tables: dict[str, str] = field(default_factory=dict)
    graphs: dict[str, str] = field(default_factory=dict)
    relation_classes: str | None = None
    alignment: str | None = None
    translation_table: str | None = None
    strategy: str = "sif"
    sif_a: float = DEFAULT_SIF_A
    joint_pc: bool = False
    scorer: str = "embedding"
    retrofit_mode: str = "off"
    known_languages: tuple[str, ...] = ()
    tol: float = 1e-6
    max_iter: int = 1000
    solver: str = "jacobi"
    folds: int = 3
    seed: int = 13
    min_tag_count: int | None = None
    output_dir: str = "out"
    jobs: int = 1
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def from_json(cls, path, overrides: Mapping[str, object] | None = None) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"{path}: unknown config key(s): {sorted(unknown)}")
        if "known_languages" in data:
            data["known_languages"] = tuple(data["known_languages"])
        cfg = cls(base_dir=path.parent, **data)
        cfg.validate()
        return cfg

    def resolve(self, relative: str) -> Path:
        return (self.base_dir / relative).expanduser()

    @property
    def languages(self) -> tuple[str, str]:
        return (self.source_language, self.target_language)

    def validate(self) -> None:
        if not self.source_language or not self.target_language:
            raise ConfigError("source_language and target_language are required")
        if self.source_language == self.target_language:
            raise ConfigError("source and target languages must differ")
        if not self.corpus:
            raise ConfigError("corpus path is required")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.scorer not in SCORERS:
            raise ConfigError(f"scorer must be one of {SCORERS}, got {self.scorer!r}")
        if self.retrofit_mode not in RETROFIT_MODES:
            raise ConfigError(
                f"retrofit_mode must be one of {RETROFIT_MODES}, got {self.retrofit_mode!r}"
            )
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.scorer == "embedding":
            for lang in self.languages:
                if lang not in self.token_tables:
                    raise ConfigError(f"token table for {lang!r} is required")
        if self.scorer == "translation" and not self.translation_table:
            raise ConfigError("translation scorer requires translation_table")
        if self.scorer == "geodesic":
            if not self.alignment:
                raise ConfigError("geodesic scorer requires an alignment file")
            for lang in self.languages:
                if lang not in self.graphs:
                    raise ConfigError(f"geodesic scorer requires a graph for {lang!r}")
        if self.retrofit_mode != "off":
            for lang in self.languages:
                if lang not in self.graphs:
                    raise ConfigError(f"retrofit requires a graph for {lang!r}")
        if self.retrofit_mode == "aligned":
            if not self.alignment:
                raise ConfigError("aligned retrofit requires an alignment file")
            if not self.known_languages:
                raise ConfigError("aligned retrofit requires a non-empty known_languages")
            bad = set(self.known_languages) - set(self.languages)
            if bad:
                raise ConfigError(f"known_languages outside the pair: {sorted(bad)}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def echo(self) -> dict:
        data = dataclasses.asdict(self)
        data["base_dir"] = str(data["base_dir"])
        data["known_languages"] = list(self.known_languages)
        return data

    def out_path(self, *parts: str) -> Path:
        path = self.resolve(self.output_dir).joinpath(*parts)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path


def run_compose(cfg: PipelineConfig) -> dict[str, Path]:
    """Compose per-language tag embeddings for the pair's vocabularies.

    Each language's tag list is its corpus vocabulary over the pair view,
    united with its graph's concepts when a graph is configured. With
    ``joint_pc`` the common-direction removal is fitted over both languages'
    stacked matrices instead of per language.
    """
    corpus = tbio.load_corpus(cfg.resolve(cfg.corpus), min_tag_count=cfg.min_tag_count)
    relation_classes = _relation_classes(cfg)
    inputs: dict[str, Path] = {"corpus": cfg.resolve(cfg.corpus)}

    tags_by_lang: dict[str, list[str]] = {}
    tables = {}
    for lang in cfg.languages:
        tags = list(corpus.tag_vocabulary(lang, pair=cfg.languages))
        if lang in cfg.graphs:
            graph = load_graph(cfg.resolve(cfg.graphs[lang]), relation_classes)
            tags = sorted(set(tags) | set(graph.concepts))
            inputs[f"graph_{lang}"] = cfg.resolve(cfg.graphs[lang])
        tags_by_lang[lang] = tags
        tables[lang] = tbio.load_token_table(cfg.resolve(cfg.token_tables[lang]))
        inputs[f"token_table_{lang}"] = cfg.resolve(cfg.token_tables[lang])

    def compose_one(lang: str) -> ComposedEmbeddings:
        return build_tag_embeddings(
            tags_by_lang[lang], tables[lang], strategy=cfg.strategy, a=cfg.sif_a,
            remove_common_direction=not cfg.joint_pc,
        )

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            composed = dict(zip(cfg.languages, pool.map(compose_one, cfg.languages)))
    else:
        composed = {lang: compose_one(lang) for lang in cfg.languages}

    if cfg.joint_pc and cfg.strategy == "sif":
        stacked = np.vstack([composed[lang].matrix for lang in cfg.languages])
        projected = remove_first_component(stacked)
        offset = 0
        for lang in cfg.languages:
            old = composed[lang]
            block = projected[offset : offset + len(old)]
            offset += len(old)
            composed[lang] = ComposedEmbeddings(
                old.ids, block, empty_tags=old.empty_tags, oov_tags=old.oov_tags
            )

    paths: dict[str, Path] = {}
    for lang in cfg.languages:
        paths[lang] = cfg.out_path("compose", f"{lang}.vec")
        tbio.save_embeddings(composed[lang], paths[lang])
    manifest = tbio.build_manifest(
        inputs,
        {
            "stage": "compose",
            "strategy": cfg.strategy,
            "sif_a": cfg.sif_a,
            "joint_pc": cfg.joint_pc,
            "min_tag_count": cfg.min_tag_count,
        },
        seed=None,
    )
    tbio.save_manifest(manifest, cfg.out_path("compose", "manifest.json"))
    return paths


def run_retrofit(cfg: PipelineConfig) -> dict[str, Path]:
    """Refine composed embeddings against the configured graphs.

    ``monolingual`` solves each language on its own graph; ``aligned``
    merges the language-prefixed graphs through the alignment file and
    anchors only the known languages' non-zero vectors, learning the other
    language's vectors from scratch. Concepts outside the graph keep their
    composed vectors.
    """
    if cfg.retrofit_mode == "off":
        raise ConfigError("retrofit_mode is 'off'; nothing to retrofit")
    relation_classes = _relation_classes(cfg)
    inputs: dict[str, Path] = {}
    composed: dict[str, EmbeddingSet] = {}
    for lang in cfg.languages:
        path = cfg.out_path("compose", f"{lang}.vec")
        if not path.exists():
            raise ConfigError(f"missing composed embeddings {path}; run compose first")
        composed[lang] = tbio.load_embeddings(path)
        inputs[f"composed_{lang}"] = path
        inputs[f"graph_{lang}"] = cfg.resolve(cfg.graphs[lang])

    graphs = {
        lang: load_graph(cfg.resolve(cfg.graphs[lang]), relation_classes)
        for lang in cfg.languages
    }

    reports: dict[str, dict] = {}
    results: dict[str, EmbeddingSet] = {}
    if cfg.retrofit_mode == "monolingual":

        def retrofit_one(lang: str):
            initial = composed[lang]
            known = _nonzero_ids(initial) & set(graphs[lang].concepts)
            return _solve(cfg, graphs[lang], initial, known)

        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                solved = dict(zip(cfg.languages, pool.map(retrofit_one, cfg.languages)))
        else:
            solved = {lang: retrofit_one(lang) for lang in cfg.languages}
        for lang in cfg.languages:
            learned, report = solved[lang]
            results[lang] = _overlay(composed[lang], learned)
            reports[lang] = report
    else:
        src, tgt = cfg.languages
        alignment = load_alignment(cfg.resolve(cfg.alignment))
        inputs["alignment"] = cfg.resolve(cfg.alignment)
        merged = merge_aligned(
            prefix_concepts(graphs[src], f"{src}:"),
            prefix_concepts(graphs[tgt], f"{tgt}:"),
            [(f"{src}:{a}", f"{tgt}:{b}") for a, b in alignment],
        )
        vectors: dict[str, np.ndarray] = {}
        known: set[str] = set()
        for lang in cfg.known_languages:
            for concept, vec in composed[lang].items():
                qualified = f"{lang}:{concept}"
                vectors[qualified] = vec
                if np.any(vec) and qualified in merged:
                    known.add(qualified)
        initial = EmbeddingSet.from_mapping(vectors, known=known)
        learned, report = _solve(cfg, merged, initial, known)
        reports["aligned"] = report
        for lang in cfg.languages:
            prefix = f"{lang}:"
            lang_vectors = {
                c[len(prefix):]: v for c, v in learned.items() if c.startswith(prefix)
            }
            base = composed[lang] if lang in cfg.known_languages else None
            if base is not None:
                for concept, vec in base.items():
                    lang_vectors.setdefault(concept, vec)
            results[lang] = EmbeddingSet.from_mapping(lang_vectors)

    paths: dict[str, Path] = {}
    for lang in cfg.languages:
        paths[lang] = cfg.out_path("retrofit", f"{lang}.vec")
        tbio.save_embeddings(results[lang], paths[lang])
    tbio.write_json(reports, cfg.out_path("retrofit", "report.json"))
    manifest = tbio.build_manifest(
        inputs,
        {
            "stage": "retrofit",
            "mode": cfg.retrofit_mode,
            "solver": cfg.solver,
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
            "known_languages": list(cfg.known_languages),
        },
        seed=None,
    )
    tbio.save_manifest(manifest, cfg.out_path("retrofit", "manifest.json"))
    return paths


def run_annotate(cfg: PipelineConfig) -> tuple[Path, Path]:
    """Score the corpus pair view with the configured scorer."""
    corpus = tbio.load_corpus(cfg.resolve(cfg.corpus), min_tag_count=cfg.min_tag_count)
    src, tgt = cfg.languages
    tgt_vocab = TagVocabulary(tgt, corpus.tag_vocabulary(tgt, pair=cfg.languages))
    inputs: dict[str, Path] = {"corpus": cfg.resolve(cfg.corpus)}

    if cfg.scorer == "embedding":
        stage = "compose" if cfg.retrofit_mode == "off" else "retrofit"
        emb: dict[str, EmbeddingSet] = {}
        for lang in cfg.languages:
            path = cfg.out_path(stage, f"{lang}.vec")
            if not path.exists():
                raise ConfigError(f"missing embeddings {path}; run {stage} first")
            emb[lang] = tbio.load_embeddings(path)
            inputs[f"embeddings_{lang}"] = path
        emb[tgt] = _cover_vocabulary(emb[tgt], tgt_vocab)
        scorer = EmbeddingScorer(emb[src], emb[tgt], tgt_vocab)
    elif cfg.scorer == "translation":
        table_path = cfg.resolve(cfg.translation_table)
        inputs["translation_table"] = table_path
        scorer = TranslationScorer(tbio.load_translation_table(table_path), tgt_vocab)
    else:
        relation_classes = _relation_classes(cfg)
        graphs = {}
        for lang in cfg.languages:
            graphs[lang] = load_graph(cfg.resolve(cfg.graphs[lang]), relation_classes)
            inputs[f"graph_{lang}"] = cfg.resolve(cfg.graphs[lang])
        alignment = load_alignment(cfg.resolve(cfg.alignment))
        inputs["alignment"] = cfg.resolve(cfg.alignment)
        merged = merge_aligned(
            prefix_concepts(graphs[src], f"{src}:"),
            prefix_concepts(graphs[tgt], f"{tgt}:"),
            [(f"{src}:{a}", f"{tgt}:{b}") for a, b in alignment],
        )
        scorer = GeodesicScorer(
            merged,
            tgt_vocab,
            source_key=lambda t: f"{src}:{t}",
            target_key=lambda t: f"{tgt}:{t}",
        )

    matrix = annotate_corpus(corpus, scorer, src, tgt, tgt_vocab)
    scores_path = cfg.out_path("annotate", "scores.tsv")
    truth_path = cfg.out_path("annotate", "truth.tsv")
    tbio.save_score_matrix(matrix, scores_path, truth_path)
    manifest = tbio.build_manifest(
        inputs,
        {"stage": "annotate", "scorer": cfg.scorer, "min_tag_count": cfg.min_tag_count},
        seed=None,
    )
    tbio.save_manifest(manifest, cfg.out_path("annotate", "manifest.json"))
    return scores_path, truth_path


def run_evaluate(cfg: PipelineConfig) -> CrossValidationReport:
    """Cross-validate the annotation scores and persist the report."""
    scores_path = cfg.out_path("annotate", "scores.tsv")
    truth_path = cfg.out_path("annotate", "truth.tsv")
    for path in (scores_path, truth_path):
        if not path.exists():
            raise ConfigError(f"missing {path}; run annotate first")
    matrix = tbio.load_score_matrix(scores_path, truth_path)
    report = cross_validate(matrix, k=cfg.folds, seed=cfg.seed)

    tbio.save_cross_validation_report(
        report, cfg.out_path("evaluate", "summary.json"), config_echo=cfg.echo()
    )
    _save_per_tag_means(report, cfg.out_path("evaluate", "per_tag_auc.tsv"))
    tbio.save_fold_assignment(report.folds, cfg.out_path("evaluate", "folds.tsv"))
    manifest = tbio.build_manifest(
        {"scores": scores_path, "truth": truth_path},
        {"stage": "evaluate", "folds": cfg.folds},
        seed=cfg.seed,
    )
    tbio.save_manifest(manifest, cfg.out_path("evaluate", "manifest.json"))
    logger.info(
        "macro-AUC %.4f ± %.4f over %d folds",
        report.mean_macro_auc, report.std_macro_auc, cfg.folds,
    )
    return report


def run_pipeline(cfg: PipelineConfig) -> CrossValidationReport:
    """compose → retrofit (unless off) → annotate → evaluate."""
    if cfg.scorer == "embedding":
        run_compose(cfg)
        if cfg.retrofit_mode != "off":
            run_retrofit(cfg)
    run_annotate(cfg)
    return run_evaluate(cfg)


def _save_per_tag_means(report: CrossValidationReport, path: Path) -> None:
    """Per-tag AUC averaged over the folds where it was defined; NA otherwise."""
    tags: list[str] = []
    if report.fold_reports:
        tags = list(report.fold_reports[0].per_tag_auc)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("tag\tauc\n")
        for tag in tags:
            values = [
                r.per_tag_auc[tag] for r in report.fold_reports if r.per_tag_auc[tag] is not None
            ]
            value = format(float(np.mean(values)), ".17g") if values else "NA"
            handle.write(f"{tag}\t{value}\n")


def _relation_classes(cfg: PipelineConfig) -> dict[str, str]:
    if cfg.relation_classes:
        return load_relation_classes(cfg.resolve(cfg.relation_classes))
    return dict(DEFAULT_RELATION_CLASSES)


def _nonzero_ids(embeddings: EmbeddingSet) -> set[str]:
    return {c for c, v in embeddings.items() if np.any(v)}


def _solve(cfg: PipelineConfig, graph, initial, known):
    if cfg.solver == "direct":
        learned = direct_solve(graph, initial, known)
        report = {"solver": "direct", "converged": True}
        return learned, report
    learned, solver_report = jacobi_retrofit(
        graph, initial, known, tol=cfg.tol, max_iter=cfg.max_iter
    )
    return learned, dataclasses.asdict(solver_report) | {"solver": "jacobi"}


def _overlay(base: EmbeddingSet, learned: EmbeddingSet) -> EmbeddingSet:
    """Learned vectors where available, composed vectors elsewhere."""
    vectors = {c: v for c, v in base.items()}
    vectors.update({c: v for c, v in learned.items()})
    return EmbeddingSet.from_mapping(vectors)


def _cover_vocabulary(embeddings: EmbeddingSet, vocab: TagVocabulary) -> EmbeddingSet:
    """Zero-fill vocabulary tags that have no vector (uninformative, not fatal)."""
    missing = [t for t in vocab.tags if t not in embeddings]
    if not missing:
        return embeddings
    logger.warning(
        "%d target tag(s) have no embedding and score zero everywhere", len(missing)
    )
    vectors = {c: v for c, v in embeddings.items()}
    zero = np.zeros(embeddings.dimension)
    for tag in missing:
        vectors[tag] = zero
    return EmbeddingSet.from_mapping(vectors)
