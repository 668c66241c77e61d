"""Generate a synthetic two-language bundle with known ground truth.

The two token tables live in one shared vector space, the way pre-aligned
multilingual tables do: conceptually the second language's vectors are an
orthogonal rotation of the first plus Gaussian noise, re-aligned back into
the source space. Since Gaussian noise is rotation-invariant, that
collapses to per-token additive noise scaled by ``noise``; at ``noise=0``
corresponding tokens (and hence composed tags) are exactly equal, giving
cross-language cosine 1 by construction.

Tags are built from corresponding tokens in both languages, the toy graphs
share one topology (a ring covering every tag plus random typed extras),
and every item's target-language tags are the exact images of its
source-language tags, so the bundle is a ground-truthed end-to-end fixture.

Everything is drawn from a single seeded generator and written with fixed
formatting, so a given configuration produces a byte-identical bundle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compose import TokenTable
from .errors import ValidationError
from .io import save_token_table
from .validation import check_positive


@dataclass
class SynthConfig:
    n_tags: int = 50
    n_items: int = 200
    dimension: int = 48
    noise: float = 0.05
    seed: int = 7
    languages: tuple[str, str] = ("aa", "bb")
    n_shared_tokens: int = 12
    min_tags_per_item: int = 1
    max_tags_per_item: int = 3
    relatedness_edges: int | None = None  # defaults to ~1.2 * n_tags
    equivalence_edges: int = 2
    alignment_fraction: float = 1.0

    def validate(self) -> None:
        for name in ("n_tags", "n_items", "dimension", "n_shared_tokens"):
            check_positive(getattr(self, name), name)
        if self.noise < 0:
            raise ValidationError(f"noise must be >= 0, got {self.noise}")
        if not 1 <= self.min_tags_per_item <= self.max_tags_per_item <= self.n_tags:
            raise ValidationError(
                "need 1 <= min_tags_per_item <= max_tags_per_item <= n_tags"
            )
        if not 0 < self.alignment_fraction <= 1:
            raise ValidationError("alignment_fraction must be in (0, 1]")
        if len(self.languages) != 2 or self.languages[0] == self.languages[1]:
            raise ValidationError("languages must be two distinct codes")


@dataclass
class SynthBundle:
    """Paths of every generated file plus the ground-truth tag mapping."""

    out_dir: Path
    token_tables: dict[str, Path]
    graphs: dict[str, Path]
    corpus: Path
    alignment: Path
    translations: Path
    config: Path
    tag_pairs: list[tuple[str, str]] = field(default_factory=list)


def generate_bundle(cfg: SynthConfig, out_dir) -> SynthBundle:
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    src, tgt = cfg.languages
    n, d = cfg.n_tags, cfg.dimension

    # shared "filler" tokens come first (most frequent), tag heads after
    fill_src = [f"{src}fill{j:03d}" for j in range(cfg.n_shared_tokens)]
    head_src = [f"{src}head{i:04d}" for i in range(n)]
    fill_tgt = [f"{tgt}fill{j:03d}" for j in range(cfg.n_shared_tokens)]
    head_tgt = [f"{tgt}head{i:04d}" for i in range(n)]

    vectors_src = rng.normal(size=(cfg.n_shared_tokens + n, d))
    vectors_src /= np.linalg.norm(vectors_src, axis=1, keepdims=True)
    # rotate-and-realign an aligned table == additive noise in the shared space
    vectors_tgt = vectors_src.copy()
    if cfg.noise > 0:
        vectors_tgt = vectors_tgt + cfg.noise * rng.normal(size=vectors_tgt.shape)

    table_paths = {src: out / f"{src}.vec", tgt: out / f"{tgt}.vec"}
    save_token_table(TokenTable(fill_src + head_src, vectors_src), table_paths[src])
    save_token_table(TokenTable(fill_tgt + head_tgt, vectors_tgt), table_paths[tgt])

    # tag i = its head token, optionally suffixed by a shared filler; the
    # same structural choice is mirrored in both languages
    n_fillers = rng.integers(0, 2, size=n)
    filler_idx = rng.integers(0, cfg.n_shared_tokens, size=n)
    tags_src, tags_tgt = [], []
    for i in range(n):
        parts_src, parts_tgt = [head_src[i]], [head_tgt[i]]
        if n_fillers[i]:
            parts_src.append(fill_src[filler_idx[i]])
            parts_tgt.append(fill_tgt[filler_idx[i]])
        tags_src.append("_".join(parts_src))
        tags_tgt.append("_".join(parts_tgt))
    tag_pairs = list(zip(tags_src, tags_tgt))

    graph_paths = {src: out / f"{src}_graph.tsv", tgt: out / f"{tgt}_graph.tsv"}
    edges = _sample_edges(cfg, rng)
    for lang, tags in ((src, tags_src), (tgt, tags_tgt)):
        with open(graph_paths[lang], "w", encoding="utf-8") as handle:
            handle.write("# synthetic toy concept graph\n")
            for i, j, relation in edges:
                handle.write(f"{tags[i]}\t{relation}\t{tags[j]}\n")

    corpus_path = out / "corpus.tsv"
    with open(corpus_path, "w", encoding="utf-8") as handle:
        for item in range(cfg.n_items):
            count = int(rng.integers(cfg.min_tags_per_item, cfg.max_tags_per_item + 1))
            chosen = sorted(rng.choice(n, size=count, replace=False).tolist())
            item_id = f"item{item:05d}"
            handle.write(f"{item_id}\t{src}\t" + "|".join(tags_src[i] for i in chosen) + "\n")
            handle.write(f"{item_id}\t{tgt}\t" + "|".join(tags_tgt[i] for i in chosen) + "\n")

    alignment_path = out / "alignment.tsv"
    n_aligned = max(1, int(round(cfg.alignment_fraction * n)))
    aligned = sorted(rng.choice(n, size=n_aligned, replace=False).tolist())
    with open(alignment_path, "w", encoding="utf-8") as handle:
        for i in aligned:
            handle.write(f"{tags_src[i]}\t{tags_tgt[i]}\n")

    translations_path = out / "translations.tsv"
    with open(translations_path, "w", encoding="utf-8") as handle:
        for s, t in tag_pairs:
            handle.write(f"{s}\t{t}\n")

    config_path = out / "config.json"
    pipeline_config = {
        "source_language": src,
        "target_language": tgt,
        "token_tables": {src: f"{src}.vec", tgt: f"{tgt}.vec"},
        "graphs": {src: f"{src}_graph.tsv", tgt: f"{tgt}_graph.tsv"},
        "alignment": "alignment.tsv",
        "corpus": "corpus.tsv",
        "translation_table": "translations.tsv",
        "strategy": "sif",
        "scorer": "embedding",
        "retrofit_mode": "monolingual",
        "known_languages": [src],
        "folds": 3,
        "seed": cfg.seed,
        "output_dir": "out",
    }
    with open(config_path, "w", encoding="utf-8") as handle:
        json.dump(pipeline_config, handle, indent=2, sort_keys=True)
        handle.write("\n")

    return SynthBundle(
        out_dir=out,
        token_tables=table_paths,
        graphs=graph_paths,
        corpus=corpus_path,
        alignment=alignment_path,
        translations=translations_path,
        config=config_path,
        tag_pairs=tag_pairs,
    )


def _sample_edges(cfg: SynthConfig, rng) -> list[tuple[int, int, str]]:
    """Typed edges over tag indices; identical topology for both languages.

    A ring covers every tag (so all tags are graph concepts and each graph
    is one connected component), then random relatedness edges and a few
    equivalence aliases are layered on top.
    """
    n = cfg.n_tags
    target_related = cfg.relatedness_edges
    if target_related is None:
        target_related = int(round(1.2 * n))
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int, str]] = []
    relations = ("musicSubgenre", "stylisticOrigin", "derivative", "musicFusionGenre")

    if n == 2:
        ring = [(0, 1)]
    elif n > 2:
        ring = [(i, (i + 1) % n) for i in range(n)]
    else:
        ring = []
    for i, j in ring:
        seen.add((min(i, j), max(i, j)))
        edges.append((i, j, relations[len(edges) % len(relations)]))

    attempts = 0
    while len(edges) < target_related + len(ring) and attempts < 50 * (target_related + 1):
        attempts += 1
        i, j = (int(x) for x in rng.integers(0, n, size=2))
        if i == j or (min(i, j), max(i, j)) in seen:
            continue
        seen.add((min(i, j), max(i, j)))
        edges.append((i, j, relations[len(edges) % len(relations)]))
    added = 0
    attempts = 0
    while added < cfg.equivalence_edges and n >= 2 and attempts < 50 * (cfg.equivalence_edges + 1):
        attempts += 1
        i, j = (int(x) for x in rng.integers(0, n, size=2))
        if i == j or (min(i, j), max(i, j)) in seen:
            continue
        seen.add((min(i, j), max(i, j)))
        edges.append((i, j, "wikiPageRedirects"))
        added += 1
    return edges
