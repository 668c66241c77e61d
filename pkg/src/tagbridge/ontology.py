"""Typed concept graphs: loading, validation, merging and structural queries.

A graph is a set of concept identifiers plus directed, typed edges. Every
relation type is classed as either ``equivalence`` (aliases, cross-language
links) or ``relatedness`` (weaker semantic ties); downstream refinement
weights the two classes differently.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ParseError, UnknownConceptError, ValidationError

logger = logging.getLogger(__name__)

EQUIVALENCE = "equivalence"
RELATEDNESS = "relatedness"

# Relation types shipped as the default classing; anything else must be
# declared in a relation-class config file.
DEFAULT_RELATION_CLASSES: dict[str, str] = {
    "wikiPageRedirects": EQUIVALENCE,
    "sameAs": EQUIVALENCE,
    "stylisticOrigin": RELATEDNESS,
    "musicSubgenre": RELATEDNESS,
    "derivative": RELATEDNESS,
    "musicFusionGenre": RELATEDNESS,
}

Edge = tuple[str, str, str]


class ConceptGraph:
    """Immutable directed typed graph over concept identifiers.

    Invariants enforced at construction: every edge endpoint is a declared
    concept, no self-loops, and every relation type appearing in an edge is
    classed. Duplicate edges are collapsed.
    """

    def __init__(
        self,
        concepts: Iterable[str],
        edges: Iterable[Edge],
        relation_class: Mapping[str, str],
        self_loops_dropped: int = 0,
    ):
        self.concepts: tuple[str, ...] = tuple(dict.fromkeys(concepts))
        concept_set = set(self.concepts)

        deduped: dict[Edge, None] = {}
        for edge in edges:
            source, relation, target = edge
            if source == target:
                raise ValidationError(f"self-loop edge on {source!r}")
            if source not in concept_set or target not in concept_set:
                raise ValidationError(f"edge endpoint not in concept set: {edge!r}")
            if relation not in relation_class:
                raise ValidationError(f"relation {relation!r} has no declared class")
            deduped[(source, relation, target)] = None
        self.edges: tuple[Edge, ...] = tuple(deduped)

        used = {r for _, r, _ in self.edges}
        self.relation_class: dict[str, str] = dict(relation_class)
        bad = {r: c for r, c in self.relation_class.items() if c not in (EQUIVALENCE, RELATEDNESS)}
        if bad:
            raise ValidationError(f"relation classes must be equivalence/relatedness: {bad}")
        assert used <= set(self.relation_class)

        self.self_loops_dropped = int(self_loops_dropped)

        adjacency: dict[str, set[str]] = {c: set() for c in self.concepts}
        pair_class: dict[tuple[str, str], str] = {}
        for source, relation, target in self.edges:
            adjacency[source].add(target)
            adjacency[target].add(source)
            pair = (source, target) if source <= target else (target, source)
            cls = self.relation_class[relation]
            # equivalence wins if a pair carries edges of both classes
            if pair_class.get(pair) != EQUIVALENCE:
                pair_class[pair] = cls
        self._adjacency = adjacency
        self._pair_class = pair_class

    @property
    def n_concepts(self) -> int:
        return len(self.concepts)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __contains__(self, concept: str) -> bool:
        return concept in self._adjacency

    def neighbors(self, concept: str) -> frozenset[str]:
        """Distinct undirected neighbours of ``concept``."""
        try:
            return frozenset(self._adjacency[concept])
        except KeyError:
            raise UnknownConceptError(concept) from None

    def degree(self, concept: str) -> int:
        """Number of distinct undirected neighbours."""
        return len(self.neighbors(concept))

    def pair_classes(self) -> Mapping[tuple[str, str], str]:
        """Relation class per unordered connected pair (pair keys sorted)."""
        return dict(self._pair_class)

    def distances_from(self, source: str) -> dict[str, int]:
        """Unweighted shortest-path distances on the undirected view (BFS)."""
        if source not in self._adjacency:
            raise UnknownConceptError(source)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            node = queue.popleft()
            for neighbor in self._adjacency[node]:
                if neighbor not in dist:
                    dist[neighbor] = dist[node] + 1
                    queue.append(neighbor)
        return dist


@dataclass(frozen=True)
class ComponentIndex:
    """Partition of concepts by undirected reachability.

    Component ids are contiguous integers from 0, assigned in order of first
    appearance in the graph's concept ordering.
    """

    component_of: Mapping[str, int]
    component_count: int

    def members(self) -> tuple[tuple[str, ...], ...]:
        groups: list[list[str]] = [[] for _ in range(self.component_count)]
        for concept, cid in self.component_of.items():
            groups[cid].append(concept)
        return tuple(tuple(g) for g in groups)


def connected_components(graph: ConceptGraph) -> ComponentIndex:
    component_of: dict[str, int] = {}
    count = 0
    for start in graph.concepts:
        if start in component_of:
            continue
        component_of[start] = count
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for neighbor in graph.neighbors(node):
                if neighbor not in component_of:
                    component_of[neighbor] = count
                    queue.append(neighbor)
        count += 1
    return ComponentIndex(component_of=component_of, component_count=count)


def load_graph(source, relation_classes: Mapping[str, str] | None = None) -> ConceptGraph:
    """Load a graph from tab-separated edge records.

    ``source`` is a path or an iterable of lines. Each record is
    ``source<TAB>relation<TAB>target``; ``#``-prefixed and blank lines are
    ignored. Self-loops are dropped (counted on the returned graph), exact
    duplicate edges are collapsed.
    """
    if relation_classes is None:
        relation_classes = DEFAULT_RELATION_CLASSES
    lines, path = _as_lines(source)

    concepts: dict[str, None] = {}
    edges: list[Edge] = []
    self_loops = 0
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3 or not all(f.strip() for f in fields):
            raise ParseError(
                "expected 3 non-empty tab-separated fields", line_number=number, path=path
            )
        src, relation, tgt = (f.strip() for f in fields)
        if relation not in relation_classes:
            raise ConfigError(
                f"unknown relation type {relation!r} at line {number}"
                + (f" of {path}" if path else "")
            )
        concepts[src] = None
        concepts[tgt] = None
        if src == tgt:
            self_loops += 1
            continue
        edges.append((src, relation, tgt))
    if self_loops:
        logger.warning("dropped %d self-loop edge(s)", self_loops)
    return ConceptGraph(concepts, edges, relation_classes, self_loops_dropped=self_loops)


def load_relation_classes(source) -> dict[str, str]:
    """Parse ``relation=equivalence|relatedness`` lines."""
    lines, path = _as_lines(source)
    classes: dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected relation=class", line_number=number, path=path)
        relation, _, cls = line.partition("=")
        relation, cls = relation.strip(), cls.strip()
        if cls not in (EQUIVALENCE, RELATEDNESS):
            raise ConfigError(
                f"relation {relation!r} classed as {cls!r}; "
                f"expected {EQUIVALENCE!r} or {RELATEDNESS!r}"
            )
        classes[relation] = cls
    return classes


def load_alignment(source) -> list[tuple[str, str]]:
    """Parse ``source<TAB>target`` concept alignment pairs."""
    lines, path = _as_lines(source)
    pairs: list[tuple[str, str]] = []
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not all(f.strip() for f in fields):
            raise ParseError(
                "expected 2 non-empty tab-separated fields", line_number=number, path=path
            )
        pairs.append((fields[0].strip(), fields[1].strip()))
    return pairs


def merge_aligned(
    g_source: ConceptGraph,
    g_target: ConceptGraph,
    alignment: Sequence[tuple[str, str]],
) -> ConceptGraph:
    """Union of two graphs plus cross-graph ``sameAs`` equivalence edges.

    The two concept namespaces must be disjoint and every alignment endpoint
    must exist in its respective graph.
    """
    overlap = set(g_source.concepts) & set(g_target.concepts)
    if overlap:
        raise ValidationError(
            f"concept namespaces overlap on {len(overlap)} identifier(s), "
            f"e.g. {sorted(overlap)[:3]}"
        )
    for src, tgt in alignment:
        if src not in g_source:
            raise ValidationError(f"alignment source {src!r} not in source graph")
        if tgt not in g_target:
            raise ValidationError(f"alignment target {tgt!r} not in target graph")

    relation_class = dict(g_source.relation_class)
    for relation, cls in g_target.relation_class.items():
        if relation_class.get(relation, cls) != cls:
            raise ConfigError(f"relation {relation!r} classed differently in the two graphs")
        relation_class[relation] = cls
    if relation_class.get("sameAs", EQUIVALENCE) != EQUIVALENCE:
        raise ConfigError("merging requires 'sameAs' to be an equivalence relation")
    relation_class["sameAs"] = EQUIVALENCE

    concepts = list(g_source.concepts) + list(g_target.concepts)
    edges = list(g_source.edges) + list(g_target.edges)
    edges.extend((src, "sameAs", tgt) for src, tgt in alignment)
    return ConceptGraph(concepts, edges, relation_class)


def prefix_concepts(graph: ConceptGraph, prefix: str) -> ConceptGraph:
    """Return a copy with every concept identifier prefixed (namespacing)."""
    return ConceptGraph(
        (prefix + c for c in graph.concepts),
        ((prefix + s, r, prefix + t) for s, r, t in graph.edges),
        graph.relation_class,
        self_loops_dropped=graph.self_loops_dropped,
    )


@dataclass(frozen=True)
class GeodesicScores:
    """Distance-derived scores plus counts of identifiers absent from the graph."""

    scores: np.ndarray
    missing_sources: int
    missing_targets: int


def geodesic_scores(
    graph: ConceptGraph,
    sources: Iterable[str],
    targets: Sequence[str],
    distance_cache: dict[str, dict[str, int]] | None = None,
) -> GeodesicScores:
    """Score each target by mean over sources of ``1 / (1 + d(s, t))``.

    Distances are unweighted shortest paths on the undirected view.
    Unreachable pairs contribute 0, as do sources or targets missing from
    the graph (counted in the result). ``distance_cache`` may be shared
    across calls to reuse per-source searches.
    """
    sources = sorted(set(sources))
    if not sources:
        raise ValidationError("sources must be non-empty")
    if not targets:
        raise ValidationError("targets must be non-empty")

    missing_targets = sum(1 for t in targets if t not in graph)
    scores = np.zeros(len(targets))
    missing_sources = 0
    for source in sources:
        if source not in graph:
            missing_sources += 1
            continue
        if distance_cache is not None and source in distance_cache:
            dist = distance_cache[source]
        else:
            dist = graph.distances_from(source)
            if distance_cache is not None:
                distance_cache[source] = dist
        for j, target in enumerate(targets):
            d = dist.get(target)
            if d is not None:
                scores[j] += 1.0 / (1.0 + d)
    scores /= len(sources)
    return GeodesicScores(scores, missing_sources, missing_targets)


def _as_lines(source):
    """Accept a path-like or an iterable of lines; return (lines, path)."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path, encoding="utf-8") as handle:
            return handle.readlines(), path
    return list(source), None
