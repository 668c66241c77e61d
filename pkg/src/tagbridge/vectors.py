"""Containers for concept → vector tables."""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import MissingEmbeddingError, ValidationError
from .validation import as_float_matrix


class EmbeddingSet:
    """An ordered table of concept vectors with a known/unknown flag per concept.

    ``known`` marks concepts whose vectors were given rather than learned;
    it defaults to every concept. The backing matrix is made read-only so a
    set can be shared freely across threads.
    """

    def __init__(self, ids: Iterable[str], matrix, known: Iterable[str] | None = None):
        self.ids: tuple[str, ...] = tuple(ids)
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("duplicate concept identifiers in embedding set")
        mat = as_float_matrix(matrix, "embedding matrix")
        if mat.shape[0] != len(self.ids):
            raise ValidationError(
                f"matrix has {mat.shape[0]} rows for {len(self.ids)} identifiers"
            )
        mat = np.ascontiguousarray(mat)
        mat.flags.writeable = False
        self.matrix = mat
        self._index = {c: i for i, c in enumerate(self.ids)}
        self.known = frozenset(self.ids) if known is None else frozenset(known)
        extra = self.known - set(self.ids)
        if extra:
            raise ValidationError(f"known flags reference absent concepts: {sorted(extra)[:5]}")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    @property
    def unknown(self) -> frozenset[str]:
        return frozenset(self.ids) - self.known

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, concept: str) -> bool:
        return concept in self._index

    def vector(self, concept: str) -> np.ndarray:
        try:
            return self.matrix[self._index[concept]]
        except KeyError:
            raise MissingEmbeddingError(concept) from None

    def get(self, concept: str, default=None):
        i = self._index.get(concept)
        return default if i is None else self.matrix[i]

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for c, row in zip(self.ids, self.matrix):
            yield c, row

    def subset(self, ids: Iterable[str]) -> "EmbeddingSet":
        ids = tuple(ids)
        rows = np.stack([self.vector(c) for c in ids]) if ids else np.empty((0, self.dimension))
        return EmbeddingSet(ids, rows, known=self.known & set(ids))

    def scaled(self, factor: float) -> "EmbeddingSet":
        return EmbeddingSet(self.ids, self.matrix * float(factor), known=self.known)

    @classmethod
    def from_mapping(cls, vectors: Mapping[str, np.ndarray], known=None) -> "EmbeddingSet":
        ids = tuple(vectors)
        if not ids:
            raise ValidationError("cannot build an embedding set from an empty mapping")
        return cls(ids, np.stack([np.asarray(vectors[c], float) for c in ids]), known=known)


class ComposedEmbeddings(EmbeddingSet):
    """Embeddings composed from tag labels, tracking degenerate tags.

    ``empty_tags`` preprocessed to no tokens at all; ``oov_tags`` had tokens
    but none in the token table. Both land in ``zero_mask`` and carry the
    all-zeros vector; they count as unknown for downstream refinement.
    """

    def __init__(
        self,
        ids: Iterable[str],
        matrix,
        empty_tags: Iterable[str] = (),
        oov_tags: Iterable[str] = (),
    ):
        self.empty_tags = frozenset(empty_tags)
        self.oov_tags = frozenset(oov_tags)
        self.zero_mask = self.empty_tags | self.oov_tags
        ids = tuple(ids)
        super().__init__(ids, matrix, known=set(ids) - self.zero_mask)
        for tag in self.zero_mask:
            if tag not in self:
                raise ValidationError(f"zero-mask tag {tag!r} is not in the embedding set")
            if np.any(self.vector(tag)):
                raise ValidationError(f"zero-mask tag {tag!r} has a non-zero vector")
