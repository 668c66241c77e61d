"""Compose fixed-length vectors for multi-word tag labels from a token table.

Two strategies are provided. ``avg`` is the plain arithmetic mean of token
vectors. ``sif`` is smooth-inverse-frequency weighting: each token vector is
scaled by ``a / (a + f)`` where ``f`` is the token's estimated corpus
frequency, then the direction common to the whole tag collection (its first
singular vector) is projected out. Token frequency is approximated as
``1 / rank`` from the table's file order, which for the usual
frequency-sorted vocabularies is a Zipf-law surrogate.

Out-of-vocabulary tokens contribute the zero vector but still count toward
the averaging denominator.
"""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import CompositionError, ValidationError
from .validation import as_float_matrix, check_positive
from .vectors import ComposedEmbeddings

logger = logging.getLogger(__name__)

DEFAULT_SIF_A = 1e-3
STRATEGIES = ("avg", "sif")

# Characters replaced by a space vs. deleted outright during preprocessing.
_TRANSLATION = str.maketrans(
    {**{c: " " for c in "_-/,"}, **{c: None for c in "()':.!$"}}
)


class TokenTable:
    """Ordered token vocabulary with vectors and rank-derived frequencies.

    Rank is the 1-based position in input order; ``frequency(token)`` is
    ``1 / rank``.
    """

    def __init__(self, tokens: Iterable[str], matrix):
        self.tokens: tuple[str, ...] = tuple(tokens)
        if len(set(self.tokens)) != len(self.tokens):
            raise ValidationError("duplicate tokens in token table")
        mat = as_float_matrix(matrix, "token matrix")
        if mat.shape[0] != len(self.tokens):
            raise ValidationError(
                f"token matrix has {mat.shape[0]} rows for {len(self.tokens)} tokens"
            )
        mat = np.ascontiguousarray(mat)
        mat.flags.writeable = False
        self.matrix = mat
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def get(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self.matrix[i]

    def rank(self, token: str) -> int:
        try:
            return self._index[token] + 1
        except KeyError:
            raise ValidationError(f"token {token!r} not in table") from None

    def frequency(self, token: str) -> float:
        return 1.0 / self.rank(token)

    def scaled(self, factor: float) -> "TokenTable":
        return TokenTable(self.tokens, self.matrix * float(factor))


def preprocess_tag(raw: str) -> list[str]:
    """Normalize a raw tag label into lowercase tokens.

    ``_ - / ,`` become spaces, ``( ) ' : . ! $`` are deleted, the result is
    lowercased and split on whitespace runs. May return an empty list; never
    raises.
    """
    return raw.translate(_TRANSLATION).lower().split()


def compose_avg(tokens: Sequence[str], table: TokenTable) -> np.ndarray:
    """Arithmetic mean of token vectors, zeros for out-of-vocabulary tokens."""
    if not tokens:
        raise CompositionError("cannot compose an empty token list")
    total = np.zeros(table.dimension)
    for token in tokens:
        vec = table.get(token)
        if vec is not None:
            total += vec
    return total / len(tokens)


def sif_weighted_mean(
    tokens: Sequence[str], table: TokenTable, a: float = DEFAULT_SIF_A
) -> np.ndarray:
    """Frequency-weighted token mean: weight ``a / (a + 1/rank)`` per token.

    Rarer tokens (larger rank, smaller surrogate frequency) get weights
    closer to 1, so they dominate the composition. Out-of-vocabulary tokens
    contribute zero vectors but count toward the denominator.
    """
    if not tokens:
        raise CompositionError("cannot compose an empty token list")
    check_positive(a, "a")
    total = np.zeros(table.dimension)
    for token in tokens:
        vec = table.get(token)
        if vec is not None:
            total += (a / (a + table.frequency(token))) * vec
    return total / len(tokens)


def first_singular_direction(
    matrix, tol: float = 1e-9, max_iter: int = 1000
) -> np.ndarray | None:
    """Dominant right-singular direction of ``matrix`` via power iteration.

    Iterates ``v <- Gv / ||Gv||`` on the Gram matrix ``G = matrix.T @ matrix``
    until the direction change ``1 - |<v_new, v_old>|`` falls below ``tol``
    or ``max_iter`` sweeps elapse. Returns None for an all-zero matrix.

    The start vector is the largest-norm row of ``matrix``, which is never
    orthogonal to the dominant direction for generic data and keeps the
    whole computation deterministic.
    """
    mat = as_float_matrix(matrix, "matrix")
    if not np.any(mat):
        return None
    gram = mat.T @ mat
    row_norms = np.linalg.norm(mat, axis=1)
    v = mat[int(np.argmax(row_norms))].copy()
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # start vector lay in the null space; restart from the heaviest axis
            v = np.zeros(mat.shape[1])
            v[int(np.argmax(np.diag(gram)))] = 1.0
            continue
        w /= norm
        if 1.0 - abs(float(w @ v)) <= tol:
            return w
        v = w
    logger.warning("power iteration did not reach tol=%g in %d sweeps", tol, max_iter)
    return v


def remove_first_component(matrix) -> np.ndarray:
    """Project every row off the collection's dominant singular direction.

    An all-zero matrix is returned unchanged (with a warning): there is no
    direction to remove.
    """
    mat = as_float_matrix(matrix, "matrix")
    direction = first_singular_direction(mat)
    if direction is None:
        logger.warning("all rows are zero; skipping common-direction removal")
        return mat.copy()
    return mat - np.outer(mat @ direction, direction)


def build_tag_embeddings(
    tags: Sequence[str],
    table: TokenTable,
    strategy: str = "sif",
    a: float = DEFAULT_SIF_A,
    remove_common_direction: bool = True,
) -> ComposedEmbeddings:
    """Compose one vector per tag label.

    Tags are preprocessed, composed per ``strategy``, and (for ``sif``) the
    first singular direction of the full tag matrix is removed. Tags that
    preprocess to nothing or whose tokens are all out-of-vocabulary get the
    zero vector and are reported in the result's ``zero_mask``.

    ``remove_common_direction=False`` skips the projection step so a caller
    can fit it jointly over several tag collections instead.
    """
    ids, matrix, empty, oov = _compose_matrix(tags, table, strategy, a)
    if strategy == "sif" and remove_common_direction:
        matrix = remove_first_component(matrix)
    if empty or oov:
        logger.info(
            "%d tag(s) with no tokens, %d fully out-of-vocabulary", len(empty), len(oov)
        )
    return ComposedEmbeddings(ids, matrix, empty_tags=empty, oov_tags=oov)


def _compose_matrix(tags, table, strategy, a):
    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    ids = tuple(dict.fromkeys(tags))
    if not ids:
        raise ValidationError("tags must be non-empty")
    rows = np.zeros((len(ids), table.dimension))
    empty: set[str] = set()
    oov: set[str] = set()
    for i, tag in enumerate(ids):
        tokens = preprocess_tag(tag)
        if not tokens:
            empty.add(tag)
            continue
        if not any(t in table for t in tokens):
            oov.add(tag)
            continue
        if strategy == "avg":
            rows[i] = compose_avg(tokens, table)
        else:
            rows[i] = sif_weighted_mean(tokens, table, a)
    return ids, rows, empty, oov


class TagEmbedder(BaseEstimator, TransformerMixin):
    """Transformer turning raw tag labels into fixed-length vectors.

    ``fit`` composes the given tag collection and, for the ``sif`` strategy,
    learns the common direction to remove; ``transform`` composes any labels
    and projects off the fitted direction. ``fit_transform`` on a tag
    vocabulary reproduces :func:`build_tag_embeddings`.

    Parameters
    ----------
    token_table : TokenTable
        Vocabulary with vectors, ordered by descending frequency.
    strategy : {"sif", "avg"}
    sif_a : float
        Frequency-smoothing constant for ``sif``.
    """

    def __init__(self, token_table: TokenTable | None = None, strategy: str = "sif",
                 sif_a: float = DEFAULT_SIF_A):
        self.token_table = token_table
        self.strategy = strategy
        self.sif_a = sif_a

    def fit(self, X, y=None):
        if self.token_table is None:
            raise ValidationError("token_table is required")
        tags = list(X)
        ids, matrix, empty, oov = _compose_matrix(tags, self.token_table, self.strategy, self.sif_a)
        self.common_direction_ = (
            first_singular_direction(matrix) if self.strategy == "sif" else None
        )
        if self.common_direction_ is not None:
            matrix = matrix - np.outer(matrix @ self.common_direction_, self.common_direction_)
        self.embeddings_ = ComposedEmbeddings(ids, matrix, empty_tags=empty, oov_tags=oov)
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "embeddings_"):
            raise NotFittedError("TagEmbedder must be fitted before transform")
        tags = list(X)
        ids, matrix, _, _ = _compose_matrix(tags, self.token_table, self.strategy, self.sif_a)
        if self.common_direction_ is not None:
            u = self.common_direction_
            matrix = matrix - np.outer(matrix @ u, u)
        order = {tag: i for i, tag in enumerate(ids)}
        return matrix[[order[tag] for tag in tags]]
