"""Refine concept vectors toward their graph neighbours.

The solved problem: given initial vectors ``q_hat`` for a subset of concepts
(the *known* set) and a typed concept graph, find vectors ``Q`` minimizing

    sum_i alpha_i ||q_i - q_hat_i||^2  +  sum_{(i,j)} beta_ij ||q_i - q_j||^2

where ``alpha_i`` is 1 for known concepts and 0 otherwise, and the edge
weights ``beta`` favour equivalence over relatedness ties. Concepts with no
initial vector are learned purely from their neighbours.

Each unordered pair contributes ``beta_ij + beta_ji`` to both the objective
and the update rule. Stationarity is the linear system
``(A + 2B) Q = A Q_hat`` with ``A`` the diagonal alpha matrix and ``B`` the
symmetric Laplacian-like matrix holding half-pair coefficients
``-(beta_ij + beta_ji) / 2`` off-diagonal. ``A + B`` (and likewise
``A + 2B``) is weakly diagonally dominant with a strictly dominant row for
every known concept; provided every connected component contains at least
one known concept it is weakly *chained* diagonally dominant, hence
nonsingular, the objective is strictly convex and the minimum unique. That
is exactly the feasibility condition enforced here before any solve.

Two routes to the optimum are provided: synchronous fixed-point sweeps
(:func:`jacobi_retrofit`, the production path), and a dense per-component
linear solve (:func:`direct_solve`) kept as an independent oracle. An
in-place sweep variant (:func:`gauss_seidel_retrofit`) exists to demonstrate
that the fixed point does not depend on update order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import FeasibilityError, SolverError, ValidationError
from .ontology import EQUIVALENCE, ComponentIndex, ConceptGraph, connected_components
from .validation import check_positive
from .vectors import EmbeddingSet

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True)
class RetrofitWeights:
    """Per-concept anchors and per-directed-edge weights.

    ``alpha`` is 1.0 exactly for concepts with a known initial vector.
    ``beta`` maps directed edges to weights: an equivalence pair carries
    weight 1 on its stored direction only (mirrored duplicates are collapsed
    so the pair is not double-counted), while a relatedness pair carries
    ``1 / degree(i)`` on (i, j) and ``1 / degree(j)`` on (j, i). Absent
    directed edges weigh 0.
    """

    alpha: Mapping[str, float]
    beta: Mapping[tuple[str, str], float]
    equivalence_edges: frozenset[tuple[str, str]]

    def pair_coefficients(self) -> dict[tuple[str, str], float]:
        """Total per-pair weight ``beta_ij + beta_ji`` (keys sorted)."""
        pairs: dict[tuple[str, str], float] = {}
        for (i, j), b in self.beta.items():
            key = (i, j) if i <= j else (j, i)
            pairs[key] = pairs.get(key, 0.0) + b
        return pairs


@dataclass
class SolverReport:
    """Outcome of an iterative solve.

    ``objective_trace`` is populated only when objective tracking is on: one
    inner sequence per connected component, starting at the component's
    initial objective and appending one value per sweep.
    """

    iterations: int
    max_delta: float
    objective_initial: float
    objective_final: float
    converged: bool
    objective_trace: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class SystemMatrices:
    """Dense matrices of the quadratic objective, in graph concept order.

    ``A`` is diagonal with the alpha anchors. ``B`` is symmetric with
    ``-(beta_ij + beta_ji) / 2`` off-diagonal and row sums of zero
    (``B_ii = sum_j |B_ij|``), so ``A + B`` is weakly diagonally dominant
    and strictly so on known rows. Because every pair appears in both
    orientations of the objective's edge sum, the stationarity system the
    solvers target is ``(A + 2B) Q = A Q_hat``.
    """

    A: np.ndarray
    B: np.ndarray
    concepts: tuple[str, ...]


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-component verdict: does each component contain a known concept?"""

    components: tuple[tuple[str, ...], ...]
    component_has_known: tuple[bool, ...]

    @property
    def feasible(self) -> bool:
        return all(self.component_has_known)

    @property
    def offending_components(self) -> tuple[tuple[str, ...], ...]:
        return tuple(
            comp for comp, ok in zip(self.components, self.component_has_known) if not ok
        )


def check_feasible(graph: ConceptGraph, known: Iterable[str]) -> FeasibilityReport:
    """Report, per connected component, whether it contains a known concept."""
    known = _validated_known(graph, known)
    index = connected_components(graph)
    members = index.members()
    has_known = tuple(any(c in known for c in comp) for comp in members)
    return FeasibilityReport(components=members, component_has_known=has_known)


def build_weights(
    graph: ConceptGraph,
    known: Iterable[str],
    count_equivalence_in_degree: bool = True,
) -> RetrofitWeights:
    """Derive anchor and edge weights from the graph and the known set.

    An equivalence pair gets weight 1 on its first-stored direction (a
    mirrored duplicate would double-count the pair); a relatedness pair gets
    ``1 / degree`` of the respective endpoint on each direction.
    ``count_equivalence_in_degree`` controls whether that degree counts all
    undirected neighbours (default) or only relatedness neighbours.
    """
    known = _validated_known(graph, known)
    alpha = {c: (1.0 if c in known else 0.0) for c in graph.concepts}
    pair_classes = graph.pair_classes()

    if count_equivalence_in_degree:
        degree = {c: graph.degree(c) for c in graph.concepts}
    else:
        degree = {c: 0 for c in graph.concepts}
        for (i, j), cls in pair_classes.items():
            if cls != EQUIVALENCE:
                degree[i] += 1
                degree[j] += 1

    first_direction: dict[tuple[str, str], tuple[str, str]] = {}
    for source, _, target in graph.edges:
        pair = (source, target) if source <= target else (target, source)
        first_direction.setdefault(pair, (source, target))

    beta: dict[tuple[str, str], float] = {}
    equivalence: set[tuple[str, str]] = set()
    for (i, j), cls in pair_classes.items():
        if cls == EQUIVALENCE:
            stored = first_direction[(i, j)]
            beta[stored] = 1.0
            equivalence.add(stored)
        else:
            beta[(i, j)] = 1.0 / degree[i]
            beta[(j, i)] = 1.0 / degree[j]
    return RetrofitWeights(alpha=alpha, beta=beta, equivalence_edges=frozenset(equivalence))


def system_matrices(
    graph: ConceptGraph,
    known: Iterable[str],
    weights: RetrofitWeights | None = None,
) -> SystemMatrices:
    """Assemble the dense ``A`` and ``B`` matrices in graph concept order."""
    if weights is None:
        weights = build_weights(graph, known)
    concepts = graph.concepts
    index = {c: i for i, c in enumerate(concepts)}
    n = len(concepts)
    A = np.zeros((n, n))
    for c, a in weights.alpha.items():
        A[index[c], index[c]] = a
    B = np.zeros((n, n))
    for (i, j), coeff in weights.pair_coefficients().items():
        ii, jj = index[i], index[j]
        half = 0.5 * coeff
        B[ii, jj] = B[jj, ii] = -half
        B[ii, ii] += half
        B[jj, jj] += half
    return SystemMatrices(A=A, B=B, concepts=concepts)


def objective_value(
    embeddings: EmbeddingSet,
    initial: EmbeddingSet,
    weights: RetrofitWeights,
) -> float:
    """Evaluate the retrofitting objective at ``embeddings``.

    Anchor terms run over concepts with ``alpha == 1``; edge terms run over
    the directed edges of the weight map, so each connected pair contributes
    ``(beta_ij + beta_ji) ||q_i - q_j||^2``.
    """
    if initial.dimension != embeddings.dimension:
        raise ValidationError(
            f"dimension mismatch: embeddings {embeddings.dimension}, "
            f"initial {initial.dimension}"
        )
    total = 0.0
    for concept, a in weights.alpha.items():
        if a:
            diff = embeddings.vector(concept) - initial.vector(concept)
            total += a * float(diff @ diff)
    for (i, j), b in weights.beta.items():
        diff = embeddings.vector(i) - embeddings.vector(j)
        total += b * float(diff @ diff)
    return total


def jacobi_retrofit(
    graph: ConceptGraph,
    initial: EmbeddingSet,
    known: Iterable[str],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    weights: RetrofitWeights | None = None,
    track_objective: bool = False,
) -> tuple[EmbeddingSet, SolverReport]:
    """Solve by synchronous sweeps of the fixed-point update.

    Each sweep recomputes every concept from the previous iterate:

        q_i <- (alpha_i q_hat_i + sum_j c_ij q_j) / (alpha_i + sum_j c_ij)

    with pair coefficients ``c_ij = beta_ij + beta_ji`` over the undirected
    neighbours of ``i``. This is the Jacobi iteration for the stationarity
    system ``(A + 2B) Q = A Q_hat`` and never increases the objective from
    sweep to sweep. Known concepts start at their initial vectors, unknown
    ones at zero. Components are independent systems and are swept
    separately until the largest per-coordinate change drops below ``tol``
    or ``max_iter`` sweeps elapse. Feasibility (every component anchored)
    guarantees every denominator is positive and the fixed point unique.

    ``track_objective`` records the per-component objective after every
    sweep (debug mode; sweeps should never increase it).
    """
    check_positive(tol, "tol")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    blocks, weights, known = _prepare(graph, initial, known, weights)

    n, d = len(graph.concepts), initial.dimension
    out = np.zeros((n, d))
    q0 = np.zeros((n, d))
    iterations = 0
    max_delta = 0.0
    converged = True
    traces: list[tuple[float, ...]] = []
    for block in blocks:
        q = block.q_init.copy()
        q0[block.rows] = block.q_init
        trace = [_block_objective(block, q)] if track_objective else None
        delta = 0.0
        sweeps = 0
        for sweeps in range(1, max_iter + 1):
            q_next = (block.coeff @ q + block.alpha[:, None] * block.q_hat) / block.denom[:, None]
            delta = float(np.max(np.abs(q_next - q))) if q.size else 0.0
            q = q_next
            if trace is not None:
                trace.append(_block_objective(block, q))
            if delta < tol:
                break
        out[block.rows] = q
        iterations = max(iterations, sweeps)
        max_delta = max(max_delta, delta)
        converged = converged and delta < tol
        if trace is not None:
            traces.append(tuple(trace))

    result = EmbeddingSet(graph.concepts, out, known=known)
    report = SolverReport(
        iterations=iterations,
        max_delta=max_delta,
        objective_initial=objective_value(EmbeddingSet(graph.concepts, q0), initial, weights),
        objective_final=objective_value(result, initial, weights),
        converged=converged,
        objective_trace=tuple(traces) if track_objective else None,
    )
    if not converged:
        logger.warning(
            "retrofit did not converge: max_delta=%.3g after %d sweeps", max_delta, iterations
        )
    return result, report


def gauss_seidel_retrofit(
    graph: ConceptGraph,
    initial: EmbeddingSet,
    known: Iterable[str],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    order: Sequence[str] | None = None,
    weights: RetrofitWeights | None = None,
) -> tuple[EmbeddingSet, SolverReport]:
    """Asynchronous variant: update concepts in place, in ``order``.

    Exists to demonstrate update-order insensitivity: on feasible inputs the
    unique fixed point is the same as :func:`jacobi_retrofit`'s regardless of
    the permutation chosen.
    """
    check_positive(tol, "tol")
    if order is None:
        order = graph.concepts
    if sorted(order) != sorted(graph.concepts):
        raise ValidationError("order must be a permutation of the graph's concepts")
    blocks, weights, known = _prepare(graph, initial, known, weights)

    n, d = len(graph.concepts), initial.dimension
    index = {c: i for i, c in enumerate(graph.concepts)}
    q = np.zeros((n, d))
    alpha = np.zeros(n)
    q_hat = np.zeros((n, d))
    denom = np.zeros(n)
    neighbor_rows: list[np.ndarray] = [np.empty(0, dtype=int)] * n
    neighbor_coeff: list[np.ndarray] = [np.empty(0)] * n
    for block in blocks:
        q[block.rows] = block.q_init
        alpha[block.rows] = block.alpha
        q_hat[block.rows] = block.q_hat
        denom[block.rows] = block.denom
        for local, row in enumerate(block.rows):
            mask = block.coeff[local] != 0.0
            neighbor_rows[row] = block.rows[mask]
            neighbor_coeff[row] = block.coeff[local][mask]

    q0 = q.copy()
    sweep_order = [index[c] for c in order]
    delta = np.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        delta = 0.0
        for row in sweep_order:
            new = (neighbor_coeff[row] @ q[neighbor_rows[row]] + alpha[row] * q_hat[row]) / denom[row]
            delta = max(delta, float(np.max(np.abs(new - q[row]))))
            q[row] = new
        if delta < tol:
            break

    result = EmbeddingSet(graph.concepts, q, known=known)
    report = SolverReport(
        iterations=sweeps,
        max_delta=delta,
        objective_initial=objective_value(EmbeddingSet(graph.concepts, q0), initial, weights),
        objective_final=objective_value(result, initial, weights),
        converged=delta < tol,
    )
    return result, report


def direct_solve(
    graph: ConceptGraph,
    initial: EmbeddingSet,
    known: Iterable[str],
    weights: RetrofitWeights | None = None,
) -> EmbeddingSet:
    """Solve the stationarity system exactly, one dense solve per component.

    The system is ``(A + 2B) Q = A Q_hat`` (both orientations of each pair
    appear in the objective's edge sum). Serves as the independent oracle
    for the iterative solvers. A singular block would mean a component with
    no anchored concept, which feasibility checking rules out beforehand.
    """
    blocks, _, known = _prepare(graph, initial, known, weights)
    n, d = len(graph.concepts), initial.dimension
    out = np.zeros((n, d))
    for block in blocks:
        system = np.diag(block.denom) - block.coeff
        rhs = block.alpha[:, None] * block.q_hat
        try:
            out[block.rows] = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                "singular stationarity block: a component lacks an anchored "
                "concept, violating the feasibility precondition"
            ) from exc
    return EmbeddingSet(graph.concepts, out, known=known)


class GraphRetrofitter(BaseEstimator):
    """Estimator facade over the retrofit solvers.

    ``fit`` takes an :class:`EmbeddingSet` of initial vectors; concepts
    flagged known in it (and present in the graph) become anchors, all other
    graph concepts are learned from scratch. ``transform`` looks up learned
    vectors for a sequence of concepts.

    Parameters
    ----------
    graph : ConceptGraph
    tol, max_iter : stopping rule for the iterative solver.
    solver : {"jacobi", "direct"}
    count_equivalence_in_degree : bool
        Whether relatedness weights ``1 / degree`` count equivalence
        neighbours in the degree.
    """

    def __init__(
        self,
        graph: ConceptGraph | None = None,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        solver: str = "jacobi",
        count_equivalence_in_degree: bool = True,
    ):
        self.graph = graph
        self.tol = tol
        self.max_iter = max_iter
        self.solver = solver
        self.count_equivalence_in_degree = count_equivalence_in_degree

    def fit(self, X: EmbeddingSet, y=None):
        if self.graph is None:
            raise ValidationError("graph is required")
        if self.solver not in ("jacobi", "direct"):
            raise ValidationError(f"solver must be 'jacobi' or 'direct', got {self.solver!r}")
        known = {c for c in X.known if c in self.graph}
        weights = build_weights(self.graph, known, self.count_equivalence_in_degree)
        if self.solver == "direct":
            self.embeddings_ = direct_solve(self.graph, X, known, weights=weights)
            self.report_ = SolverReport(
                iterations=0,
                max_delta=0.0,
                objective_initial=objective_value(self.embeddings_, X, weights),
                objective_final=objective_value(self.embeddings_, X, weights),
                converged=True,
            )
        else:
            self.embeddings_, self.report_ = jacobi_retrofit(
                self.graph, X, known, tol=self.tol, max_iter=self.max_iter, weights=weights
            )
        return self

    def transform(self, concepts: Sequence[str]) -> np.ndarray:
        if not hasattr(self, "embeddings_"):
            raise NotFittedError("GraphRetrofitter must be fitted before transform")
        return np.stack([self.embeddings_.vector(c) for c in concepts])


@dataclass(frozen=True)
class _Block:
    """Per-component dense system pieces, in global row coordinates."""

    rows: np.ndarray          # indices into the graph concept order
    coeff: np.ndarray         # symmetric pair coefficients, zero diagonal
    alpha: np.ndarray
    q_hat: np.ndarray
    q_init: np.ndarray
    denom: np.ndarray


def _block_objective(block: "_Block", q: np.ndarray) -> float:
    """Objective restricted to one component.

    Each unordered pair contributes ``c_ij ||q_i - q_j||^2`` with the total
    pair coefficient ``c_ij = beta_ij + beta_ji``.
    """
    diff = q - block.q_hat
    anchor = float(block.alpha @ (diff * diff).sum(axis=1))
    squared_norms = (q * q).sum(axis=1)
    row_weight = block.coeff.sum(axis=1)
    edges = float(row_weight @ squared_norms) - float(np.sum(block.coeff * (q @ q.T)))
    return anchor + edges


def _validated_known(graph: ConceptGraph, known: Iterable[str]) -> frozenset[str]:
    known = frozenset(known)
    outside = known - set(graph.concepts)
    if outside:
        raise ValidationError(
            f"known concepts not in graph: {sorted(outside)[:5]}"
            + (" ..." if len(outside) > 5 else "")
        )
    return known


def _prepare(graph, initial, known, weights):
    """Validate feasibility and cut the system into per-component blocks."""
    known = _validated_known(graph, known)
    missing = [c for c in known if c not in initial]
    if missing:
        raise ValidationError(f"known concepts without an initial vector: {missing[:5]}")
    feasibility = check_feasible(graph, known)
    if not feasibility.feasible:
        offending = feasibility.offending_components
        raise FeasibilityError(
            f"{len(offending)} component(s) contain no known concept; "
            f"first: {list(offending[0])[:5]}",
            components=offending,
        )
    if weights is None:
        weights = build_weights(graph, known)

    index = {c: i for i, c in enumerate(graph.concepts)}
    coeff_by_pair = weights.pair_coefficients()
    d = initial.dimension
    blocks = []
    for component in connected_components(graph).members():
        local = {c: i for i, c in enumerate(component)}
        size = len(component)
        coeff = np.zeros((size, size))
        for (i, j), c in coeff_by_pair.items():
            if i in local:  # pairs never straddle components
                coeff[local[i], local[j]] = coeff[local[j], local[i]] = c
        alpha = np.array([weights.alpha[c] for c in component])
        q_hat = np.zeros((size, d))
        q_init = np.zeros((size, d))
        for c, i in local.items():
            vec = initial.get(c)
            if vec is not None:
                q_hat[i] = vec
                if c in known:
                    q_init[i] = vec
        denom = alpha + coeff.sum(axis=1)
        # feasibility implies every concept is anchored or has a neighbour
        assert np.all(denom > 0), "zero denominator despite feasibility"
        blocks.append(
            _Block(
                rows=np.array([index[c] for c in component], dtype=int),
                coeff=coeff,
                alpha=alpha,
                q_hat=q_hat,
                q_init=q_init,
                denom=denom,
            )
        )
    return blocks, weights, known
