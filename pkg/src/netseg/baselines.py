"""Comparison algorithms: label propagation and spectral clustering.

Both consume the same similarity graphs as the modularity pipeline and emit
the same Partition type, so downstream quality evaluation is shared.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

import numpy as np

from netseg.community import Partition
from netseg.errors import ValidationError
from netseg.similarity import SimilarityGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelPropConfig:
    max_rounds: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValidationError("max_rounds must be >= 1")


@dataclass(frozen=True)
class SpectralConfig:
    k: int
    kmeans_restarts: int = 8
    kmeans_max_iters: int = 200
    eig_tolerance: float = 1e-9  # relative to the Laplacian's Frobenius norm
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.kmeans_restarts < 1:
            raise ValidationError("kmeans_restarts must be >= 1")
        if self.kmeans_max_iters < 1:
            raise ValidationError("kmeans_max_iters must be >= 1")
        if self.eig_tolerance <= 0:
            raise ValidationError("eig_tolerance must be > 0")


def label_propagation(g: SimilarityGraph, cfg: LabelPropConfig) -> Partition:
    """Asynchronous weighted label propagation.

    Every vertex starts with its own label. In each round the vertices are
    visited in a freshly shuffled order and adopt the label carrying the most
    incident edge weight among their neighbors; ties are broken uniformly at
    random, except that a vertex already holding a maximal label keeps it.
    Stops once a full round changes nothing (every label is weight-maximal in
    its neighborhood) or after max_rounds.
    """
    if not g.vertices:
        raise ValidationError("cannot propagate labels on an empty graph")
    rng = random.Random(cfg.seed)
    labels = {v: i for i, v in enumerate(g.vertices)}
    order = list(g.vertices)
    for round_no in range(cfg.max_rounds):
        rng.shuffle(order)
        changed = 0
        for v in order:
            nbrs = g.adj[v]
            if not nbrs:
                continue
            tally: dict[int, float] = {}
            for u in sorted(nbrs):
                lab = labels[u]
                tally[lab] = tally.get(lab, 0.0) + nbrs[u]
            top = max(tally.values())
            best = sorted(lab for lab, w in tally.items() if w == top)
            if labels[v] in best:
                continue
            labels[v] = best[rng.randrange(len(best))] if len(best) > 1 else best[0]
            changed += 1
        if changed == 0:
            logger.debug("label propagation converged after %d round(s)", round_no + 1)
            break
    else:
        logger.debug("label propagation hit the %d-round cap", cfg.max_rounds)
    return Partition.from_labels(labels)


# --- spectral clustering -------------------------------------------------------

def jacobi_eigh(matrix: np.ndarray, rel_tolerance: float = 1e-9,
                max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a dense symmetric matrix.

    Sweeps rotate away off-diagonal entries until their Frobenius norm drops
    to ``rel_tolerance`` times the input's Frobenius norm. Returns eigenvalues
    ascending and the matching eigenvector columns.
    """
    a = np.array(matrix, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValidationError("matrix must be square")
    vectors = np.eye(n)
    if n < 2:
        return a.diagonal().copy(), vectors
    norm0 = float(np.linalg.norm(a, "fro"))
    if norm0 == 0.0:
        return np.zeros(n), vectors
    target = rel_tolerance * norm0
    # skipping rotations below elem_target still lands the off-norm under
    # target because there are fewer than n^2 off-diagonal entries
    elem_target = target / n
    off_diag = np.empty_like(a)
    for _sweep in range(max_sweeps):
        # computed directly: the ||A||^2 - ||diag||^2 form cancels
        # catastrophically once the off-norm is small
        np.copyto(off_diag, a)
        np.fill_diagonal(off_diag, 0.0)
        off = float(np.linalg.norm(off_diag, "fro"))
        if off <= target:
            break
        threshold = max(off / (n * n), elem_target)
        for p in range(n - 1):
            row = a[p]
            for q in range(p + 1, n):
                apq = row[q]
                if abs(apq) <= threshold:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-36 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[p].copy()
                aq = a[q].copy()
                a[p] = c * ap - s * aq
                a[q] = s * ap + c * aq
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = vectors[:, p].copy()
                vq = vectors[:, q].copy()
                vectors[:, p] = c * vp - s * vq
                vectors[:, q] = s * vp + c * vq
                row = a[p]
    else:
        logger.warning("jacobi sweep cap reached before convergence")
    values = a.diagonal().copy()
    order = np.argsort(values, kind="stable")
    return values[order], vectors[:, order]


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    sq_dist = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = sq_dist.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=sq_dist / total))
        centers[c] = points[idx]
        sq_dist = np.minimum(sq_dist, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray,
           max_iters: int) -> tuple[np.ndarray, float]:
    n, k = points.shape[0], centers.shape[0]
    labels = np.full(n, -1)
    for _ in range(max_iters):
        dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        # keep every cluster non-empty: steal the point farthest from its center
        for c in range(k):
            if not (new_labels == c).any():
                assigned = dists[np.arange(n), new_labels]
                donor = int(assigned.argmax())
                new_labels[donor] = c
                dists[donor] = 0.0
        if (new_labels == labels).all():
            break
        labels = new_labels
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = dists.argmin(axis=1)
    inertia = float(dists[np.arange(n), labels].sum())
    return labels, inertia


def _kmeans(points: np.ndarray, k: int, restarts: int, max_iters: int,
            rng: np.random.Generator) -> np.ndarray:
    best_labels: np.ndarray | None = None
    best_inertia = np.inf
    for _ in range(restarts):
        centers = _kmeans_pp_init(points, k, rng)
        labels, inertia = _lloyd(points, centers, max_iters)
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    assert best_labels is not None
    return best_labels


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition of a graph's normalized Laplacian, reusable across
    different target cluster counts."""

    rest: tuple[int, ...]      # non-isolated vertices, ascending
    isolated: tuple[int, ...]
    values: np.ndarray
    vectors: np.ndarray


def spectral_decomposition(g: SimilarityGraph,
                           eig_tolerance: float = 1e-9) -> SpectralDecomposition:
    """Eigendecompose I - D^(-1/2) W D^(-1/2) over the non-isolated vertices."""
    if not g.vertices:
        raise ValidationError("cannot decompose an empty graph")
    isolated = tuple(v for v in g.vertices if not g.adj[v])
    rest = tuple(v for v in g.vertices if g.adj[v])
    if not rest:
        return SpectralDecomposition(rest, isolated, np.empty(0), np.empty((0, 0)))
    index = {v: i for i, v in enumerate(rest)}
    n = len(rest)
    weights = np.zeros((n, n))
    for u in rest:
        iu = index[u]
        for v, w in g.adj[u].items():
            weights[iu, index[v]] = w
    inv_sqrt_deg = 1.0 / np.sqrt(weights.sum(axis=1))
    laplacian = np.eye(n) - (inv_sqrt_deg[:, None] * weights) * inv_sqrt_deg[None, :]
    values, vectors = jacobi_eigh(laplacian, eig_tolerance)
    return SpectralDecomposition(rest, isolated, values, vectors)


def spectral_clustering(g: SimilarityGraph, cfg: SpectralConfig,
                        decomposition: SpectralDecomposition | None = None) -> Partition:
    """Symmetric normalized-Laplacian spectral clustering into cfg.k clusters.

    Isolated vertices are pre-assigned singleton clusters and excluded from
    the eigenproblem; the remaining k - (number of isolated) clusters come
    from k-means (k-means++ seeding, best inertia over restarts) on the
    row-normalized embedding of the smallest-eigenvalue eigenvectors.
    ``decomposition`` reuses a previous spectral_decomposition of the same
    graph, e.g. when clustering at several k.
    """
    if not g.vertices:
        raise ValidationError("cannot cluster an empty graph")
    if cfg.k > len(g.vertices):
        raise ValidationError(f"k={cfg.k} exceeds the vertex count {len(g.vertices)}")
    if decomposition is None:
        decomposition = spectral_decomposition(g, cfg.eig_tolerance)
    isolated = list(decomposition.isolated)
    rest = list(decomposition.rest)
    k_rest = cfg.k - len(isolated)
    if not rest:
        if cfg.k != len(isolated):
            raise ValidationError(
                f"k={cfg.k} but the graph consists of {len(isolated)} isolated vertices"
            )
        return Partition.from_labels({v: i for i, v in enumerate(isolated)})
    if k_rest < 1:
        raise ValidationError(
            f"k={cfg.k} leaves no cluster for the {len(rest)} connected vertices "
            f"after {len(isolated)} isolated singleton(s)"
        )
    if k_rest > len(rest):
        raise ValidationError(
            f"k={cfg.k} requires {k_rest} clusters among only {len(rest)} connected vertices"
        )
    index = {v: i for i, v in enumerate(rest)}
    n = len(rest)
    vectors = decomposition.vectors
    embedding = vectors[:, :k_rest].copy()
    norms = np.linalg.norm(embedding, axis=1)
    nonzero = norms > 1e-12
    embedding[nonzero] /= norms[nonzero, None]

    rng = np.random.default_rng(cfg.seed)
    if k_rest == 1:
        rest_labels = np.zeros(n, dtype=int)
    else:
        rest_labels = _kmeans(embedding, k_rest, cfg.kmeans_restarts,
                              cfg.kmeans_max_iters, rng)
    labels: dict[int, int] = {}
    for v in rest:
        labels[v] = int(rest_labels[index[v]])
    for offset, v in enumerate(isolated):
        labels[v] = k_rest + offset
    return Partition.from_labels(labels)
