"""Deterministic k-means (k-means++ seeding, Lloyd refinement).

Kept dependency-free so cluster assignments and tie-breaking are fully
specified: each point goes to the nearest center, ties to the lowest
center index.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_matrix
from .exceptions import ValidationError


def _squared_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) matrix of squared euclidean distances, clipped at 0 to guard
    # against negative round-off from the expansion trick
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * x @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def kmeans_plusplus_seeds(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``k`` seed rows of ``x`` with the k-means++ distance weighting."""
    n = x.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen center
            chosen[i] = rng.integers(n)
        else:
            chosen[i] = rng.choice(n, p=d2 / total)
        d2 = np.minimum(d2, np.sum((x - x[chosen[i]]) ** 2, axis=1))
    return x[chosen].copy()


def lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 500,
          tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray, float]:
    """Refine ``centers`` until relative inertia change drops below ``tol``.

    Returns ``(centers, assignments, inertia)``. Empty clusters keep their
    previous center.
    """
    prev_inertia = None
    assignments = None
    for _ in range(max_iter):
        d2 = _squared_distances(x, centers)
        assignments = d2.argmin(axis=1)
        inertia = d2[np.arange(x.shape[0]), assignments].sum()
        new_centers = centers.copy()
        for j in range(centers.shape[0]):
            members = assignments == j
            if members.any():
                new_centers[j] = x[members].mean(axis=0)
        centers = new_centers
        if prev_inertia is not None and (
                prev_inertia - inertia) <= tol * max(prev_inertia, 1e-300):
            break
        prev_inertia = inertia
    d2 = _squared_distances(x, centers)
    assignments = d2.argmin(axis=1)
    inertia = d2[np.arange(x.shape[0]), assignments].sum()
    return centers, assignments, inertia


def kmeans(x, k: int, seed: int = 0, max_iter: int = 500,
           tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Full k-means: k-means++ seeding then Lloyd iterations.

    Returns ``(centers, assignments)`` with deterministic output for a
    fixed seed.
    """
    x = check_matrix(x, "points")
    if k < 1:
        raise ValidationError(f"need k >= 1 clusters, got {k}")
    if k > x.shape[0]:
        raise ValidationError(f"k={k} exceeds the {x.shape[0]} available points")
    n_distinct = np.unique(x, axis=0).shape[0]
    if k > n_distinct:
        raise ValidationError(f"k={k} exceeds the {n_distinct} distinct points")
    rng = np.random.default_rng(seed)
    centers = kmeans_plusplus_seeds(x, k, rng)
    centers, assignments, _ = lloyd(x, centers, max_iter=max_iter, tol=tol)
    return centers, assignments
