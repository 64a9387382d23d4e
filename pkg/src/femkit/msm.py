"""Markov state models over reduced coordinates.

Frames are clustered with deterministic k-means, lagged transitions are
counted within each trajectory, counts are symmetrized (naive reversible
estimator) and restricted to the largest connected component, and the
stationary distribution of the row-normalized matrix yields per-state
free energies ``G_i = -k_B T log(pi_i)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator

from . import _kmeans
from ._validation import check_matrix, readonly
from .constants import kbt
from .exceptions import ConvergenceError, ValidationError


def cluster(y, n_states: int, seed: int = 0, max_iter: int = 500,
            tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """K-means clustering of projected frames.

    Returns ``(centers, assignments)``; ties in the nearest-center rule go
    to the lowest center index.
    """
    return _kmeans.kmeans(y, n_states, seed=seed, max_iter=max_iter, tol=tol)


def assign(y, centers: np.ndarray) -> np.ndarray:
    """Nearest-center state index for each frame (ties to lowest index)."""
    y = check_matrix(y, "y")
    return _kmeans._squared_distances(y, centers).argmin(axis=1)


def count_transitions(assignments, lag_frames: int, n_states: int) -> np.ndarray:
    """Raw lagged transition counts, summed over trajectories.

    ``assignments`` is one integer sequence or a list of them; pairs
    ``(t, t + lag)`` are counted within each sequence only.
    """
    if lag_frames < 1:
        raise ValidationError(f"lag_frames must be >= 1, got {lag_frames}")
    seqs = assignments if isinstance(assignments, (list, tuple)) else [assignments]
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    for seq in seqs:
        seq = np.asarray(seq, dtype=np.int64)
        if seq.ndim != 1:
            raise ValidationError("assignments must be 1-D integer sequences")
        if seq.shape[0] <= lag_frames:
            raise ValidationError(
                f"assignment sequence of length {seq.shape[0]} is shorter "
                f"than lag_frames={lag_frames}"
            )
        np.add.at(counts, (seq[:-lag_frames], seq[lag_frames:]), 1)
    return counts


@dataclass(frozen=True)
class TransitionEstimate:
    """Counts and reversible transition matrix on the kept states."""

    counts: np.ndarray        # raw integer counts, restricted
    transition: np.ndarray    # row-stochastic, from symmetrized counts
    kept_states: np.ndarray   # original state indices, ascending
    dropped_states: np.ndarray

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]


def estimate_transition_matrix(assignments, lag_frames: int,
                               n_states: int | None = None) -> TransitionEstimate:
    """Symmetrized, connectivity-restricted transition matrix.

    Counts are symmetrized as ``(C + C.T) / 2`` before row normalization,
    and only the largest connected component of the count graph survives
    (largest by state count, ties by total counts then lowest index).
    """
    seqs = assignments if isinstance(assignments, (list, tuple)) else [assignments]
    if n_states is None:
        n_states = int(max(np.max(s) for s in seqs)) + 1
    counts = count_transitions(seqs, lag_frames, n_states)
    sym = 0.5 * (counts + counts.T)

    n_comp, labels = connected_components(csr_matrix(sym > 0), directed=False)
    sizes = np.bincount(labels, minlength=n_comp)
    totals = np.array([sym[labels == c][:, labels == c].sum() for c in range(n_comp)])
    first_state = np.array([np.flatnonzero(labels == c)[0] for c in range(n_comp)])
    best = min(range(n_comp), key=lambda c: (-sizes[c], -totals[c], first_state[c]))
    kept = np.flatnonzero(labels == best)
    dropped = np.flatnonzero(labels != best)

    sym_kept = sym[np.ix_(kept, kept)]
    row_sums = sym_kept.sum(axis=1)
    if kept.shape[0] == 0 or row_sums.sum() == 0:
        raise ValidationError("largest connected component has no transition counts")
    if np.any(row_sums == 0):
        bad = kept[int(np.flatnonzero(row_sums == 0)[0])]
        raise ValidationError(f"state {bad} has zero outgoing counts after restriction")
    transition = sym_kept / row_sums[:, None]
    return TransitionEstimate(counts=readonly(counts[np.ix_(kept, kept)]),
                              transition=readonly(transition),
                              kept_states=readonly(kept),
                              dropped_states=readonly(dropped))


def stationary_distribution(transition, tol: float = 1e-12,
                            max_iter: int = 10 ** 6) -> np.ndarray:
    """Left eigenvector of eigenvalue 1, by power iteration.

    Requires a row-stochastic, irreducible matrix; raises
    :class:`ConvergenceError` for reducible input (e.g. the identity) or
    when the iteration fails to reach an L1 residual of ``tol``.
    """
    t = check_matrix(transition, "transition")
    n = t.shape[0]
    if t.shape[1] != n:
        raise ValidationError(f"transition matrix must be square, got {t.shape}")
    if np.any(t < 0) or np.abs(t.sum(axis=1) - 1.0).max() > 1e-12:
        raise ValidationError("transition matrix must be row-stochastic")
    n_comp, _ = connected_components(csr_matrix(t > 0), directed=True,
                                     connection="strong")
    if n_comp != 1:
        raise ConvergenceError(
            f"transition matrix is reducible ({n_comp} strongly connected components)"
        )
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ t
        nxt = nxt / nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            pi = nxt
            break
    else:
        raise ConvergenceError(
            f"power iteration did not reach residual {tol} in {max_iter} iterations "
            f"(periodic chain?)"
        )
    if np.any(pi <= 0):
        raise ConvergenceError("stationary distribution has non-positive entries")
    return pi / pi.sum()


def msm_free_energies(stationary, temperature: float) -> np.ndarray:
    """Per-state ``-k_B T log(pi_i)``, shifted so the minimum is 0."""
    pi = np.asarray(stationary, dtype=np.float64)
    if np.any(pi <= 0):
        raise ValidationError("stationary probabilities must be positive")
    g = -kbt(temperature) * np.log(pi)
    return g - g.min()


class MarkovStateModel(BaseEstimator):
    """Cluster + count + solve pipeline as a single estimator.

    Parameters
    ----------
    n_states : int, default=50
        Number of k-means microstates.
    lag_frames : int, default=10
        Lag for transition counting, in frames.
    seed : int, default=0
        Clustering seed.
    temperature : float, default=300.0
        Temperature (K) for per-state free energies.

    Attributes
    ----------
    centers_ : ndarray, shape (n_kept, d)
        Cluster centers of the kept (connected) states.
    transition_ : ndarray, shape (n_kept, n_kept)
        Row-stochastic reversible transition matrix.
    stationary_ : ndarray, shape (n_kept,)
        Stationary distribution.
    free_energy_ : ndarray, shape (n_kept,)
        Per-state free energies, minimum at 0.
    dropped_states_ : ndarray
        Original state indices outside the largest connected component.
    """

    def __init__(self, n_states: int = 50, lag_frames: int = 10, seed: int = 0,
                 temperature: float = 300.0):
        self.n_states = n_states
        self.lag_frames = lag_frames
        self.seed = seed
        self.temperature = temperature

    def fit(self, Y, y=None):
        """Fit from one ``(n, d)`` array or a list of them (one per
        trajectory; lagged pairs never cross array boundaries)."""
        ys = Y if isinstance(Y, (list, tuple)) else [Y]
        ys = [check_matrix(a, "Y") for a in ys]
        stacked = np.vstack(ys)
        all_centers, _ = cluster(stacked, self.n_states, seed=self.seed)
        assignments = [assign(a, all_centers) for a in ys]
        est = estimate_transition_matrix(assignments, self.lag_frames,
                                         n_states=self.n_states)
        self.counts_ = est.counts
        self.transition_ = est.transition
        self.kept_states_ = est.kept_states
        self.dropped_states_ = est.dropped_states
        self.centers_ = all_centers[est.kept_states]
        self.stationary_ = stationary_distribution(est.transition)
        self.free_energy_ = msm_free_energies(self.stationary_, self.temperature)
        return self

    def predict(self, Y) -> np.ndarray:
        """Kept-state index of the nearest center for each frame."""
        return assign(Y, self.centers_)

    def frame_free_energies(self, Y) -> np.ndarray:
        """Per-frame energy targets: each frame gets its state's G_i."""
        return self.free_energy_[self.predict(Y)]

    def implied_timescale(self) -> float:
        """``-lag / log(lambda_2)`` of the transition matrix, in frames."""
        vals = np.sort(np.linalg.eigvalsh(_symmetrized_spectrum(self.transition_,
                                                                self.stationary_)))
        lam2 = vals[-2]
        if not 0 < lam2 < 1:
            raise ConvergenceError(f"second eigenvalue {lam2:.6g} outside (0, 1)")
        return -self.lag_frames / np.log(lam2)

    def to_dict(self) -> dict:
        return {
            "kind": "msm",
            "n_states": int(self.n_states),
            "lag_frames": int(self.lag_frames),
            "temperature": float(self.temperature),
            "centers": self.centers_.tolist(),
            "counts": self.counts_.tolist(),
            "transition": self.transition_.tolist(),
            "stationary": self.stationary_.tolist(),
            "free_energy": self.free_energy_.tolist(),
            "dropped_states": self.dropped_states_.tolist(),
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _symmetrized_spectrum(transition: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Similarity-transform a reversible T to a symmetric matrix sharing its
    spectrum, so eigenvalues can be taken with a symmetric solver."""
    sqrt_pi = np.sqrt(pi)
    return (sqrt_pi[:, None] * transition) / sqrt_pi[None, :]
