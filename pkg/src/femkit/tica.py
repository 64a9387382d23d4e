"""Time-lagged independent component analysis.

Estimates instantaneous and symmetrized time-lagged covariances from one
or more trajectories, solves the generalized symmetric eigenproblem
``C_tau v = lambda * C0 v``, and projects data onto the slowest modes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_matrix, readonly
from .exceptions import SingularMatrixError, ValidationError
from .trajectory import FeatureTrajectory

#: Eigenvalues of a lagged autocorrelation problem should lie in [-1, 1];
#: estimates beyond this slack indicate inconsistent covariances.
SPECTRUM_SLACK = 1e-6


@dataclass(frozen=True)
class CovariancePair:
    """Mean, instantaneous covariance, and symmetrized lagged covariance.

    Both matrices are mean-centered with the global mean over all frames.
    ``c_tau`` averages the forward and reverse lagged covariances so it is
    symmetric by construction; lagged pairs never span a trajectory
    boundary.
    """

    mean: np.ndarray
    c0: np.ndarray
    c_tau: np.ndarray
    lag_frames: int
    n_samples: int
    n_pairs: int
    dt: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean", readonly(np.asarray(self.mean, dtype=np.float64)))
        object.__setattr__(self, "c0", readonly(np.asarray(self.c0, dtype=np.float64)))
        object.__setattr__(self, "c_tau", readonly(np.asarray(self.c_tau, dtype=np.float64)))

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]


def _as_trajectory_list(X) -> list[FeatureTrajectory]:
    if isinstance(X, FeatureTrajectory):
        return [X]
    if isinstance(X, np.ndarray):
        return [FeatureTrajectory(X, dt=1.0,
                                  feature_names=tuple(f"x{i}" for i in range(X.shape[1])))]
    trajs = list(X)
    if not trajs:
        raise ValidationError("need at least one trajectory")
    if not all(isinstance(t, FeatureTrajectory) for t in trajs):
        raise ValidationError("expected FeatureTrajectory instances")
    return trajs


def estimate_covariances(trajectories, lag_frames: int) -> CovariancePair:
    """Accumulate C0 and the symmetrized lagged covariance over trajectories.

    ``c0`` is normalized by the total frame count and ``c_tau`` by the total
    number of lagged pairs; both use the global mean. Raises if any
    trajectory is shorter than ``lag_frames + 1`` or if feature names
    differ across trajectories.
    """
    trajs = _as_trajectory_list(trajectories)
    lag_frames = int(lag_frames)
    if lag_frames < 1:
        raise ValidationError(f"lag_frames must be >= 1, got {lag_frames}")
    names = trajs[0].feature_names
    for t in trajs:
        if t.feature_names != names:
            raise ValidationError(
                f"feature mismatch across trajectories: {t.feature_names} != {names}"
            )
        if t.n_frames <= lag_frames:
            raise ValidationError(
                f"trajectory {t.source_id!r} has {t.n_frames} frames, "
                f"needs more than lag_frames={lag_frames}"
            )

    n_total = sum(t.n_frames for t in trajs)
    d = trajs[0].n_features
    mean = np.zeros(d)
    for t in trajs:
        mean += t.frames.sum(axis=0)
    mean /= n_total

    c0 = np.zeros((d, d))
    c_lagged = np.zeros((d, d))
    n_pairs = 0
    for t in trajs:
        x = t.frames - mean
        c0 += x.T @ x
        head = x[:-lag_frames]
        tail = x[lag_frames:]
        c_lagged += head.T @ tail
        n_pairs += head.shape[0]
    c0 /= n_total
    c0 = 0.5 * (c0 + c0.T)
    c_lagged /= n_pairs
    c_tau = 0.5 * (c_lagged + c_lagged.T)
    return CovariancePair(mean=mean, c0=c0, c_tau=c_tau, lag_frames=lag_frames,
                          n_samples=n_total, n_pairs=n_pairs, dt=trajs[0].dt)


def default_ridge(c0: np.ndarray) -> float:
    """Default Tikhonov strength: 1e-6 of the mean diagonal of C0."""
    return 1e-6 * np.trace(c0) / c0.shape[0]


def _solve_generalized(c_tau: np.ndarray, c0: np.ndarray, ridge: float,
                       n_components: int) -> tuple[np.ndarray, np.ndarray]:
    """Top eigenpairs of ``c_tau v = lambda (c0 + ridge I) v``, descending."""
    c0_reg = c0 + ridge * np.eye(c0.shape[0])
    eigs = scipy.linalg.eigvalsh(c0_reg)
    if eigs[0] <= 0 or eigs[-1] / eigs[0] > 1e14:
        raise SingularMatrixError(
            f"C0 + ridge*I is numerically singular "
            f"(condition estimate {eigs[-1] / max(eigs[0], 1e-300):.2e})"
        )
    vals, vecs = scipy.linalg.eigh(c_tau, c0_reg)
    order = np.argsort(-vals, kind="stable")[:n_components]
    vals = vals[order]
    vecs = vecs[:, order]
    # sign convention: largest-magnitude entry of each eigenvector positive
    for i in range(vecs.shape[1]):
        j = np.argmax(np.abs(vecs[:, i]))
        if vecs[j, i] < 0:
            vecs[:, i] = -vecs[:, i]
    return vals, vecs


class TICA(BaseEstimator, TransformerMixin):
    """Slow collective-coordinate extraction via time-lagged covariances.

    Solves ``C_tau v = lambda (C0 + ridge I) v`` with the lagged covariance
    symmetrized to guarantee a real spectrum, then projects mean-centered
    features onto the leading eigenvectors.

    Parameters
    ----------
    lag_frames : int, default=10
        Frame offset used for the lagged covariance.
    n_components : int or None, default=None
        Number of slow modes to retain; ``None`` keeps all.
    ridge : float or None, default=None
        Tikhonov regularization added to C0. ``None`` uses
        ``1e-6 * trace(C0) / n_features``.

    Attributes
    ----------
    mean_ : ndarray, shape (n_features,)
        Global feature mean used for centering.
    eigenvalues_ : ndarray, shape (n_components,)
        Generalized eigenvalues, sorted descending.
    eigenvectors_ : ndarray, shape (n_features, n_components)
        Eigenvector columns, normalized against the regularized C0 and
        sign-fixed so each column's largest-magnitude entry is positive.
    explained_variance_ratio_ : ndarray, shape (n_components,)
        ``max(lambda_i, 0)`` normalized over retained components.
    lag_time_ : float
        ``lag_frames * dt`` in the trajectories' time units.
    """

    def __init__(self, lag_frames: int = 10, n_components: int | None = None,
                 ridge: float | None = None):
        self.lag_frames = lag_frames
        self.n_components = n_components
        self.ridge = ridge

    def fit(self, X, y=None):
        """Estimate covariances from ``X`` and solve the eigenproblem.

        ``X`` may be a FeatureTrajectory, a list of them, or a plain
        ``(n_frames, n_features)`` array (then ``dt = 1``).
        """
        cov = estimate_covariances(X, self.lag_frames)
        trajs = _as_trajectory_list(X)
        self._finish_fit(cov, trajs[0].feature_names)
        return self

    def _finish_fit(self, cov: CovariancePair, feature_names: tuple[str, ...]):
        d = cov.n_features
        k = d if self.n_components is None else int(self.n_components)
        if not 1 <= k <= d:
            raise ValidationError(f"n_components must be in [1, {d}], got {k}")
        ridge = default_ridge(cov.c0) if self.ridge is None else float(self.ridge)
        if ridge < 0:
            raise ValidationError(f"ridge must be >= 0, got {ridge}")
        vals, vecs = _solve_generalized(cov.c_tau, cov.c0, ridge, k)

        self.covariances_ = cov
        self.feature_names_ = tuple(feature_names)
        self.n_features_in_ = d
        self.mean_ = cov.mean
        self.eigenvalues_ = vals
        self.eigenvectors_ = vecs
        self.ridge_ = ridge
        self.lag_time_ = cov.lag_frames * cov.dt
        positive = np.maximum(vals, 0.0)
        total = positive.sum()
        self.explained_variance_ratio_ = (
            positive / total if total > 0 else np.zeros_like(positive)
        )
        self.spectrum_warnings_ = []
        for i, lam in enumerate(vals):
            if lam > 1.0 + SPECTRUM_SLACK or lam < -1.0 - SPECTRUM_SLACK:
                msg = (f"eigenvalue {i} = {lam:.6g} outside [-1, 1]; covariance "
                       f"estimates may be inconsistent")
                self.spectrum_warnings_.append(msg)
                warnings.warn(msg, stacklevel=3)
        return self

    def transform(self, X) -> np.ndarray:
        """Project frames onto all retained components."""
        return self.project(X, self.eigenvalues_.shape[0])

    def project(self, X, k: int) -> np.ndarray:
        """Project onto the first ``k`` components: ``V_k^T (x - mean)``."""
        if isinstance(X, FeatureTrajectory):
            if X.feature_names != self.feature_names_:
                raise ValidationError(
                    f"feature-name mismatch: model has {self.feature_names_}, "
                    f"trajectory has {X.feature_names}"
                )
            frames = X.frames
        else:
            frames = check_matrix(X, "X")
            if frames.shape[1] != self.n_features_in_:
                raise ValidationError(
                    f"expected {self.n_features_in_} features, got {frames.shape[1]}"
                )
        if not 1 <= k <= self.eigenvalues_.shape[0]:
            raise ValidationError(
                f"k must be in [1, {self.eigenvalues_.shape[0]}], got {k}"
            )
        return (frames - self.mean_) @ self.eigenvectors_[:, :k]

    def validate(self) -> dict:
        """Numerical health check of the fitted decomposition.

        Returns the worst relative eigen-residual, the worst deviation from
        C0-orthonormality (measured against the regularized C0 actually
        solved), and the symmetry defects of both covariance matrices.
        """
        cov = self.covariances_
        c0_reg = cov.c0 + self.ridge_ * np.eye(cov.n_features)
        v = self.eigenvectors_
        lhs = cov.c_tau @ v
        rhs = c0_reg @ v * self.eigenvalues_
        norm = np.linalg.norm(cov.c_tau, 2)
        residuals = np.linalg.norm(lhs - rhs, axis=0) / max(norm, 1e-300)
        gram = v.T @ c0_reg @ v
        return {
            "max_eigen_residual": float(residuals.max()),
            "max_orthonormality_defect": float(
                np.abs(gram - np.eye(gram.shape[0])).max()
            ),
            "c0_symmetry_defect": float(np.abs(cov.c0 - cov.c0.T).max()),
            "c_tau_symmetry_defect": float(np.abs(cov.c_tau - cov.c_tau.T).max()),
        }

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": "tica",
            "feature_names": list(self.feature_names_),
            "mean": self.mean_.tolist(),
            "eigenvalues": self.eigenvalues_.tolist(),
            "eigenvectors": self.eigenvectors_.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio_.tolist(),
            "lag_frames": int(self.covariances_.lag_frames),
            "lag_time": float(self.lag_time_),
            "ridge": float(self.ridge_),
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "TICA":
        model = cls(lag_frames=int(doc["lag_frames"]),
                    n_components=len(doc["eigenvalues"]),
                    ridge=float(doc["ridge"]))
        model.feature_names_ = tuple(doc["feature_names"])
        model.n_features_in_ = len(model.feature_names_)
        model.mean_ = np.array(doc["mean"])
        model.eigenvalues_ = np.array(doc["eigenvalues"])
        model.eigenvectors_ = np.array(doc["eigenvectors"])
        model.explained_variance_ratio_ = np.array(doc["explained_variance_ratio"])
        model.lag_time_ = float(doc["lag_time"])
        model.ridge_ = float(doc["ridge"])
        model.spectrum_warnings_ = []
        return model

    @classmethod
    def from_json(cls, path) -> "TICA":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_tica(cov: CovariancePair, n_components: int | None = None,
             ridge: float | None = None,
             feature_names: Sequence[str] | None = None) -> TICA:
    """Build a fitted :class:`TICA` from precomputed covariances."""
    names = (tuple(feature_names) if feature_names is not None
             else tuple(f"x{i}" for i in range(cov.n_features)))
    model = TICA(lag_frames=cov.lag_frames, n_components=n_components, ridge=ridge)
    model._finish_fit(cov, names)
    return model


def project(model: TICA, trajectory, k: int) -> np.ndarray:
    """Functional alias for :meth:`TICA.project`."""
    return model.project(trajectory, k)
