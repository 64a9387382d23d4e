"""Ensemble agreement metrics on reduced coordinates.

The headline metric is the KL divergence between binned 2-D densities of
a ground-truth ensemble (P) and a model ensemble (Q), both projected with
the same ground-truth-fitted TICA model. Histograms share one grid
spanning the union of both bounding boxes and are smoothed with a
pseudo-count per bin, so the divergence is finite on empty bins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix
from .exceptions import ValidationError
from .freeenergy import LandscapeGrid


@dataclass(frozen=True)
class KlReport:
    """KL divergence and the grid/smoothing settings it was computed with."""

    kl_nats: float
    bounds: tuple[tuple[float, float], tuple[float, float]]
    nx: int
    ny: int
    smoothing_epsilon: float
    n_truth: int
    n_model: int
    marginal_kl: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "kl_nats": self.kl_nats,
            "bounds": [list(self.bounds[0]), list(self.bounds[1])],
            "nx": self.nx,
            "ny": self.ny,
            "smoothing_epsilon": self.smoothing_epsilon,
            "n_truth": self.n_truth,
            "n_model": self.n_model,
            "marginal_kl": list(self.marginal_kl),
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _union_range(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    lo = float(min(a.min(), b.min()))
    hi = float(max(a.max(), b.max()))
    if lo == hi:
        pad = 0.5e-9 * max(abs(lo), 1.0) + 1e-12
        lo, hi = lo - pad, hi + pad
    return lo, hi


def _smoothed(counts: np.ndarray, n: int, epsilon: float) -> np.ndarray:
    return (counts + epsilon) / (n + epsilon * counts.size)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_divergence_2d(truth_y2, model_y2, nx: int = 100, ny: int = 100,
                     epsilon: float = 0.5) -> KlReport:
    """KL(truth || model) over a shared smoothed 2-D histogram.

    Each histogram is smoothed as ``(count + epsilon) / (n + epsilon*nbins)``.
    Marginal divergences along each axis use the same rule with ``nx``
    (respectively ``ny``) bins.
    """
    truth = check_matrix(truth_y2, "truth_y2")
    model = check_matrix(model_y2, "model_y2")
    for name, arr in (("truth_y2", truth), ("model_y2", model)):
        if arr.shape[0] == 0:
            raise ValidationError(f"{name} is empty")
        if arr.shape[1] != 2:
            raise ValidationError(f"{name} must have 2 columns, got {arr.shape[1]}")
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")

    xr = _union_range(truth[:, 0], model[:, 0])
    yr = _union_range(truth[:, 1], model[:, 1])
    p_counts, xedges, yedges = np.histogram2d(truth[:, 0], truth[:, 1],
                                              bins=[nx, ny], range=[xr, yr])
    q_counts, _, _ = np.histogram2d(model[:, 0], model[:, 1],
                                    bins=[nx, ny], range=[xr, yr])
    p = _smoothed(p_counts, truth.shape[0], epsilon)
    q = _smoothed(q_counts, model.shape[0], epsilon)
    if epsilon == 0.0 and np.any((p > 0) & (q == 0)):
        raise ValidationError(
            "epsilon=0 with truth mass in bins the model never visits; "
            "the divergence is infinite"
        )
    kl = _kl(p, q)

    marginals = []
    for axis, (rng, bins) in enumerate(((xr, nx), (yr, ny))):
        pc, _ = np.histogram(truth[:, axis], bins=bins, range=rng)
        qc, _ = np.histogram(model[:, axis], bins=bins, range=rng)
        pm = _smoothed(pc, truth.shape[0], epsilon)
        qm = _smoothed(qc, model.shape[0], epsilon)
        if epsilon == 0.0 and np.any((pm > 0) & (qm == 0)):
            raise ValidationError(
                "epsilon=0 with truth mass in marginal bins the model never visits"
            )
        marginals.append(_kl(pm, qm))

    return KlReport(kl_nats=kl, bounds=(xr, yr), nx=nx, ny=ny,
                    smoothing_epsilon=epsilon,
                    n_truth=truth.shape[0], n_model=model.shape[0],
                    marginal_kl=(marginals[0], marginals[1]))


def check_explained_variance(model, k: int = 2,
                             threshold: float = 0.70) -> tuple[bool, dict]:
    """Whether the first ``k`` components carry at least ``threshold`` of
    the (positive-eigenvalue) variance."""
    ratios = np.asarray(model.explained_variance_ratio_)
    if not 1 <= k <= ratios.shape[0]:
        raise ValidationError(f"k must be in [1, {ratios.shape[0]}], got {k}")
    cumulative = float(ratios[:k].sum())
    passed = bool(cumulative >= threshold)
    return passed, {
        "passed": passed,
        "k": k,
        "threshold": threshold,
        "cumulative_ratio": cumulative,
        "ratios": ratios.tolist(),
    }


def landscape_compare(truth_grid: LandscapeGrid, model_grid: LandscapeGrid) -> float:
    """Offset-free RMS difference of per-bin means over shared occupied bins.

    Each grid's mean over the shared bins is subtracted first, so grids
    differing by a constant compare as identical.
    """
    if (truth_grid.nx != model_grid.nx or truth_grid.ny != model_grid.ny
            or truth_grid.bounds != model_grid.bounds):
        raise ValidationError(
            f"grid geometry mismatch: {truth_grid.bounds} {truth_grid.nx}x{truth_grid.ny} "
            f"vs {model_grid.bounds} {model_grid.nx}x{model_grid.ny}"
        )
    shared = truth_grid.occupied & model_grid.occupied
    if not shared.any():
        raise ValidationError("grids share no occupied bins")
    a = truth_grid.mean_value[shared]
    b = model_grid.mean_value[shared]
    diff = (a - a.mean()) - (b - b.mean())
    return float(np.sqrt(np.mean(diff * diff)))
