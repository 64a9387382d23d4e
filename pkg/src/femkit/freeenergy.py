"""Marginal density estimation and Boltzmann inversion.

Per-component 1-D densities over reduced coordinates are turned into free
energies via ``G_k(y) = -k_B T log P_k(y)`` and summed across components.
Densities are floored at ``floor_epsilon`` before the log so free energies
stay finite; the additive constant is left to be resolved at training time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_matrix, check_vector, readonly
from .constants import kbt
from .exceptions import FormatError, ValidationError
from .trajectory import (MAGIC_ENERGIES, EnergyRecord, read_container,
                         write_container)

#: Resolution of the precomputed evaluation grid backing Gaussian KDE.
_KDE_GRID_SIZE = 4096
#: Kernel support, in bandwidths, kept around the sample range.
_KDE_PAD = 8.0


@dataclass(frozen=True)
class _Histogram1D:
    edges: np.ndarray        # ascending, length n_bins + 1
    probabilities: np.ndarray  # sums to 1

    def density(self, y: np.ndarray) -> np.ndarray:
        widths = np.diff(self.edges)
        # half-open bins, last bin closed (np.histogram convention)
        idx = np.searchsorted(self.edges, y, side="right") - 1
        idx = np.where(y == self.edges[-1], len(widths) - 1, idx)
        inside = (idx >= 0) & (idx < len(widths))
        out = np.zeros_like(y, dtype=np.float64)
        safe = np.clip(idx, 0, len(widths) - 1)
        out[inside] = (self.probabilities[safe] / widths[safe])[inside]
        return out


@dataclass(frozen=True)
class _GaussianKde1D:
    samples: np.ndarray
    bandwidth: float
    grid: np.ndarray
    grid_density: np.ndarray

    def density(self, y: np.ndarray) -> np.ndarray:
        out = np.interp(y, self.grid, self.grid_density, left=0.0, right=0.0)
        return out


def _binned_kde(samples: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian KDE on a fine grid via linear binning and convolution."""
    lo = samples.min() - _KDE_PAD * h
    hi = samples.max() + _KDE_PAD * h
    grid = np.linspace(lo, hi, _KDE_GRID_SIZE)
    dx = grid[1] - grid[0]
    pos = (samples - lo) / dx
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    i0 = np.clip(i0, 0, _KDE_GRID_SIZE - 2)
    weights = np.zeros(_KDE_GRID_SIZE)
    np.add.at(weights, i0, 1.0 - frac)
    np.add.at(weights, i0 + 1, frac)
    half = int(np.ceil(_KDE_PAD * h / dx))
    kx = np.arange(-half, half + 1) * dx
    kernel = np.exp(-0.5 * (kx / h) ** 2) / (h * np.sqrt(2.0 * np.pi))
    density = np.convolve(weights, kernel, mode="same") / samples.shape[0]
    return grid, density


@dataclass(frozen=True)
class MarginalDensity:
    """Independent 1-D density estimators, one per reduced component.

    ``kind`` is ``"histogram"`` or ``"kde"``. Evaluation returns a
    probability density floored at ``floor_epsilon``; queries outside an
    estimator's support evaluate to the floor.
    """

    kind: str
    marginals: tuple
    support: tuple[tuple[float, float], ...]
    floor_epsilon: float = 1e-12

    @property
    def n_components(self) -> int:
        return len(self.marginals)

    def density(self, y) -> np.ndarray:
        """Floored per-component densities for ``y`` of shape (n, d)."""
        y = check_matrix(y, "y")
        if y.shape[1] != self.n_components:
            raise ValidationError(
                f"expected {self.n_components} components, got {y.shape[1]}"
            )
        out = np.empty_like(y)
        for k, marginal in enumerate(self.marginals):
            out[:, k] = marginal.density(y[:, k])
        return np.maximum(out, self.floor_epsilon)


def fit_marginals(y, kind: str = "histogram", n_bins: int = 100,
                  bandwidth=None, floor_epsilon: float = 1e-12) -> MarginalDensity:
    """Fit one independent 1-D density per column of ``y``.

    Histograms use ``n_bins`` equal-width bins spanning the sample range
    widened by a 1e-9 relative margin. KDE uses a Gaussian kernel with
    Scott's-rule bandwidth ``std * n**(-1/5)`` per component unless
    ``bandwidth`` (scalar or per-component) overrides it.
    """
    y = check_matrix(y, "y")
    n, d = y.shape
    if n < 10:
        raise ValidationError(f"need at least 10 frames to fit marginals, got {n}")
    if kind not in ("histogram", "kde"):
        raise ValidationError(f"unknown density kind {kind!r}")
    if floor_epsilon <= 0:
        raise ValidationError(f"floor_epsilon must be > 0, got {floor_epsilon}")

    marginals = []
    support = []
    for k in range(d):
        col = y[:, k]
        lo, hi = float(col.min()), float(col.max())
        support.append((lo, hi))
        if kind == "histogram":
            margin = 1e-9 * max(hi - lo, abs(lo), abs(hi), 1.0)
            edges = np.linspace(lo - margin, hi + margin, n_bins + 1)
            counts, _ = np.histogram(col, bins=edges)
            marginals.append(_Histogram1D(edges=readonly(edges),
                                          probabilities=readonly(counts / n)))
        else:
            if bandwidth is None:
                h = float(col.std(ddof=1)) * n ** (-0.2)
            elif np.ndim(bandwidth) == 0:
                h = float(bandwidth)
            else:
                h = float(bandwidth[k])
            if h <= 0:
                raise ValidationError(
                    f"component {k} has zero variance; KDE bandwidth would be 0"
                )
            grid, dens = _binned_kde(col, h)
            marginals.append(_GaussianKde1D(samples=readonly(col.copy()),
                                            bandwidth=h,
                                            grid=readonly(grid),
                                            grid_density=readonly(dens)))
    return MarginalDensity(kind=kind, marginals=tuple(marginals),
                           support=tuple(support), floor_epsilon=floor_epsilon)


@dataclass(frozen=True)
class FreeEnergyTargets:
    """Per-frame free energies from Boltzmann-inverted marginal densities.

    ``g_total`` is the row sum of ``g_per_component``; ``delta_e`` is
    ``g_total - prior_energy`` once :func:`energy_correction` has run.
    The additive constant is not baked in (``constant_c_policy`` records
    where it is resolved).
    """

    g_total: np.ndarray
    g_per_component: np.ndarray
    temperature: float
    delta_e: np.ndarray | None = None
    constant_c_policy: str = "fit-closed-form-during-training"

    def __post_init__(self):
        object.__setattr__(self, "g_total", readonly(np.asarray(self.g_total, dtype=np.float64)))
        object.__setattr__(self, "g_per_component",
                           readonly(np.asarray(self.g_per_component, dtype=np.float64)))
        if self.delta_e is not None:
            object.__setattr__(self, "delta_e",
                               readonly(np.asarray(self.delta_e, dtype=np.float64)))

    @property
    def n_frames(self) -> int:
        return self.g_total.shape[0]


def boltzmann_invert(density: MarginalDensity, y,
                     temperature: float) -> FreeEnergyTargets:
    """Free energies ``G_k = -k_B T log(max(P_k, floor))`` per frame.

    ``g_total`` sums the per-component contributions, treating components
    as statistically independent.
    """
    if temperature <= 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    p = density.density(y)
    g_per_component = -kbt(temperature) * np.log(p)
    g_total = g_per_component.sum(axis=1)
    return FreeEnergyTargets(g_total=g_total, g_per_component=g_per_component,
                             temperature=temperature)


def energy_correction(targets: FreeEnergyTargets,
                      prior: EnergyRecord) -> FreeEnergyTargets:
    """Fill ``delta_e = g_total - prior_energy``."""
    if prior.n_frames != targets.n_frames:
        raise ValidationError(
            f"prior has {prior.n_frames} frames, targets have {targets.n_frames}"
        )
    delta = targets.g_total - prior.prior_energy
    return replace(targets, delta_e=delta)


# ---------------------------------------------------------------------------
# binned landscape grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LandscapeGrid:
    """Per-bin mean of a value over a 2-D grid.

    ``mean_value`` is zero-filled where ``count`` is zero; ``occupied``
    masks the bins whose mean is defined.
    """

    bounds: tuple[tuple[float, float], tuple[float, float]]
    nx: int
    ny: int
    mean_value: np.ndarray
    count: np.ndarray

    @property
    def occupied(self) -> np.ndarray:
        return self.count > 0

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        (x0, x1), (y0, y1) = self.bounds
        xs = x0 + (np.arange(self.nx) + 0.5) * (x1 - x0) / self.nx
        ys = y0 + (np.arange(self.ny) + 0.5) * (y1 - y0) / self.ny
        return xs, ys


def mean_energy_grid(y2, values, nx: int = 100, ny: int = 100) -> LandscapeGrid:
    """Bin 2-D points on an ``nx x ny`` grid and average ``values`` per bin.

    Bounds come from the data extrema; bins are half-open with the last
    bin closed on each axis.
    """
    y2 = check_matrix(y2, "y2")
    if y2.shape[0] == 0:
        raise ValidationError("need at least one point")
    if y2.shape[1] != 2:
        raise ValidationError(f"y2 must have 2 columns, got {y2.shape[1]}")
    values = check_vector(values, "values", length=y2.shape[0])
    if nx < 1 or ny < 1:
        raise ValidationError(f"grid must be at least 1x1, got {nx}x{ny}")

    def _axis_range(col):
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            pad = 0.5 * max(abs(lo), 1.0) * 1e-9 + 1e-12
            lo, hi = lo - pad, hi + pad
        return lo, hi

    xr = _axis_range(y2[:, 0])
    yr = _axis_range(y2[:, 1])
    count, _, _ = np.histogram2d(y2[:, 0], y2[:, 1], bins=[nx, ny], range=[xr, yr])
    total, _, _ = np.histogram2d(y2[:, 0], y2[:, 1], bins=[nx, ny], range=[xr, yr],
                                 weights=values)
    occupied = count > 0
    mean = np.zeros_like(total)
    mean[occupied] = total[occupied] / count[occupied]
    return LandscapeGrid(bounds=(xr, yr), nx=nx, ny=ny,
                         mean_value=readonly(mean),
                         count=readonly(count.astype(np.int64)))


def save_grid_csv(grid: LandscapeGrid, path) -> None:
    """Write a grid as CSV rows ``x_index,y_index,x_center,y_center,count,mean``.

    The mean field is empty for unoccupied bins.
    """
    xs, ys = grid.centers()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_index", "y_index", "x_center", "y_center", "count", "mean"])
        for i in range(grid.nx):
            for j in range(grid.ny):
                c = int(grid.count[i, j])
                mean = repr(float(grid.mean_value[i, j])) if c > 0 else ""
                writer.writerow([i, j, repr(float(xs[i])), repr(float(ys[j])), c, mean])


def load_grid_csv(path) -> LandscapeGrid:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x_index", "y_index", "x_center", "y_center", "count", "mean"]:
            raise FormatError(f"{path}: unexpected grid CSV header {header}")
        rows = list(reader)
    if not rows:
        raise FormatError(f"{path}: empty grid")
    nx = max(int(r[0]) for r in rows) + 1
    ny = max(int(r[1]) for r in rows) + 1
    count = np.zeros((nx, ny), dtype=np.int64)
    mean = np.zeros((nx, ny))
    xs = np.zeros(nx)
    ys = np.zeros(ny)
    for r in rows:
        i, j = int(r[0]), int(r[1])
        xs[i] = float(r[2])
        ys[j] = float(r[3])
        count[i, j] = int(r[4])
        mean[i, j] = float(r[5]) if r[5] != "" else 0.0
    dx = xs[1] - xs[0] if nx > 1 else 1.0
    dy = ys[1] - ys[0] if ny > 1 else 1.0
    bounds = ((float(xs[0] - dx / 2), float(xs[-1] + dx / 2)),
              (float(ys[0] - dy / 2), float(ys[-1] + dy / 2)))
    return LandscapeGrid(bounds=bounds, nx=nx, ny=ny,
                         mean_value=readonly(mean), count=readonly(count))


# ---------------------------------------------------------------------------
# target serialization (FEME container)
# ---------------------------------------------------------------------------

def save_targets(targets: FreeEnergyTargets, path) -> None:
    d = targets.g_per_component.shape[1]
    cols = [targets.g_per_component[:, k] for k in range(d)]
    names = [f"g_{k}" for k in range(d)]
    cols.append(targets.g_total)
    names.append("g_total")
    if targets.delta_e is not None:
        cols.append(targets.delta_e)
        names.append("delta_e")
    write_container(path, MAGIC_ENERGIES, np.column_stack(cols),
                    targets.temperature, names)


def load_targets(path) -> FreeEnergyTargets:
    matrix, temperature, names = read_container(path, MAGIC_ENERGIES)
    if "g_total" not in names:
        raise FormatError(f"{path}: target container lacks a 'g_total' column")
    g_cols = [i for i, n in enumerate(names) if n.startswith("g_") and n != "g_total"]
    if not g_cols:
        raise FormatError(f"{path}: target container lacks per-component columns")
    delta = matrix[:, names.index("delta_e")] if "delta_e" in names else None
    return FreeEnergyTargets(
        g_total=matrix[:, names.index("g_total")],
        g_per_component=matrix[:, g_cols],
        temperature=temperature,
        delta_e=delta,
    )
