"""Time-ordered feature trajectories and per-frame force/energy records.

Two on-disk formats are supported:

* CSV: line 1 is ``t<dt>;<comma-separated feature names>``, each following
  line is one frame of comma-separated decimal values.
* Binary: magic (``FEMK`` for feature trajectories, ``FEMF`` for force
  records, ``FEME`` for energy records), ``u32`` format version, ``u64``
  frame count, ``u64`` feature count, ``f64`` dt, the row-major ``f64``
  value block, then one ``u32`` length-prefixed UTF-8 name per feature.
  All integers and floats are little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._validation import check_finite, check_matrix, check_vector, readonly
from .exceptions import FormatError, ValidationError

MAGIC_FEATURES = b"FEMK"
MAGIC_FORCES = b"FEMF"
MAGIC_ENERGIES = b"FEME"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIQQd")


@dataclass(frozen=True)
class FeatureTrajectory:
    """Time-ordered frames of feature vectors with a fixed time step.

    Parameters
    ----------
    frames : ndarray, shape (n_frames, n_features)
        Feature values, one row per frame. Must be finite with at least
        two frames and one feature.
    dt : float
        Time between consecutive frames (arbitrary but consistent units).
    feature_names : tuple of str
        One unique name per feature column.
    source_id : str
        Free-form label for provenance (file stem, chain id, ...).
    """

    frames: np.ndarray
    dt: float
    feature_names: tuple[str, ...]
    source_id: str = ""

    def __post_init__(self):
        frames = check_matrix(self.frames, "frames")
        if frames.shape[0] < 2:
            raise ValidationError(
                f"trajectory needs at least 2 frames, got {frames.shape[0]}"
            )
        if frames.shape[1] < 1:
            raise ValidationError("trajectory needs at least 1 feature")
        check_finite(frames, "frames")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != frames.shape[1]:
            raise ValidationError(
                f"{len(names)} feature names for {frames.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValidationError("feature_names contains duplicates")
        if not float(self.dt) > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        object.__setattr__(self, "frames", readonly(frames))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "feature_names", names)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_features(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class ForceRecord:
    """Per-frame coarse-grained coordinates and target mean forces.

    ``configs`` holds the configurations the forces were evaluated at;
    both matrices are ``n_frames x n_dof``.
    """

    configs: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        configs = check_matrix(self.configs, "configs")
        forces = check_matrix(self.forces, "forces")
        if configs.shape != forces.shape:
            raise ValidationError(
                f"configs shape {configs.shape} != forces shape {forces.shape}"
            )
        check_finite(configs, "configs")
        check_finite(forces, "forces")
        object.__setattr__(self, "configs", readonly(configs))
        object.__setattr__(self, "forces", readonly(forces))

    @property
    def n_frames(self) -> int:
        return self.configs.shape[0]

    @property
    def n_dof(self) -> int:
        return self.configs.shape[1]


@dataclass(frozen=True)
class EnergyRecord:
    """Per-frame prior energy, optionally with a correction column."""

    prior_energy: np.ndarray
    correction: np.ndarray | None = None

    def __post_init__(self):
        prior = check_vector(self.prior_energy, "prior_energy")
        check_finite(prior, "prior_energy")
        object.__setattr__(self, "prior_energy", readonly(prior))
        if self.correction is not None:
            corr = check_vector(self.correction, "correction", length=prior.shape[0])
            check_finite(corr, "correction")
            object.__setattr__(self, "correction", readonly(corr))

    @property
    def n_frames(self) -> int:
        return self.prior_energy.shape[0]


# ---------------------------------------------------------------------------
# binary container
# ---------------------------------------------------------------------------

def write_container(path, magic: bytes, matrix: np.ndarray, dt: float,
                    names: Sequence[str]) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    n_frames, n_cols = matrix.shape
    if len(names) != n_cols:
        raise ValidationError(f"{len(names)} names for {n_cols} columns")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, FORMAT_VERSION, n_frames, n_cols, dt))
        fh.write(matrix.tobytes())
        for name in names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def read_container(path, magic: bytes) -> tuple[np.ndarray, float, list[str]]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        got_magic, version, n_frames, n_cols, dt = _HEADER.unpack(head)
        if got_magic != magic:
            raise FormatError(
                f"{path}: bad magic {got_magic!r}, expected {magic!r}"
            )
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        n_values = n_frames * n_cols
        raw = fh.read(8 * n_values)
        if len(raw) != 8 * n_values:
            raise FormatError(f"{path}: truncated value block")
        matrix = np.frombuffer(raw, dtype="<f8").reshape(n_frames, n_cols).copy()
        names = []
        for _ in range(n_cols):
            (length,) = struct.unpack("<I", fh.read(4))
            names.append(fh.read(length).decode("utf-8"))
    return matrix, dt, names


# ---------------------------------------------------------------------------
# trajectory I/O
# ---------------------------------------------------------------------------

def _infer_format(path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "bin"):
            raise ValidationError(f"unknown format {fmt!r}, expected 'csv' or 'bin'")
        return fmt
    return "csv" if str(path).endswith(".csv") else "bin"


def load_trajectory(path, fmt: str | None = None) -> FeatureTrajectory:
    """Read a feature trajectory from ``path``.

    The format is inferred from the ``.csv`` extension unless ``fmt`` is
    given explicitly as ``"csv"`` or ``"bin"``.
    """
    fmt = _infer_format(path, fmt)
    source = Path(path).stem
    if fmt == "bin":
        matrix, dt, names = read_container(path, MAGIC_FEATURES)
        _reject_non_finite_rows(matrix, path)
        return FeatureTrajectory(matrix, dt=dt, feature_names=tuple(names),
                                 source_id=source)

    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("t") or ";" not in header:
            raise FormatError(
                f"{path}: malformed header {header!r}, expected 't<dt>;<names>'"
            )
        dt_text, _, names_text = header.partition(";")
        try:
            dt = float(dt_text[1:])
        except ValueError as exc:
            raise FormatError(f"{path}: cannot parse dt from {dt_text!r}") from exc
        names = tuple(n.strip() for n in names_text.split(","))
        rows = []
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise FormatError(
                    f"{path}: row {lineno} has {len(parts)} values, expected {len(names)}"
                )
            try:
                values = [float(p) for p in parts]
            except ValueError as exc:
                raise FormatError(f"{path}: row {lineno} has a non-numeric value") from exc
            for col, v in enumerate(values):
                if not np.isfinite(v):
                    raise ValidationError(
                        f"{path}: non-finite value in row {lineno}, column {col}"
                    )
            rows.append(values)
    if len(rows) < 2:
        raise ValidationError(f"{path}: fewer than 2 frames")
    return FeatureTrajectory(np.array(rows), dt=dt, feature_names=names,
                             source_id=source)


def _reject_non_finite_rows(matrix: np.ndarray, path) -> None:
    bad = ~np.isfinite(matrix)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValidationError(f"{path}: non-finite value in row {r + 1}, column {c}")


def save_trajectory(traj: FeatureTrajectory, path, fmt: str | None = None) -> None:
    """Write ``traj`` to ``path``; binary round-trips bit-exactly, CSV uses
    shortest exact decimal representations."""
    fmt = _infer_format(path, fmt)
    if fmt == "bin":
        write_container(path, MAGIC_FEATURES, traj.frames, traj.dt,
                        traj.feature_names)
        return
    for name in traj.feature_names:
        if "," in name or ";" in name or "\n" in name:
            raise ValidationError(f"feature name {name!r} not representable in CSV")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"t{traj.dt!r};{','.join(traj.feature_names)}\n")
        for row in traj.frames:
            fh.write(",".join(repr(v) for v in row.tolist()) + "\n")


# ---------------------------------------------------------------------------
# force / energy record I/O (shared binary container)
# ---------------------------------------------------------------------------

def save_force_record(record: ForceRecord, path, dt: float = 1.0) -> None:
    d = record.n_dof
    matrix = np.hstack([record.configs, record.forces])
    names = [f"config_{i}" for i in range(d)] + [f"force_{i}" for i in range(d)]
    write_container(path, MAGIC_FORCES, matrix, dt, names)


def load_force_record(path) -> ForceRecord:
    matrix, _, names = read_container(path, MAGIC_FORCES)
    if matrix.shape[1] % 2 != 0:
        raise FormatError(f"{path}: force container must hold config|force column pairs")
    d = matrix.shape[1] // 2
    expected = [f"config_{i}" for i in range(d)] + [f"force_{i}" for i in range(d)]
    if names != expected:
        raise FormatError(f"{path}: unexpected force container columns {names}")
    return ForceRecord(configs=matrix[:, :d], forces=matrix[:, d:])


def save_energy_record(record: EnergyRecord, path, dt: float = 1.0) -> None:
    cols = [record.prior_energy]
    names = ["prior_energy"]
    if record.correction is not None:
        cols.append(record.correction)
        names.append("delta_e")
    write_container(path, MAGIC_ENERGIES, np.column_stack(cols), dt, names)


def load_energy_record(path) -> EnergyRecord:
    matrix, _, names = read_container(path, MAGIC_ENERGIES)
    if "prior_energy" not in names:
        raise FormatError(f"{path}: energy container lacks a 'prior_energy' column")
    prior = matrix[:, names.index("prior_energy")]
    correction = matrix[:, names.index("delta_e")] if "delta_e" in names else None
    return EnergyRecord(prior_energy=prior, correction=correction)


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------

def pairwise_distance_features(configs, dt: float = 1.0,
                               source_id: str = "") -> FeatureTrajectory:
    """Euclidean distances between all site pairs, per frame.

    ``configs`` is ``n_frames x (3 * n_sites)`` with columns grouped as
    ``(x, y, z)`` triples per site. Features are ordered lexicographically
    by site-index pair ``(i, j)`` with ``i < j`` and named ``d{i}-{j}``.
    """
    configs = check_matrix(configs, "configs")
    check_finite(configs, "configs")
    if configs.shape[1] % 3 != 0:
        raise ValidationError(
            f"column count {configs.shape[1]} not divisible by 3"
        )
    n_sites = configs.shape[1] // 3
    if n_sites < 2:
        raise ValidationError(f"need at least 2 sites, got {n_sites}")
    xyz = configs.reshape(configs.shape[0], n_sites, 3)
    pairs = [(i, j) for i in range(n_sites) for j in range(i + 1, n_sites)]
    feats = np.empty((configs.shape[0], len(pairs)))
    for col, (i, j) in enumerate(pairs):
        feats[:, col] = np.linalg.norm(xyz[:, i, :] - xyz[:, j, :], axis=1)
    names = tuple(f"d{i}-{j}" for i, j in pairs)
    return FeatureTrajectory(feats, dt=dt, feature_names=names, source_id=source_id)
