"""Overdamped Langevin dynamics.

Euler-Maruyama integration of ``x <- x + (dt/gamma) F(x) + sqrt(2 D dt) xi``
with ``D = k_B T / gamma``. Noise comes from counter-based Philox streams
keyed by ``(seed, chain index)`` and mapped through the inverse normal
CDF, so every chain's noise is a pure function of its key and step: runs
are bit-reproducible and chains are order-independent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from ._validation import check_matrix
from .constants import kbt
from .exceptions import SimulationDivergedError, ValidationError
from .trajectory import FeatureTrajectory, ForceRecord

#: Integration is aborted once any coordinate exceeds this magnitude.
DIVERGENCE_LIMIT = 1e6
#: Steps drawn per noise block (bounds memory, does not affect the stream).
_BLOCK_STEPS = 16384


@dataclass(frozen=True)
class LangevinConfig:
    """Integration settings for one multi-chain run.

    One chain is launched per row of ``initial_positions``; a frame (and
    its force) is recorded every ``stride`` steps, giving
    ``n_steps // stride`` frames per chain at an output time step of
    ``dt * stride``.
    """

    n_steps: int
    initial_positions: np.ndarray
    dt: float = 1e-3
    gamma: float = 1.0
    temperature: float = 300.0
    stride: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")
        if self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature}")
        if self.n_steps < 1:
            raise ValidationError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        if self.n_steps // self.stride < 2:
            raise ValidationError(
                f"n_steps={self.n_steps} with stride={self.stride} records "
                f"fewer than 2 frames"
            )
        starts = check_matrix(self.initial_positions, "initial_positions")
        if starts.shape[0] < 1:
            raise ValidationError("need at least one initial position")
        object.__setattr__(self, "initial_positions", starts)

    @property
    def n_chains(self) -> int:
        return self.initial_positions.shape[0]

    @property
    def diffusion(self) -> float:
        return kbt(self.temperature) / self.gamma


@dataclass(frozen=True)
class SimulationResult:
    """Per-chain trajectories and matching force records, in chain order."""

    trajectories: list[FeatureTrajectory]
    force_records: list[ForceRecord]

    def concatenated(self) -> tuple[np.ndarray, np.ndarray]:
        """All frames and forces stacked across chains (chain order)."""
        frames = np.vstack([t.frames for t in self.trajectories])
        forces = np.vstack([f.forces for f in self.force_records])
        return frames, forces


def _chain_noise(seed: int, chain: int, start_step: int, n_steps: int,
                 dim: int) -> np.ndarray:
    """Standard-normal noise block for one chain, indexed by step.

    Value ``[t, d]`` depends only on ``(seed, chain, start_step + t, d)``.
    """
    bg = Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, chain])
    bg.advance(start_step * dim)
    raw = bg.random_raw(n_steps * dim)
    u = (raw.astype(np.float64) + 0.5) / 2.0 ** 64
    return ndtri(u).reshape(n_steps, dim)


def _stability_check(system, cfg: LangevinConfig) -> None:
    # curvature probe via force finite differences at the initial positions
    x0 = cfg.initial_positions
    h = 1e-4
    curv = 0.0
    for d in range(x0.shape[1]):
        shift = np.zeros(x0.shape[1])
        shift[d] = h
        df = system.force_many(x0 + shift) - system.force_many(x0 - shift)
        curv = max(curv, float(np.abs(df[:, d] / (2.0 * h)).max()))
    if cfg.dt * curv / cfg.gamma > 0.1:
        warnings.warn(
            f"dt={cfg.dt} is large for local curvature ~{curv:.3g} "
            f"(dt * curvature / gamma = {cfg.dt * curv / cfg.gamma:.3g} > 0.1); "
            f"integration may be unstable",
            stacklevel=3,
        )


def simulate(system, cfg: LangevinConfig) -> SimulationResult:
    """Run one overdamped chain per initial position.

    ``system`` must expose ``force_many(X) -> (n, dim)``; reference
    landscapes, potentials, and priors all qualify (combine a model and a
    prior with :class:`CompositeSystem`). Raises
    :class:`SimulationDivergedError` if any coordinate passes 1e6.
    """
    starts = cfg.initial_positions
    n_chains, dim = starts.shape
    f0 = check_matrix(system.force_many(starts), "initial forces")
    if not np.all(np.isfinite(f0)):
        raise ValidationError("forces are not finite at the initial positions")
    _stability_check(system, cfg)

    drift = cfg.dt / cfg.gamma
    noise_scale = np.sqrt(2.0 * cfg.diffusion * cfg.dt)
    n_frames = cfg.n_steps // cfg.stride

    x = starts.copy()
    frames = np.empty((n_chains, n_frames, dim))
    forces = np.empty((n_chains, n_frames, dim))
    frame_idx = 0
    pending = None  # frame awaiting the force at its (current) position

    for block_start in range(0, cfg.n_steps, _BLOCK_STEPS):
        block = min(_BLOCK_STEPS, cfg.n_steps - block_start)
        if noise_scale > 0.0:
            noise = np.stack([
                _chain_noise(cfg.seed, c, block_start, block, dim)
                for c in range(n_chains)
            ])                                            # (chains, block, dim)
        else:
            noise = None
        for i in range(block):
            f = system.force_many(x)
            if pending is not None:
                forces[:, pending, :] = f
                pending = None
            x = x + drift * f
            if noise is not None:
                x = x + noise_scale * noise[:, i, :]
            step = block_start + i + 1
            worst = np.abs(x).max(axis=1)
            if worst.max() > DIVERGENCE_LIMIT:
                chain = int(worst.argmax())
                raise SimulationDivergedError(chain, step, float(worst.max()))
            if step % cfg.stride == 0:
                frames[:, frame_idx, :] = x
                pending = frame_idx
                frame_idx += 1
    if pending is not None:
        forces[:, pending, :] = system.force_many(x)

    names = tuple(f"x{i}" for i in range(dim))
    out_dt = cfg.dt * cfg.stride
    trajectories = []
    force_records = []
    for c in range(n_chains):
        trajectories.append(FeatureTrajectory(
            frames[c], dt=out_dt, feature_names=names,
            source_id=f"chain{c:03d}",
        ))
        force_records.append(ForceRecord(configs=frames[c], forces=forces[c]))
    return SimulationResult(trajectories=trajectories, force_records=force_records)


class CompositeSystem:
    """Learned potential plus prior, exposed with the sampler interface."""

    def __init__(self, model, prior):
        self.model = model
        self.prior = prior

    def force_many(self, X) -> np.ndarray:
        return self.model.force_many(X) + self.prior.force_many(X)

    def energy_many(self, X) -> np.ndarray:
        return self.model.energy_many(X) + self.prior.energy_many(X)
