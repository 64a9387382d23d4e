"""Combined force-matching / energy-matching training.

The total objective is ``lambda_force * L_force + lambda_energy * L_energy``
with the weights constrained to sum to 1. ``L_force`` is the mean squared
force residual per frame; ``L_energy`` is the mean squared energy residual
after the optimal additive constant ``C* = -mean(residual)`` has been
absorbed in closed form, which makes the loss exactly invariant to a
constant shift of the targets. Setting either weight to zero reduces the
total bit-exactly to the other term.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_matrix, check_vector
from .exceptions import TrainingDivergedError, ValidationError
from .potential import NULL_PRIOR, PriorTerm, RbfNetPotential

#: lambda_energy grid reported for sweep runs.
LAMBDA_ENERGY_SWEEP = (0.0, 0.01, 0.05, 0.075, 0.1, 0.5, 0.8, 1.0)


@dataclass(frozen=True)
class LossConfig:
    """Weights and optimizer settings for combined training.

    ``lambda_force + lambda_energy`` must equal 1 within 1e-12.
    """

    lambda_force: float = 1.0
    lambda_energy: float = 0.0
    batch_size: int = 256
    max_epochs: int = 500
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda_force", "lambda_energy"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if abs(self.lambda_force + self.lambda_energy - 1.0) > 1e-12:
            raise ValidationError(
                f"lambda_force + lambda_energy must equal 1, got "
                f"{self.lambda_force} + {self.lambda_energy}"
            )
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValidationError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass(frozen=True)
class TrainingSet:
    """Aligned per-frame configurations, target forces, and energy targets."""

    configs: np.ndarray
    forces: np.ndarray | None = None
    g_total: np.ndarray | None = None

    def __post_init__(self):
        configs = check_matrix(self.configs, "configs")
        object.__setattr__(self, "configs", configs)
        if self.forces is not None:
            forces = check_matrix(self.forces, "forces")
            if forces.shape != configs.shape:
                raise ValidationError(
                    f"forces shape {forces.shape} != configs shape {configs.shape}"
                )
            object.__setattr__(self, "forces", forces)
        if self.g_total is not None:
            g = check_vector(self.g_total, "g_total", length=configs.shape[0])
            object.__setattr__(self, "g_total", g)

    @property
    def n_frames(self) -> int:
        return self.configs.shape[0]


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def force_loss(model: RbfNetPotential, prior: PriorTerm, configs,
               target_forces) -> float:
    """Mean per-frame squared force residual over all degrees of freedom."""
    configs = check_matrix(configs, "configs")
    target_forces = check_matrix(target_forces, "target_forces")
    if configs.shape[0] == 0:
        raise ValidationError("empty batch")
    if target_forces.shape != configs.shape:
        raise ValidationError(
            f"target_forces shape {target_forces.shape} != configs shape {configs.shape}"
        )
    resid = model.force_many(configs) + prior.force_many(configs) - target_forces
    return float(np.sum(resid * resid) / configs.shape[0])


def energy_loss(model: RbfNetPotential, prior: PriorTerm, configs,
                g_targets) -> tuple[float, float]:
    """Mean squared energy residual after the optimal constant.

    Residuals are ``U(theta, x) + E_prior(x) - G(x)``; the returned
    ``c_star = -mean(residual)`` is the offset that minimizes the loss.
    """
    configs = check_matrix(configs, "configs")
    if configs.shape[0] == 0:
        raise ValidationError("empty batch")
    g_targets = check_vector(g_targets, "g_targets", length=configs.shape[0])
    resid = model.energy_many(configs) + prior.energy_many(configs) - g_targets
    c_star = -float(resid.mean())
    centered = resid + c_star
    return float(np.mean(centered * centered)), c_star


def total_loss(model: RbfNetPotential, prior: PriorTerm, data: TrainingSet,
               cfg: LossConfig) -> float:
    """Weighted loss; reduces bit-exactly to one term when a weight is 0."""
    if cfg.lambda_energy == 0.0:
        return force_loss(model, prior, data.configs, data.forces)
    if cfg.lambda_force == 0.0:
        return energy_loss(model, prior, data.configs, data.g_total)[0]
    lf = force_loss(model, prior, data.configs, data.forces)
    le, _ = energy_loss(model, prior, data.configs, data.g_total)
    return cfg.lambda_force * lf + cfg.lambda_energy * le


# ---------------------------------------------------------------------------
# analytic loss gradient
# ---------------------------------------------------------------------------

def _force_loss_gradient(model: RbfNetPotential, prior: PriorTerm,
                         configs: np.ndarray, target_forces: np.ndarray
                         ) -> tuple[float, np.ndarray]:
    n = configs.shape[0]
    H, m = model.n_hidden, model.n_basis
    phi = model._features(configs)
    h = np.tanh(phi @ model.hidden_weights.T + model.hidden_bias)
    sech2 = 1.0 - h * h
    s = sech2 * model.output_weights
    t = s @ model.hidden_weights
    diff = configs[:, None, :] - model.centers[None, :, :]
    q = -(phi[:, :, None] * diff) / (model.widths ** 2)[None, :, None]  # (N, m, d)
    f_model = -np.einsum("nm,nmd->nd", t, q)
    resid = f_model + prior.force_many(configs) - target_forces
    loss = float(np.sum(resid * resid) / n)

    scale = 2.0 / n
    M = np.einsum("am,nmd->nad", model.hidden_weights, q)      # (N, H, d)
    g1 = np.einsum("nd,nad->na", resid, M)                     # (N, H)
    r = -2.0 * h * sech2 * model.output_weights
    qr = np.einsum("nbd,nd->nb", q, resid)                     # (N, m)
    grad_w1 = -scale * (np.einsum("na,nb->ab", s, qr)
                        + np.einsum("na,nb->ab", r * g1, phi))
    grad_b1 = -scale * np.sum(r * g1, axis=0)
    grad_w2 = -scale * np.sum(sech2 * g1, axis=0)
    grad = np.concatenate([grad_w1.ravel(), grad_b1, grad_w2, [0.0]])
    return loss, grad


def _energy_loss_gradient(model: RbfNetPotential, prior: PriorTerm,
                          configs: np.ndarray, g_targets: np.ndarray
                          ) -> tuple[float, float, np.ndarray]:
    n = configs.shape[0]
    u, du = model.energy_param_grads_many(configs)
    resid = u + prior.energy_many(configs) - g_targets
    c_star = -float(resid.mean())
    centered = resid + c_star
    loss = float(np.mean(centered * centered))
    grad = (2.0 / n) * (centered @ du)
    return loss, c_star, grad


def loss_gradient(model: RbfNetPotential, prior: PriorTerm, data: TrainingSet,
                  cfg: LossConfig) -> tuple[float, np.ndarray]:
    """Total loss and its exact gradient with respect to ``theta``."""
    if cfg.lambda_energy == 0.0:
        return _force_loss_gradient(model, prior, data.configs, data.forces)
    if cfg.lambda_force == 0.0:
        le, _, ge = _energy_loss_gradient(model, prior, data.configs, data.g_total)
        return le, ge
    lf, gf = _force_loss_gradient(model, prior, data.configs, data.forces)
    le, _, ge = _energy_loss_gradient(model, prior, data.configs, data.g_total)
    return (cfg.lambda_force * lf + cfg.lambda_energy * le,
            cfg.lambda_force * gf + cfg.lambda_energy * ge)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainReport:
    """Per-epoch loss curves plus the final parameter vector."""

    total: list[float] = field(default_factory=list)
    force: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    constant_c: list[float] = field(default_factory=list)
    final_theta: np.ndarray | None = None
    converged: bool = False

    @property
    def n_epochs(self) -> int:
        return len(self.total)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "total", "force", "energy", "constant_c"])
            for i in range(self.n_epochs):
                writer.writerow([i, repr(self.total[i]), repr(self.force[i]),
                                 repr(self.energy[i]), repr(self.constant_c[i])])

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "force": self.force,
            "energy": self.energy,
            "constant_c": self.constant_c,
            "converged": self.converged,
            "n_epochs": self.n_epochs,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _epoch_metrics(model: RbfNetPotential, prior: PriorTerm, data: TrainingSet,
                   cfg: LossConfig) -> tuple[float, float, float, float]:
    lf = (force_loss(model, prior, data.configs, data.forces)
          if data.forces is not None else 0.0)
    if data.g_total is not None:
        le, c = energy_loss(model, prior, data.configs, data.g_total)
    else:
        le, c = 0.0, 0.0
    if cfg.lambda_energy == 0.0:
        total = lf
    elif cfg.lambda_force == 0.0:
        total = le
    else:
        total = cfg.lambda_force * lf + cfg.lambda_energy * le
    return total, lf, le, c


def train(data: TrainingSet, cfg: LossConfig,
          model: RbfNetPotential | None = None,
          prior: PriorTerm = NULL_PRIOR,
          n_basis: int = 24, n_hidden: int = 32,
          rel_tol: float = 1e-8, patience: int = 10
          ) -> tuple[RbfNetPotential, TrainReport]:
    """Minimize the combined loss by seeded mini-batch Adam.

    Stops early once the best total loss fails to improve by ``rel_tol``
    relative over ``patience`` consecutive epochs. Raises
    :class:`TrainingDivergedError` (carrying the last finite parameters)
    if the loss leaves the finite range.
    """
    if cfg.lambda_force > 0.0 and data.forces is None:
        raise ValidationError("lambda_force > 0 requires target forces")
    if cfg.lambda_energy > 0.0 and data.g_total is None:
        raise ValidationError("lambda_energy > 0 requires free-energy targets")
    if model is None:
        model = RbfNetPotential.initialize(data.configs, n_basis=n_basis,
                                           n_hidden=n_hidden, seed=cfg.seed)

    theta = model.get_theta()
    adam_m = np.zeros_like(theta)
    adam_v = np.zeros_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    rng = np.random.default_rng(cfg.seed)
    n = data.n_frames
    report = TrainReport()
    best = np.inf
    stall = 0
    last_finite_theta = theta.copy()

    for epoch in range(cfg.max_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            batch = TrainingSet(
                configs=data.configs[idx],
                forces=None if data.forces is None else data.forces[idx],
                g_total=None if data.g_total is None else data.g_total[idx],
            )
            _, grad = loss_gradient(model.with_theta(theta), prior, batch, cfg)
            step += 1
            adam_m = beta1 * adam_m + (1.0 - beta1) * grad
            adam_v = beta2 * adam_v + (1.0 - beta2) * grad * grad
            m_hat = adam_m / (1.0 - beta1 ** step)
            v_hat = adam_v / (1.0 - beta2 ** step)
            theta = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

        current = model.with_theta(theta)
        total, lf, le, c = _epoch_metrics(current, prior, data, cfg)
        if not np.isfinite(total):
            raise TrainingDivergedError(epoch, last_finite_theta)
        last_finite_theta = theta.copy()
        report.total.append(total)
        report.force.append(lf)
        report.energy.append(le)
        report.constant_c.append(c)

        if best - total > rel_tol * max(abs(best), 1e-300):
            best = min(best, total)
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                report.converged = True
                break
        best = min(best, total)

    final = model.with_theta(theta)
    report.final_theta = theta.copy()
    return final, report


class PotentialTrainer(BaseEstimator):
    """Estimator-style wrapper around :func:`train`.

    Parameters mirror :class:`LossConfig` plus the network architecture;
    after :meth:`fit` the learned potential is ``model_`` and the loss
    curves are ``report_``.
    """

    def __init__(self, lambda_force: float = 1.0, lambda_energy: float = 0.0,
                 batch_size: int = 256, max_epochs: int = 500,
                 learning_rate: float = 1e-3, seed: int = 0,
                 n_basis: int = 24, n_hidden: int = 32):
        self.lambda_force = lambda_force
        self.lambda_energy = lambda_energy
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.learning_rate = learning_rate
        self.seed = seed
        self.n_basis = n_basis
        self.n_hidden = n_hidden

    def _config(self) -> LossConfig:
        return LossConfig(lambda_force=self.lambda_force,
                          lambda_energy=self.lambda_energy,
                          batch_size=self.batch_size,
                          max_epochs=self.max_epochs,
                          learning_rate=self.learning_rate,
                          seed=self.seed)

    def fit(self, X, forces=None, g_total=None, prior: PriorTerm = NULL_PRIOR):
        data = TrainingSet(configs=X, forces=forces, g_total=g_total)
        self.model_, self.report_ = train(data, self._config(), prior=prior,
                                          n_basis=self.n_basis,
                                          n_hidden=self.n_hidden)
        self.prior_ = prior
        return self

    def predict(self, X) -> np.ndarray:
        """Total energies ``U + E_prior`` for configurations ``X``."""
        return self.model_.energy_many(X) + self.prior_.energy_many(X)
