"""Differentiable parametric potentials, priors, and reference landscapes.

The learnable potential is a radial-basis feature layer followed by one
tanh hidden layer and a linear readout:

    U(theta, x) = w2 . tanh(W1 phi(x) + b1) + b2,
    phi_j(x) = exp(-||x - c_j||^2 / (2 w_j^2)).

Centers and widths are data-dependent constants fixed at initialization;
theta concatenates (W1, b1, w2, b2) so energies, forces, and all parameter
gradients have closed forms and need no autodiff.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kmeans
from ._validation import check_matrix, check_vector, readonly
from .exceptions import ValidationError


class RbfNetPotential:
    """RBF-feature tanh network with closed-form forces and gradients.

    Parameter vector layout: ``hidden_weights`` (row-major), then
    ``hidden_bias``, ``output_weights``, ``output_bias``.
    """

    def __init__(self, centers, widths, hidden_weights, hidden_bias,
                 output_weights, output_bias: float, seed: int = 0):
        self.centers = readonly(check_matrix(centers, "centers"))
        self.widths = readonly(check_vector(widths, "widths",
                                            length=self.centers.shape[0]))
        if np.any(self.widths <= 0):
            raise ValidationError("widths must be positive")
        self.hidden_weights = readonly(check_matrix(hidden_weights, "hidden_weights"))
        self.hidden_bias = readonly(check_vector(hidden_bias, "hidden_bias",
                                                 length=self.hidden_weights.shape[0]))
        self.output_weights = readonly(check_vector(output_weights, "output_weights",
                                                    length=self.hidden_weights.shape[0]))
        self.output_bias = float(output_bias)
        self.seed = int(seed)
        if self.hidden_weights.shape[1] != self.n_basis:
            raise ValidationError(
                f"hidden_weights has {self.hidden_weights.shape[1]} columns "
                f"for {self.n_basis} basis functions"
            )

    # -- construction --------------------------------------------------------

    @classmethod
    def initialize(cls, configs, n_basis: int = 24, n_hidden: int = 32,
                   seed: int = 0, width_scale: float = 2.0,
                   max_center_samples: int = 20000) -> "RbfNetPotential":
        """Data-dependent initialization.

        Centers come from k-means (k-means++ seeding, Lloyd refinement) on
        at most ``max_center_samples`` configurations; widths are the
        median nearest-center distance times ``width_scale``; weights are
        uniform(-0.1, 0.1) from the fixed seed.
        """
        configs = check_matrix(configs, "configs")
        rng = np.random.default_rng(seed)
        if configs.shape[0] > max_center_samples:
            idx = rng.choice(configs.shape[0], size=max_center_samples, replace=False)
            sample = configs[np.sort(idx)]
        else:
            sample = configs
        centers, _ = _kmeans.kmeans(sample, n_basis, seed=seed)
        d2 = _kmeans._squared_distances(centers, centers)
        np.fill_diagonal(d2, np.inf)
        nearest = np.sqrt(d2.min(axis=1))
        width = float(np.median(nearest)) * width_scale
        if width <= 0:
            width = max(float(sample.std()), 1e-3)
        widths = np.full(n_basis, width)
        hidden_weights = rng.uniform(-0.1, 0.1, size=(n_hidden, n_basis))
        hidden_bias = rng.uniform(-0.1, 0.1, size=n_hidden)
        output_weights = rng.uniform(-0.1, 0.1, size=n_hidden)
        output_bias = float(rng.uniform(-0.1, 0.1))
        return cls(centers, widths, hidden_weights, hidden_bias,
                   output_weights, output_bias, seed=seed)

    # -- basic shape info ----------------------------------------------------

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_basis(self) -> int:
        return self.centers.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.hidden_weights.shape[0]

    @property
    def n_params(self) -> int:
        return self.n_hidden * self.n_basis + 2 * self.n_hidden + 1

    # -- parameter vector ----------------------------------------------------

    def get_theta(self) -> np.ndarray:
        return np.concatenate([
            self.hidden_weights.ravel(),
            self.hidden_bias,
            self.output_weights,
            [self.output_bias],
        ])

    def with_theta(self, theta) -> "RbfNetPotential":
        theta = check_vector(theta, "theta", length=self.n_params)
        H, m = self.n_hidden, self.n_basis
        w1 = theta[:H * m].reshape(H, m).copy()
        b1 = theta[H * m:H * m + H].copy()
        w2 = theta[H * m + H:H * m + 2 * H].copy()
        b2 = float(theta[-1])
        return RbfNetPotential(self.centers, self.widths, w1, b1, w2, b2,
                               seed=self.seed)

    # -- evaluation ----------------------------------------------------------

    def _check_input(self, X) -> np.ndarray:
        X = check_matrix(X, "x")
        if X.shape[1] != self.input_dim:
            raise ValidationError(
                f"expected {self.input_dim}-dimensional input, got {X.shape[1]}"
            )
        return X

    def _features(self, X: np.ndarray) -> np.ndarray:
        diff = X[:, None, :] - self.centers[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        return np.exp(-d2 / (2.0 * self.widths ** 2))

    def energy_many(self, X) -> np.ndarray:
        X = self._check_input(X)
        phi = self._features(X)
        h = np.tanh(phi @ self.hidden_weights.T + self.hidden_bias)
        return h @ self.output_weights + self.output_bias

    def force_many(self, X) -> np.ndarray:
        X = self._check_input(X)
        phi = self._features(X)
        h = np.tanh(phi @ self.hidden_weights.T + self.hidden_bias)
        s = (1.0 - h * h) * self.output_weights         # (N, H)
        t = s @ self.hidden_weights                     # (N, m)
        diff = X[:, None, :] - self.centers[None, :, :]
        coef = t * phi / self.widths ** 2               # (N, m)
        # grad U = -sum_j t_j phi_j (x - c_j)/w_j^2, hence F = +sum_j (...)
        return np.einsum("nm,nmd->nd", coef, diff)

    def energy(self, x) -> float:
        return float(self.energy_many(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def force(self, x) -> np.ndarray:
        return self.force_many(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]

    # -- gradients with respect to theta --------------------------------------

    def parameter_gradients(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Exact ``(dU/dtheta, dF/dtheta)`` at a single configuration.

        ``dU/dtheta`` has shape ``(n_params,)``; ``dF/dtheta`` has shape
        ``(input_dim, n_params)`` with rows ordered like the force vector.
        """
        X = np.atleast_2d(np.asarray(x, dtype=np.float64))
        X = self._check_input(X)
        H, m, d = self.n_hidden, self.n_basis, self.input_dim
        phi = self._features(X)                           # (1, m)
        z = phi @ self.hidden_weights.T + self.hidden_bias
        h = np.tanh(z)                                    # (1, H)
        sech2 = 1.0 - h * h
        s = sech2 * self.output_weights                   # (1, H)
        diff = X[:, None, :] - self.centers[None, :, :]   # (1, m, d)
        q = -(phi[:, :, None] * diff) / (self.widths ** 2)[None, :, None]  # dphi/dx

        du = np.concatenate([
            (s[:, :, None] * phi[:, None, :]).ravel(),    # dU/dW1 = s_a phi_b
            s.ravel(),                                    # dU/db1
            h.ravel(),                                    # dU/dw2
            [1.0],                                        # dU/db2
        ])

        # F_d = -sum_j t_j q_{jd}; t = W1^T s
        M = np.einsum("am,nmd->nad", self.hidden_weights, q)[0]   # (H, d)
        r = (-2.0 * h * sech2 * self.output_weights)[0]           # ds_a/dz_a
        s0, phi0, q0 = s[0], phi[0], q[0]

        dF = np.zeros((d, self.n_params))
        # dF/dW1[a,b] = -(s_a q_{bd} + r_a phi_b M_{ad})
        term1 = s0[:, None, None] * q0[None, :, :]
        term2 = r[:, None, None] * phi0[None, :, None] * M[:, None, :]
        dW1 = -(term1 + term2)                                    # (H, m, d)
        dF[:, :H * m] = dW1.transpose(2, 0, 1).reshape(d, H * m)
        dF[:, H * m:H * m + H] = -(r[None, :] * M.T)              # dF/db1
        dF[:, H * m + H:H * m + 2 * H] = -(sech2[0][None, :] * M.T)  # dF/dw2
        # dF/db2 stays zero
        return du, dF

    def energy_param_grads_many(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Energies and ``dU/dtheta`` rows for a batch; shape (N, n_params)."""
        X = self._check_input(X)
        phi = self._features(X)
        h = np.tanh(phi @ self.hidden_weights.T + self.hidden_bias)
        s = (1.0 - h * h) * self.output_weights
        u = h @ self.output_weights + self.output_bias
        n = X.shape[0]
        grads = np.concatenate([
            (s[:, :, None] * phi[:, None, :]).reshape(n, -1),
            s,
            h,
            np.ones((n, 1)),
        ], axis=1)
        return u, grads

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": "rbf_net_potential",
            "input_dim": self.input_dim,
            "n_basis": self.n_basis,
            "n_hidden": self.n_hidden,
            "seed": self.seed,
            "centers": self.centers.tolist(),
            "widths": self.widths.tolist(),
            "hidden_weights": self.hidden_weights.tolist(),
            "hidden_bias": self.hidden_bias.tolist(),
            "output_weights": self.output_weights.tolist(),
            "output_bias": self.output_bias,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RbfNetPotential":
        return cls(
            centers=np.array(doc["centers"]),
            widths=np.array(doc["widths"]),
            hidden_weights=np.array(doc["hidden_weights"]),
            hidden_bias=np.array(doc["hidden_bias"]),
            output_weights=np.array(doc["output_weights"]),
            output_bias=doc["output_bias"],
            seed=doc.get("seed", 0),
        )

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "RbfNetPotential":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def least_squares_output_fit(model: RbfNetPotential, X, targets) -> RbfNetPotential:
    """Refit only the output layer of ``model`` to ``targets`` by least squares."""
    X = model._check_input(check_matrix(X, "X"))
    targets = check_vector(targets, "targets", length=X.shape[0])
    phi = model._features(X)
    h = np.tanh(phi @ model.hidden_weights.T + model.hidden_bias)
    design = np.column_stack([h, np.ones(X.shape[0])])
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return RbfNetPotential(model.centers, model.widths, model.hidden_weights,
                           model.hidden_bias, coef[:-1], float(coef[-1]),
                           seed=model.seed)


# ---------------------------------------------------------------------------
# prior terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PriorTerm:
    """Fixed baseline energy: ``none`` or a harmonic restraint.

    Harmonic energy is ``0.5 * stiffness * ||x - center||^2``.
    """

    kind: str = "none"
    center: np.ndarray | None = None
    stiffness: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "harmonic"):
            raise ValidationError(f"unknown prior kind {self.kind!r}")
        if self.stiffness < 0:
            raise ValidationError(f"stiffness must be >= 0, got {self.stiffness}")
        if self.kind == "harmonic":
            if self.center is None:
                raise ValidationError("harmonic prior needs a center")
            object.__setattr__(self, "center",
                               readonly(check_vector(self.center, "center")))

    def energy_many(self, X) -> np.ndarray:
        X = check_matrix(X, "x")
        if self.kind == "none":
            return np.zeros(X.shape[0])
        diff = X - self.center
        return 0.5 * self.stiffness * np.sum(diff * diff, axis=1)

    def force_many(self, X) -> np.ndarray:
        X = check_matrix(X, "x")
        if self.kind == "none":
            return np.zeros_like(X)
        return -self.stiffness * (X - self.center)

    def energy(self, x) -> float:
        return float(self.energy_many(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def force(self, x) -> np.ndarray:
        return self.force_many(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": None if self.center is None else self.center.tolist(),
            "stiffness": self.stiffness,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PriorTerm":
        center = doc.get("center")
        return cls(kind=doc["kind"],
                   center=None if center is None else np.array(center),
                   stiffness=float(doc.get("stiffness", 0.0)))


NULL_PRIOR = PriorTerm(kind="none")


def total_energy_many(model: RbfNetPotential, prior: PriorTerm, X) -> np.ndarray:
    """``U(theta, x) + E_prior(x)`` for a batch."""
    return model.energy_many(X) + prior.energy_many(X)


def total_force_many(model: RbfNetPotential, prior: PriorTerm, X) -> np.ndarray:
    return model.force_many(X) + prior.force_many(X)


def energy(model: RbfNetPotential, prior: PriorTerm, x) -> float:
    """Single-configuration total energy in kcal/mol."""
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return float(total_energy_many(model, prior, X)[0])


def force(model: RbfNetPotential, prior: PriorTerm, x) -> np.ndarray:
    """Single-configuration total force ``-grad(U + E_prior)``."""
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return total_force_many(model, prior, X)[0]


# ---------------------------------------------------------------------------
# analytic reference landscapes (desk-scale ground truth)
# ---------------------------------------------------------------------------

# canonical Mueller-Brown constants
_MB_A = np.array([-200.0, -100.0, -170.0, 15.0])
_MB_a = np.array([-1.0, -1.0, -6.5, 0.7])
_MB_b = np.array([0.0, 0.0, 11.0, 0.6])
_MB_c = np.array([-10.0, -10.0, -6.5, 0.7])
_MB_x0 = np.array([1.0, 0.0, -0.5, -1.0])
_MB_y0 = np.array([0.0, 0.5, 1.5, 1.0])

LANDSCAPE_KINDS = ("double_well_1d", "double_well_2d", "mueller_brown")


@dataclass(frozen=True)
class ReferenceLandscape:
    """Closed-form toy energy surfaces with exact gradients.

    * ``double_well_1d``: ``a (y^2 - 1)^2 + tilt * y``
    * ``double_well_2d``: ``a (y1^2 - 1)^2 + 0.5 b y2^2``
    * ``mueller_brown``: the standard four-Gaussian surface times ``scale``
    """

    kind: str
    parameters: dict

    def __post_init__(self):
        if self.kind not in LANDSCAPE_KINDS:
            raise ValidationError(
                f"unknown landscape kind {self.kind!r}; expected one of {LANDSCAPE_KINDS}"
            )

    @classmethod
    def double_well_1d(cls, a: float = 4.0, tilt: float = 0.0) -> "ReferenceLandscape":
        return cls("double_well_1d", {"a": float(a), "tilt": float(tilt)})

    @classmethod
    def double_well_2d(cls, a: float = 4.0, b: float = 2.0) -> "ReferenceLandscape":
        return cls("double_well_2d", {"a": float(a), "b": float(b)})

    @classmethod
    def mueller_brown(cls, scale: float = 0.1) -> "ReferenceLandscape":
        return cls("mueller_brown", {"scale": float(scale)})

    @classmethod
    def by_name(cls, name: str, **params) -> "ReferenceLandscape":
        factories = {
            "double_well_1d": cls.double_well_1d,
            "double_well_2d": cls.double_well_2d,
            "mueller_brown": cls.mueller_brown,
        }
        if name not in factories:
            raise ValidationError(f"unknown landscape kind {name!r}")
        return factories[name](**params)

    @property
    def input_dim(self) -> int:
        return 1 if self.kind == "double_well_1d" else 2

    def energy_many(self, X) -> np.ndarray:
        X = check_matrix(X, "x")
        if X.shape[1] != self.input_dim:
            raise ValidationError(
                f"{self.kind} expects {self.input_dim}-dimensional input, "
                f"got {X.shape[1]}"
            )
        p = self.parameters
        if self.kind == "double_well_1d":
            y = X[:, 0]
            return p["a"] * (y * y - 1.0) ** 2 + p["tilt"] * y
        if self.kind == "double_well_2d":
            y1, y2 = X[:, 0], X[:, 1]
            return p["a"] * (y1 * y1 - 1.0) ** 2 + 0.5 * p["b"] * y2 * y2
        dx = X[:, 0][:, None] - _MB_x0[None, :]
        dy = X[:, 1][:, None] - _MB_y0[None, :]
        terms = _MB_A * np.exp(_MB_a * dx * dx + _MB_b * dx * dy + _MB_c * dy * dy)
        return p["scale"] * terms.sum(axis=1)

    def force_many(self, X) -> np.ndarray:
        X = check_matrix(X, "x")
        p = self.parameters
        if self.kind == "double_well_1d":
            y = X[:, 0]
            grad = 4.0 * p["a"] * y * (y * y - 1.0) + p["tilt"]
            return -grad[:, None]
        if self.kind == "double_well_2d":
            y1, y2 = X[:, 0], X[:, 1]
            return -np.column_stack([
                4.0 * p["a"] * y1 * (y1 * y1 - 1.0),
                p["b"] * y2,
            ])
        dx = X[:, 0][:, None] - _MB_x0[None, :]
        dy = X[:, 1][:, None] - _MB_y0[None, :]
        e = _MB_A * np.exp(_MB_a * dx * dx + _MB_b * dx * dy + _MB_c * dy * dy)
        gx = (e * (2.0 * _MB_a * dx + _MB_b * dy)).sum(axis=1)
        gy = (e * (_MB_b * dx + 2.0 * _MB_c * dy)).sum(axis=1)
        return -p["scale"] * np.column_stack([gx, gy])

    def energy(self, x) -> float:
        return float(self.energy_many(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def force(self, x) -> np.ndarray:
        return self.force_many(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]

    def default_starts(self, n_chains: int) -> np.ndarray:
        """Diverse initial positions: alternating basin minima (or the
        Mueller-Brown minima) repeated to ``n_chains``."""
        if self.kind == "double_well_1d":
            anchors = np.array([[-1.0], [1.0]])
        elif self.kind == "double_well_2d":
            anchors = np.array([[-1.0, 0.0], [1.0, 0.0]])
        else:
            anchors = np.array([[-0.558, 1.442], [0.623, 0.028]])
        reps = int(np.ceil(n_chains / anchors.shape[0]))
        return np.tile(anchors, (reps, 1))[:n_chains]


def reference_energy_force(landscape: ReferenceLandscape, x) -> tuple[float, np.ndarray]:
    """Closed-form ``(energy, force)`` of a reference landscape at ``x``."""
    return landscape.energy(x), landscape.force(x)
