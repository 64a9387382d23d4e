"""femkit: free-energy matching for coarse-grained potentials.

Extract slow collective coordinates with TICA, turn sampled densities
into free-energy targets by Boltzmann inversion, train a small potential
with a mixed force/energy loss, sample it with overdamped Langevin
dynamics, and score the equilibrium agreement with a KL divergence on the
leading slow components.
"""

__version__ = "0.1.0"

from .constants import DEFAULT_TEMPERATURE, KB_KCAL_PER_MOL_K, kbt
from .evaluation import (KlReport, check_explained_variance, kl_divergence_2d,
                         landscape_compare)
from .exceptions import (ConvergenceError, FemkitError, FormatError,
                         NumericalError, SimulationDivergedError,
                         SingularMatrixError, TrainingDivergedError,
                         ValidationError)
from .freeenergy import (FreeEnergyTargets, LandscapeGrid, MarginalDensity,
                         boltzmann_invert, energy_correction, fit_marginals,
                         load_grid_csv, load_targets, mean_energy_grid,
                         save_grid_csv, save_targets)
from .msm import (MarkovStateModel, TransitionEstimate, assign, cluster,
                  count_transitions, estimate_transition_matrix,
                  msm_free_energies, stationary_distribution)
from .potential import (NULL_PRIOR, PriorTerm, RbfNetPotential,
                        ReferenceLandscape, energy, force,
                        least_squares_output_fit, reference_energy_force,
                        total_energy_many, total_force_many)
from .sampler import (CompositeSystem, LangevinConfig, SimulationResult,
                      simulate)
from .tica import (TICA, CovariancePair, estimate_covariances, fit_tica,
                   project)
from .trajectory import (EnergyRecord, FeatureTrajectory, ForceRecord,
                         load_energy_record, load_force_record,
                         load_trajectory, pairwise_distance_features,
                         save_energy_record, save_force_record,
                         save_trajectory)
from .training import (LAMBDA_ENERGY_SWEEP, LossConfig, PotentialTrainer,
                       TrainingSet, TrainReport, energy_loss, force_loss,
                       loss_gradient, total_loss, train)

__all__ = [
    "DEFAULT_TEMPERATURE", "KB_KCAL_PER_MOL_K", "kbt",
    "KlReport", "check_explained_variance", "kl_divergence_2d",
    "landscape_compare",
    "ConvergenceError", "FemkitError", "FormatError", "NumericalError",
    "SimulationDivergedError", "SingularMatrixError", "TrainingDivergedError",
    "ValidationError",
    "FreeEnergyTargets", "LandscapeGrid", "MarginalDensity",
    "boltzmann_invert", "energy_correction", "fit_marginals",
    "load_grid_csv", "load_targets", "mean_energy_grid", "save_grid_csv",
    "save_targets",
    "MarkovStateModel", "TransitionEstimate", "assign", "cluster",
    "count_transitions", "estimate_transition_matrix", "msm_free_energies",
    "stationary_distribution",
    "NULL_PRIOR", "PriorTerm", "RbfNetPotential", "ReferenceLandscape",
    "energy", "force", "least_squares_output_fit", "reference_energy_force",
    "total_energy_many", "total_force_many",
    "CompositeSystem", "LangevinConfig", "SimulationResult", "simulate",
    "TICA", "CovariancePair", "estimate_covariances", "fit_tica", "project",
    "EnergyRecord", "FeatureTrajectory", "ForceRecord",
    "load_energy_record", "load_force_record", "load_trajectory",
    "pairwise_distance_features", "save_energy_record", "save_force_record",
    "save_trajectory",
    "LAMBDA_ENERGY_SWEEP", "LossConfig", "PotentialTrainer", "TrainingSet",
    "TrainReport", "energy_loss", "force_loss", "loss_gradient",
    "total_loss", "train",
]
