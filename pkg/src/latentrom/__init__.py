"""latentrom: adaptive-greedy latent-space dynamics surrogates.

A numpy/scipy library that trains an MLP autoencoder jointly with per-sample
latent ODE models over a discrete parameter space, selects training
parameters adaptively with a residual-based error indicator, and evaluates
the resulting reduced-order model against a built-in 2D Burgers solver.
"""

from .burgers import (FomConfig, Trajectory, initial_state, load_trajectory,
                      residual, rhs, save_trajectory, simulate, step)
from .checkpoint import load_checkpoint, save_checkpoint
from .dynamics import (BasisSpec, DiModel, basis, integrate_latent,
                       interpolate_coeffs, knn_neighbors, latent_rhs,
                       shepard_weights)
from .errors import (ConfigError, DivergenceError, ExhaustedSpaceError,
                     NonConvergenceError)
from .greedy import (GreedyConfig, GreedyState, error_indicator,
                     estimate_max_error, fit_error_model, greedy_train,
                     select_sample)
from .mlp import (MlpParams, decode, decoder_jvp, encode, encoder_jvp,
                  init_mlp)
from .params import (DiscreteParamSpace, build_grid, corner_points,
                     mahalanobis_distance)
from .rom import (HeatmapTable, evaluate_grid, max_relative_error,
                  measure_speedup, predict, residual_indicator)
from .training import (AdamState, DbEntry, LossWeights, TrainConfig,
                       TrainingDatabase, adam_step, fit_di_least_squares,
                       gradients, total_loss, train_epochs,
                       train_lasdi_baseline)

__version__ = "0.1.0"
