"""Neural solvers for Fisher's reaction-diffusion equation: residual-weighted
physics-informed training, traveling-wave network architectures, and
continuous reaction-rate generalization."""

from .autodiff import Jet, Tape, jet_binary, jet_unary
from .config import ExperimentConfig
from .evaluation import aggregate, l2_error, rho_sweep, wavefront_profile
from .model import FeatureScaler, Network, NetworkConfig, init_params
from .physics import (
    FisherProblem,
    analytical,
    analytical_jet,
    data_loss,
    physics_loss,
    reaction,
    residual,
    total_loss,
    weight,
)
from .sampling import Domain, SampleBatch, lhs, sample_boundary, test_grid
from .training import RunRecord, TrainConfig, adam_step, lr_schedule, train

__version__ = "0.1.0"
