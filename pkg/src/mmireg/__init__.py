"""Sparse monotone multi-index regression.

Subspace recovery from a truncated second-order Stein matrix and a Fantope
program, followed by a near-net search with exact sparse isotonic (or
monotone Lipschitz) fitting.
"""

from .errors import MmiError
from .fantope import SdpConfig, estimate_Q, fantope_project, solve_sdp
from .isotonic import PartialOrder, induced_order, isotonic_fit, sparse_isotonic, step_interpolant
from .linalg import SpectralDecomposition, sym_eigen
from .lipschitz import interpolable, lipschitz_interpolant, lipschitz_sparse_fit, project_polytope
from .model import (Dataset, GroundTruth, ModelConstants, PolyDensity, TransferSpec,
                    make_ground_truth, sample_dataset)
from .net import NearNet, build_net, cap_fraction, coverage_bound
from .pipeline import FitResult, NetConfig, fit_mmi, l2_loss_mc, procrustes_dist, theory_params
from .stein import sigma_tilde, stein_matrix

__version__ = "0.1.0"
