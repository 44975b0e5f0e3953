"""Poisson-Charlier graph convolution (PC-Conv) and the PCNet node classifier."""
__version__ = "0.1.0"

from .errors import (ConvergenceError, DataFormatError, DomainError, InvalidArgumentError,
                     PreconditionError, SingularMatrixError)
from .linalg import SparseMatrix, dense_solve, spmm, spmv, sym_eig
from .graph import Graph, NormalizationConfig, edge_homophily, pc_laplacian, psd_feasible_p, standard_laplacian
from .pcpoly import build_table, closed_form_G, pc_coeff_explicit, pc_coeff_recurrence, series_eval_G
from .filters import FilterParams, apply_conv, fold_coefficients, scalar_response, twofold_closed_form
from .fit import fit_least_squares, interpolate_polynomial, target_zoo
from .data import Dataset, Split, load_dataset, make_split, save_dataset, sbm_generate
from .model import ModelConfig, PCNetModel, TrainConfig, evaluate, init_model, load_model, save_model, train
