"""Superpixel-constrained sparse subspace clustering for hyperspectral
land-cover segmentation."""

from .baseline import ssc_small_oracle
from .core import (ClusterResult, CoefficientMatrix, GroundTruth, PixelMatrix,
                   SpectralCube, reshape_grid_to_row, reshape_row_to_grid,
                   unvectorize, vectorize)
from .embedding import (DegreeVector, degrees, kmeans, normalize_abs_columns,
                        smooth_coefficients, spectral_embed)
from .errors import InputError, NumericalError, PipelineStageError
from .fileio import load_envi, load_ground_truth, save_cluster_map, write_envi
from .lasso import LassoSolution, code_against_dictionary, lasso, self_rep_cost
from .metrics import EvaluationReport, align_labels, confusion_matrix, evaluate, kappa, nmi
from .pipeline import PRESETS, PipelineParams, sc_ssc
from .preprocess import PcaModel, pca_fit_project, unit_normalize
from .selection import ExemplarDictionary, build_dictionary, medoid, select_exemplars
from .superpixels import SegmentationMap, segment_indices, slic
from .synth import make_subspace_scene, write_scene

__version__ = "0.1.0"

__all__ = [
    "ClusterResult", "CoefficientMatrix", "DegreeVector", "EvaluationReport",
    "ExemplarDictionary", "GroundTruth", "InputError", "LassoSolution",
    "NumericalError", "PcaModel", "PipelineParams", "PipelineStageError",
    "PixelMatrix", "PRESETS", "SegmentationMap", "SpectralCube",
    "align_labels", "build_dictionary", "code_against_dictionary",
    "confusion_matrix", "degrees", "evaluate", "kappa", "kmeans", "lasso",
    "load_envi", "load_ground_truth", "make_subspace_scene", "medoid", "nmi",
    "normalize_abs_columns", "pca_fit_project", "reshape_grid_to_row",
    "reshape_row_to_grid", "save_cluster_map", "sc_ssc", "segment_indices",
    "select_exemplars", "self_rep_cost", "slic", "smooth_coefficients",
    "spectral_embed", "ssc_small_oracle", "unit_normalize", "unvectorize",
    "vectorize", "write_envi", "write_scene",
]
