"""Closed-form fluctuation formulas for circular, bulk and planar ensembles."""
from ._prediction import Divergence, DivergenceError, Prediction, REGIMES
from .circular import (B_CLOSED_FORMS, ENSEMBLES, FourierWeights, arc_pair_limit, b_beta_series,
                       circular_covariance, coe_weight, counting_covariance_cue,
                       counting_covariance_series, cse_weight, cue_alpha_finite_weight,
                       fourier_weight, loggas_covariance, loggas_response,
                       number_variance_asymptote, orthogonal_covariance,
                       orthogonal_finite_covariance)
from .planar import (disk_overlap, ellipse_boundary, ginue_disk_counting, ginue_disk_variance_bulk,
                     ginue_global_covariance, linear_elliptic_variance, radial_variance_ginue)
from .structure import (GINOE_S0, MODELS, StructureFunctionModel, b_beta_from_structure,
                        bulk_covariance, cgp_constants, cgp_pair_function,
                        dbm_equal_point_covariance, gaudin_structure, structure_at_zero,
                        structure_function)

__all__ = [n for n in dir() if not n.startswith("_")]
