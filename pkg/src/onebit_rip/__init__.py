"""1-bit Gaussian sign embeddings of sparse unit vectors.

Signals on the sparse unit sphere are mapped to packed Hamming-cube codes by
taking signs of Gaussian linear measurements, optionally with additive white
noise before quantization.  The package provides the embedding maps, the
sphere metrics they preserve (geodesic, and a noise-distorted variant equal
to the geodesic distance of noise-lifted points one dimension up), a
Monte-Carlo harness measuring how fast Hamming distances converge to those
metrics over sampled sparse pairs, and brute-force VC-dimension machinery
for the hemisphere and wedge set classes behind those convergence rates.
"""

__version__ = "0.1.0"

from ._kernels import backend_name
from .embedding import (
    BitCode,
    NoiseVector,
    SensingMatrix,
    augment_matrix,
    embed,
    embed_batch,
    embed_noisy,
    hamming,
    sign_quantize,
)
from .geometry import (
    NoiseModel,
    UnitVector,
    antipodal_gap,
    disagreement_probability,
    distorted_distance,
    geodesic_distance,
    lift,
    sample_sparse_unit,
)
from .ripcheck import (
    DeviationReport,
    PairSampler,
    deviation,
    geodesic_floor_check,
    required_measurements,
    rip_holds,
    scaling_fit,
    sweep_m,
)
from .stochastics import RngStream, SlopeFit, binomial_ci, fit_loglog_slope, gaussian_vector
from .vctool import (
    Dichotomy,
    EnumerationBudgetError,
    PointSet,
    ShatterResult,
    achievable,
    hemisphere_dichotomies,
    is_shattered,
    lambert_w_minus1,
    packing_estimate,
    sauer_bound,
    vc_lower_bound_search,
    vc_upper_bound,
    wedge_dichotomies,
)

__all__ = [
    "BitCode",
    "DeviationReport",
    "Dichotomy",
    "EnumerationBudgetError",
    "NoiseModel",
    "NoiseVector",
    "PairSampler",
    "PointSet",
    "RngStream",
    "SensingMatrix",
    "ShatterResult",
    "SlopeFit",
    "UnitVector",
    "achievable",
    "antipodal_gap",
    "augment_matrix",
    "backend_name",
    "binomial_ci",
    "deviation",
    "disagreement_probability",
    "distorted_distance",
    "embed",
    "embed_batch",
    "embed_noisy",
    "fit_loglog_slope",
    "gaussian_vector",
    "geodesic_distance",
    "geodesic_floor_check",
    "hamming",
    "hemisphere_dichotomies",
    "is_shattered",
    "lambert_w_minus1",
    "lift",
    "packing_estimate",
    "required_measurements",
    "rip_holds",
    "sample_sparse_unit",
    "sauer_bound",
    "scaling_fit",
    "sign_quantize",
    "sweep_m",
    "vc_lower_bound_search",
    "vc_upper_bound",
    "wedge_dichotomies",
]
