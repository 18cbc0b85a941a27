"""fbsphere: closed-form spherical-harmonic expansions of Fisher-Bingham
(Kent) distributions and 3D spatial fading correlation for antenna arrays."""

from .errors import ConstraintError, DomainError, FbsphereError, InputError
from .fb5 import (
    FB5Params,
    MixtureModel,
    TruncationPolicy,
    euler_from_rotation,
    fb5_coeffs,
    fb5_pdf,
    frame_to_rotation,
    mixture_coeffs,
    mixture_from_json,
    normalization_scaled,
    standard_fb_coeffs,
    standard_fb_pdf,
    truncation_n,
    truncation_t,
)
from .oracle import QuadratureRule, numeric_sht, quadrature_nodes, sfc_numeric, spatial_error
from .sfc import (
    ArrayGeometry,
    SfcCurve,
    SfcRequest,
    ell_truncation,
    nearest_neighbor_pair,
    rda_positions,
    sfc_closed_form,
    sfc_curve,
    steering_phase,
    uca_positions,
)
from .sht import (
    CoeffTable,
    Direction,
    EulerAngles,
    RotationMatrix,
    WignerPi2Table,
    assoc_legendre,
    read_coeffs_csv,
    rotate_coeffs,
    rotation_matrix,
    synthesize,
    wigner_d,
    wigner_pi2_table,
    write_coeffs_csv,
    ylm,
)
from .specfun import (
    ScaledBesselSeq,
    g_integral,
    log_gamma,
    scaled_bessel_i_half,
    spherical_bessel_j,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "CoeffTable", "ConstraintError", "Direction", "DomainError",
    "EulerAngles", "FB5Params", "FbsphereError", "InputError", "MixtureModel",
    "QuadratureRule", "RotationMatrix", "ScaledBesselSeq", "SfcCurve", "SfcRequest",
    "TruncationPolicy", "WignerPi2Table", "assoc_legendre", "ell_truncation",
    "euler_from_rotation", "fb5_coeffs", "fb5_pdf", "frame_to_rotation", "g_integral",
    "log_gamma", "mixture_coeffs", "mixture_from_json", "nearest_neighbor_pair",
    "normalization_scaled", "numeric_sht", "quadrature_nodes", "rda_positions",
    "read_coeffs_csv", "rotate_coeffs", "rotation_matrix", "scaled_bessel_i_half",
    "sfc_closed_form", "sfc_curve", "sfc_numeric", "spatial_error",
    "spherical_bessel_j", "standard_fb_coeffs", "standard_fb_pdf", "steering_phase",
    "synthesize", "truncation_n", "truncation_t", "uca_positions", "wigner_d",
    "wigner_pi2_table", "write_coeffs_csv", "ylm",
]
