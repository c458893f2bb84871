"""Python bindings for the hybrid-recon core operators.

The heavy lifting (NUFFT gridding, GROG, subspace compression, Look-Locker
fitting, unrolled training) lives in the C++ core; this package exposes the
main operations over numpy arrays for scripting and validation.
"""

from ._core import (  # noqa: F401
    brain_ir_series,
    build_dictionary,
    coil_combine,
    density_compensation,
    dft_oracle,
    extract_basis,
    gen_coil_sensitivities,
    gen_golden_radial,
    gen_spiral,
    golden_angle_deg,
    lm_fit,
    look_locker_params,
    lung_phantom,
    mixed_l1_l2_loss,
    nmse,
    nufft_adjoint,
    nufft_forward,
    signal_model,
    split_readout,
    ssim,
    t1_from_params,
)

__all__ = [
    "brain_ir_series",
    "build_dictionary",
    "coil_combine",
    "density_compensation",
    "dft_oracle",
    "extract_basis",
    "gen_coil_sensitivities",
    "gen_golden_radial",
    "gen_spiral",
    "golden_angle_deg",
    "lm_fit",
    "look_locker_params",
    "lung_phantom",
    "mixed_l1_l2_loss",
    "nmse",
    "nufft_adjoint",
    "nufft_forward",
    "signal_model",
    "split_readout",
    "ssim",
    "t1_from_params",
]
