"""Whitened-SVD low-rank compression of linear layers.

Thin wrapper over the C++ extension; all heavy lifting happens in
``lowrank._lowrank``.
"""

from lowrank._lowrank import (
    FormatError,
    NumericalError,
    ShapeError,
    asvd_compress,
    cholesky,
    closed_form_u,
    compress_layer,
    frobenius_norm,
    generate_calibration,
    generate_toy_weights,
    matmul,
    measured_loss,
    orthogonality_defect,
    rank_from_ratio,
    read_tensor,
    run_verification,
    svd,
    vanilla_svd_compress,
    whitening_from_gram,
    write_tensor,
)

__all__ = [
    "FormatError",
    "NumericalError",
    "ShapeError",
    "asvd_compress",
    "cholesky",
    "closed_form_u",
    "compress_layer",
    "frobenius_norm",
    "generate_calibration",
    "generate_toy_weights",
    "matmul",
    "measured_loss",
    "orthogonality_defect",
    "rank_from_ratio",
    "read_tensor",
    "run_verification",
    "svd",
    "vanilla_svd_compress",
    "whitening_from_gram",
    "write_tensor",
]
