#pragma once

#include "lowrank/compress.hpp"

namespace lowrank {

// Per-channel absolute activation means, floored at 1e-12 so the scaling
// stays invertible on dead channels.
struct DiagonalScaling {
    std::vector<double> diag;
};

DiagonalScaling scaling_from_activations(const Matrix& x);

// Best rank-r approximation of W itself, no activation awareness.
FactoredLayer vanilla_svd_compress(const Matrix& w, std::size_t rank);

// SVD of W*diag(scaling), tail truncation, scaling inverse folded into the
// right factor. Returns the pre-truncation factors for the loss predictor.
std::pair<FactoredLayer, SvdFactors> asvd_compress(const Matrix& w, const DiagonalScaling& scaling,
                                                   std::size_t rank);

// Closed-form loss of the diagonal-scaling baseline:
// L^2 = sum over cut i of sigma'_i^2 ||v'_i^T S0^{-1} X||_F^2.
// Unlike the whitened case this still depends on the activations.
double asvd_predicted_loss(const SvdFactors& factors, const DiagonalScaling& scaling,
                           const Matrix& x, std::size_t rank);

}  // namespace lowrank
