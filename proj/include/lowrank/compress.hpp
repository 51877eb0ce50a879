#pragma once

#include "lowrank/matrix.hpp"
#include "lowrank/whitening.hpp"

namespace lowrank {

// Which singular values survive truncation and the exact Frobenius loss the
// cut values predict on whitened data.
struct TruncationPlan {
    std::size_t rank = 0;
    std::vector<double> kept_sigma;  // descending, length rank
    std::vector<double> cut_sigma;   // descending remainder
    double predicted_loss = 0.0;     // sqrt(sum cut_sigma^2)
};

// Rank-r replacement for a dense layer: W' = u_factor * v_factor.
struct FactoredLayer {
    Matrix u_factor;  // out_dim x rank
    Matrix v_factor;  // rank x in_dim
    std::size_t rank = 0;
};

struct CompressedLayer {
    FactoredLayer layer;
    TruncationPlan plan;
    SvdFactors factors;  // of the whitened weight, pre-truncation
};

// r = floor((1 - ratio) * out * in / (out + in)), clamped to [1, min(out, in)].
// was_clamped reports the low clamp for the compression report.
std::size_t rank_from_ratio(std::size_t out_dim, std::size_t in_dim, double ratio,
                            bool* was_clamped = nullptr);

TruncationPlan truncate(const SvdFactors& factors, std::size_t rank);

// SVD(W*S), tail truncation, square-root split of the kept spectrum:
// u_factor = U_kept diag(kept)^{1/2}, v_factor = diag(kept)^{1/2} V_kept^T S^{-1}.
CompressedLayer compress_layer(const Matrix& w, const WhiteningTransform& s, std::size_t rank);

// ||(w - w_approx) x||_F, the Eq-style compression loss.
double measured_loss(const Matrix& w, const Matrix& w_approx, const Matrix& x);

}  // namespace lowrank
