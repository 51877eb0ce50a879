#include "lowrank/compress.hpp"

#include <cmath>

namespace lowrank {

std::size_t rank_from_ratio(std::size_t out_dim, std::size_t in_dim, double ratio,
                            bool* was_clamped) {
    const double params = static_cast<double>(out_dim) * static_cast<double>(in_dim);
    const double per_rank = static_cast<double>(out_dim + in_dim);
    auto r = static_cast<long long>(std::floor((1.0 - ratio) * params / per_rank));
    bool clamped = false;
    if (r < 1) {
        r = 1;
        clamped = true;
    }
    const auto max_rank = static_cast<long long>(std::min(out_dim, in_dim));
    if (r > max_rank) r = max_rank;
    if (was_clamped) *was_clamped = clamped;
    return static_cast<std::size_t>(r);
}

TruncationPlan truncate(const SvdFactors& factors, std::size_t rank) {
    if (rank < 1 || rank > factors.sigma.size())
        throw ShapeError("truncate: rank " + std::to_string(rank) + " out of [1, " +
                         std::to_string(factors.sigma.size()) + "]");
    TruncationPlan plan;
    plan.rank = rank;
    plan.kept_sigma.assign(factors.sigma.begin(), factors.sigma.begin() + rank);
    plan.cut_sigma.assign(factors.sigma.begin() + rank, factors.sigma.end());
    double s2 = 0.0;
    for (double s : plan.cut_sigma) s2 += s * s;
    plan.predicted_loss = std::sqrt(s2);
    return plan;
}

CompressedLayer compress_layer(const Matrix& w, const WhiteningTransform& s, std::size_t rank) {
    CompressedLayer out;
    out.factors = svd(whiten_weight(w, s));
    out.plan = truncate(out.factors, rank);

    std::vector<double> root(rank);
    for (std::size_t i = 0; i < rank; ++i) root[i] = std::sqrt(out.plan.kept_sigma[i]);

    out.layer.rank = rank;
    out.layer.u_factor = scale_cols(take_cols(out.factors.u, rank), root);
    Matrix vk_t = scale_rows(transpose(take_cols(out.factors.v, rank)), root);
    out.layer.v_factor = unwhiten_right(vk_t, s);
    return out;
}

double measured_loss(const Matrix& w, const Matrix& w_approx, const Matrix& x) {
    if (w.rows != w_approx.rows || w.cols != w_approx.cols)
        throw ShapeError("measured_loss: weight " + w.shape_str() + " vs approx " +
                         w_approx.shape_str());
    Matrix diff = w;
    for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] -= w_approx.data[i];
    return frobenius_norm(matmul(diff, x));
}

}  // namespace lowrank
