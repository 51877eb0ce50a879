#include "lowrank/baselines.hpp"

#include <cmath>

namespace lowrank {

DiagonalScaling scaling_from_activations(const Matrix& x) {
    DiagonalScaling s;
    s.diag.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) sum += std::abs(x(i, j));
        s.diag[i] = std::max(sum / static_cast<double>(x.cols), 1e-12);
    }
    return s;
}

namespace {

FactoredLayer split_factors(const SvdFactors& f, std::size_t rank) {
    TruncationPlan plan = truncate(f, rank);
    std::vector<double> root(rank);
    for (std::size_t i = 0; i < rank; ++i) root[i] = std::sqrt(plan.kept_sigma[i]);
    FactoredLayer layer;
    layer.rank = rank;
    layer.u_factor = scale_cols(take_cols(f.u, rank), root);
    layer.v_factor = scale_rows(transpose(take_cols(f.v, rank)), root);
    return layer;
}

}  // namespace

FactoredLayer vanilla_svd_compress(const Matrix& w, std::size_t rank) {
    return split_factors(svd(w), rank);
}

std::pair<FactoredLayer, SvdFactors> asvd_compress(const Matrix& w, const DiagonalScaling& scaling,
                                                   std::size_t rank) {
    for (double d : scaling.diag)
        if (!(d > 0.0)) throw NumericalError("asvd_compress: nonpositive scaling entry");
    SvdFactors f = svd(scale_cols(w, scaling.diag));
    FactoredLayer layer = split_factors(f, rank);
    std::vector<double> inv(scaling.diag.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scaling.diag[i];
    layer.v_factor = scale_cols(layer.v_factor, inv);
    return {std::move(layer), std::move(f)};
}

double asvd_predicted_loss(const SvdFactors& factors, const DiagonalScaling& scaling,
                           const Matrix& x, std::size_t rank) {
    if (x.rows != scaling.diag.size())
        throw ShapeError("asvd_predicted_loss: activation " + x.shape_str() +
                         " vs scaling length " + std::to_string(scaling.diag.size()));
    // S0^{-1} X once, then one row norm per cut index
    std::vector<double> inv(scaling.diag.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scaling.diag[i];
    Matrix xs = scale_rows(x, inv);
    Matrix vtx = matmul(transpose(factors.v), xs);  // r_full x L
    double total = 0.0;
    for (std::size_t i = rank; i < factors.sigma.size(); ++i) {
        double row2 = 0.0;
        for (std::size_t j = 0; j < vtx.cols; ++j) row2 += vtx(i, j) * vtx(i, j);
        total += factors.sigma[i] * factors.sigma[i] * row2;
    }
    return std::sqrt(total);
}

}  // namespace lowrank
