#include "lowrank/update.hpp"

#include <cmath>

namespace lowrank {

Matrix build_d_matrix(const CompressedLayer& compressed, const WhiteningTransform& s,
                      const Matrix& x_prime) {
    const std::size_t rank = compressed.plan.rank;
    Matrix z = solve_triangular(s.factor, x_prime, Side::Left, false);  // S^{-1} X'
    Matrix vk_t = transpose(take_cols(compressed.factors.v, rank));
    return scale_rows(matmul(vk_t, z), compressed.plan.kept_sigma);
}

Matrix closed_form_u(const Matrix& w, const UpdateContext& ctx) {
    const Matrix& d = ctx.d_matrix;
    if (w.cols != ctx.x_prime.rows || d.cols != ctx.x_prime.cols)
        throw ShapeError("closed_form_u: weight " + w.shape_str() + ", activation " +
                         ctx.x_prime.shape_str() + ", design " + d.shape_str());
    Matrix ddt = matmul(d, transpose(d));
    Matrix rhs = matmul(d, transpose(matmul(w, ctx.x_prime)));  // D X'^T W^T = (W X' D^T)^T
    try {
        return transpose(solve_regularized(ddt, rhs, ctx.ridge));
    } catch (const NumericalError& e) {
        if (ctx.ridge == 0.0)
            throw NumericalError(std::string("closed_form_u: D D^T is singular; retry with a "
                                             "positive ridge (") + e.what() + ")");
        throw;
    }
}

Matrix closed_form_u_expanded(const Matrix& w, const Matrix& x_prime, const WhiteningTransform& s,
                              const Matrix& v_kept, const std::vector<double>& sigma_kept,
                              double ridge) {
    // G = X' X'^T; Q = S^{-1} G; R = Q S^{-T}
    Matrix gram = matmul(x_prime, transpose(x_prime));
    Matrix q = solve_triangular(s.factor, gram, Side::Left, false);
    Matrix r = solve_triangular(s.factor, q, Side::Right, true);

    Matrix v_sigma = scale_cols(v_kept, sigma_kept);              // V S1
    Matrix numer = matmul(matmul(w, transpose(q)), v_sigma);      // W G S^{-T} V S1
    Matrix denom = matmul(scale_rows(transpose(v_kept), sigma_kept), matmul(r, v_sigma));
    try {
        return transpose(solve_regularized(denom, transpose(numer), ridge));
    } catch (const NumericalError& e) {
        if (ridge == 0.0)
            throw NumericalError(std::string("closed_form_u_expanded: singular normal matrix; "
                                             "retry with a positive ridge (") + e.what() + ")");
        throw;
    }
}

UpdateOutcome update_model(const SequentialModel& original, const std::vector<LayerPlan>& plans,
                           const CalibrationSet& calib, double ridge) {
    if (plans.size() != original.depth())
        throw ShapeError("update_model: " + std::to_string(plans.size()) + " plans for depth " +
                         std::to_string(original.depth()));
    UpdateOutcome out;
    out.model = original;
    out.model.layers.clear();
    for (std::size_t i = 0; i < plans.size(); ++i)
        out.model.layers.push_back(
            {original.layers[i].name, std::nullopt, plans[i].compressed.layer});
    out.ridge_used.assign(plans.size(), ridge);

    for (std::size_t i = 0; i < plans.size(); ++i) {
        const auto& plan = plans[i];
        Matrix x_prime = capture_activations(out.model, calib, i);
        UpdateContext ctx{i, std::move(x_prime), Matrix{}, ridge};
        ctx.d_matrix = build_d_matrix(plan.compressed, plan.whitening, ctx.x_prime);

        Matrix u_new;
        try {
            u_new = closed_form_u(*original.layers[i].dense, ctx);
        } catch (const NumericalError& e) {
            if (ridge != 0.0)
                throw NumericalError("update_model: layer " + std::to_string(i) + ": " + e.what());
            ctx.ridge = 1e-10;
            out.ridge_used[i] = ctx.ridge;
            try {
                u_new = closed_form_u(*original.layers[i].dense, ctx);
            } catch (const NumericalError& e2) {
                throw NumericalError("update_model: layer " + std::to_string(i) + ": " +
                                     e2.what());
            }
        }
        std::vector<double> root(plan.compressed.plan.rank);
        for (std::size_t k = 0; k < root.size(); ++k)
            root[k] = std::sqrt(plan.compressed.plan.kept_sigma[k]);
        out.model.layers[i].factored->u_factor = scale_cols(u_new, root);
    }
    return out;
}

}  // namespace lowrank
