#pragma once

#include "lowrank/calibration.hpp"
#include "lowrank/compress.hpp"

namespace lowrank {

// Inputs for one layer's least-squares left-factor update:
// x_prime is the updated upstream activation, d_matrix is
// diag(kept_sigma) V_kept^T S^{-1} x_prime (rank x L).
struct UpdateContext {
    std::size_t layer_index = 0;
    Matrix x_prime;
    Matrix d_matrix;
    double ridge = 0.0;
};

Matrix build_d_matrix(const CompressedLayer& compressed, const WhiteningTransform& s,
                      const Matrix& x_prime);

// U' = W X' D^T (D D^T + ridge*scaled I)^{-1}; with ridge = 0 and full-row-rank
// D this is the exact minimizer of ||W X' - U' D||_F.
Matrix closed_form_u(const Matrix& w, const UpdateContext& ctx);

// Same minimizer via the expanded Gram form
// U' = W G S^{-T} V S1 (S1 V^T S^{-1} G S^{-T} V S1)^{-1}, G = X' X'^T.
// Must agree with closed_form_u on well-conditioned inputs.
Matrix closed_form_u_expanded(const Matrix& w, const Matrix& x_prime, const WhiteningTransform& s,
                              const Matrix& v_kept, const std::vector<double>& sigma_kept,
                              double ridge);

struct LayerPlan {
    CompressedLayer compressed;
    WhiteningTransform whitening;
};

struct UpdateOutcome {
    SequentialModel model;
    std::vector<double> ridge_used;  // per layer; the ridge the solve succeeded with
};

// Sequentially rebuilds each layer's u_factor from the closed form, feeding
// each layer the activations of the already-updated prefix. `original`
// supplies the dense W_i; plans must cover every layer in order. On a
// singular D D^T with ridge = 0, falls back to ridge 1e-10 and records it.
UpdateOutcome update_model(const SequentialModel& original, const std::vector<LayerPlan>& plans,
                           const CalibrationSet& calib, double ridge);

}  // namespace lowrank
