#pragma once

#include "lowrank/pipeline.hpp"

namespace lowrank {

// Seeded A/B sweep over methods and ratios on toy models, mirroring the
// structure of a per-method results table at desk scale.
struct HarnessConfig {
    std::size_t depth = 3;
    std::size_t width = 16;
    Activation activation = Activation::Relu;
    std::vector<double> ratios = {0.2, 0.4, 0.6};
    CompressionConfig base;  // damping, ridge, calib_count, seed base
};

struct CompareRow {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string method;  // svd | asvd | svdllm-W | svdllm-W+U
    double ratio = 0.0;
    // loss_original_x: ||(W_i - W'_i) X_i||_F at the original model's
    // activations; loss_own_x: the same at the compressed model's own
    // propagated activations (what the update minimizes).
    std::vector<double> loss_original_x;
    std::vector<double> loss_own_x;
    double deviation_calib = 0.0;
    double deviation_holdout = 0.0;
    double wall_ms = 0.0;
};

struct CompareTable {
    std::vector<CompareRow> rows;
    std::size_t depth = 0;
};

CompareTable compare_methods(const HarnessConfig& config, std::size_t trials);

std::string compare_csv(const CompareTable& table);
std::string compare_text(const CompareTable& table);

}  // namespace lowrank
