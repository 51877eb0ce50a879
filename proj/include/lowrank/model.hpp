#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/compress.hpp"

namespace lowrank {

enum class Activation { Identity, Relu, Tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Desk-scale stand-in for a layered network: dense or factored linear layers
// with an elementwise activation between layers (not after the last).
struct SequentialModel {
    struct Layer {
        std::string name;
        std::optional<Matrix> dense;
        std::optional<FactoredLayer> factored;

        bool is_factored() const { return factored.has_value(); }
        std::size_t out_dim() const { return is_factored() ? factored->u_factor.rows : dense->rows; }
        std::size_t in_dim() const { return is_factored() ? factored->v_factor.cols : dense->cols; }
    };

    std::vector<Layer> layers;
    Activation activation = Activation::Relu;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
};

// Seeded Gaussian weights scaled by 1/sqrt(in_dim). dims has depth+1 entries.
SequentialModel generate_toy_model(std::size_t depth, const std::vector<std::size_t>& dims,
                                   Activation activation, std::uint64_t seed);

Matrix apply_activation(Activation a, Matrix x);

// Full forward pass. Factored layers apply v_factor then u_factor and never
// materialize their product.
Matrix forward(const SequentialModel& model, const Matrix& x);

// Input activation of layer `upto_layer` (inputs propagated through layers
// 0..upto_layer-1 in their current state). upto_layer == depth gives the
// model output.
Matrix forward_upto(const SequentialModel& model, const Matrix& x, std::size_t upto_layer);

// Relative output deviation ||f(orig) - f(comp)||_F / ||f(orig)||_F.
double output_deviation(const SequentialModel& original, const SequentialModel& compressed,
                        const Matrix& probe);

// Element counts for caching the r x L intermediate state instead of the
// M x L full state, per factored layer.
struct CacheAccounting {
    std::size_t full_state_elements = 0;
    std::size_t factored_state_elements = 0;
    double ratio = 0.0;
    std::vector<double> per_layer_ratio;  // r/M, factored layers in order
};

CacheAccounting cache_accounting(const SequentialModel& model, std::size_t columns);

// Max-abs error of recovering the full intermediate state from the cached
// v_factor*x state via u_factor, over all factored layers.
double cache_recovery_error(const SequentialModel& model, const Matrix& x);

}  // namespace lowrank
