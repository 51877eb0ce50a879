#include "lowrank/model.hpp"

#include <cmath>
#include <random>

namespace lowrank {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw FormatError("unknown activation '" + name + "'");
}

SequentialModel generate_toy_model(std::size_t depth, const std::vector<std::size_t>& dims,
                                   Activation activation, std::uint64_t seed) {
    if (depth < 1 || dims.size() != depth + 1)
        throw ShapeError("generate_toy_model: dims must have depth+1 entries");
    SequentialModel model;
    model.activation = activation;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < depth; ++i) {
        Matrix w(dims[i + 1], dims[i]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[i]));
        for (double& x : w.data) x = scale * gauss(rng);
        model.layers.push_back({"layer" + std::to_string(i), std::move(w), std::nullopt});
    }
    return model;
}

Matrix apply_activation(Activation a, Matrix x) {
    switch (a) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (double& v : x.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : x.data) v = std::tanh(v);
            break;
    }
    return x;
}

namespace {

Matrix layer_apply(const SequentialModel::Layer& layer, const Matrix& x, std::size_t index) {
    try {
        if (layer.is_factored())
            return matmul(layer.factored->u_factor, matmul(layer.factored->v_factor, x));
        return matmul(*layer.dense, x);
    } catch (const ShapeError& e) {
        throw ShapeError("layer " + std::to_string(index) + " (" + layer.name + "): " + e.what());
    }
}

}  // namespace

Matrix forward_upto(const SequentialModel& model, const Matrix& x, std::size_t upto_layer) {
    if (upto_layer > model.depth())
        throw ShapeError("forward_upto: layer index " + std::to_string(upto_layer) +
                         " exceeds depth " + std::to_string(model.depth()));
    Matrix cur = x;
    for (std::size_t i = 0; i < upto_layer; ++i) {
        cur = layer_apply(model.layers[i], cur, i);
        if (i + 1 < model.depth()) cur = apply_activation(model.activation, std::move(cur));
    }
    return cur;
}

Matrix forward(const SequentialModel& model, const Matrix& x) {
    return forward_upto(model, x, model.depth());
}

double output_deviation(const SequentialModel& original, const SequentialModel& compressed,
                        const Matrix& probe) {
    if (original.input_dim() != compressed.input_dim() ||
        original.output_dim() != compressed.output_dim())
        throw ShapeError("output_deviation: models have incompatible outer dimensions");
    Matrix yo = forward(original, probe);
    Matrix yc = forward(compressed, probe);
    const double ref = frobenius_norm(yo);
    if (ref == 0.0) throw NumericalError("output_deviation: original output has zero norm");
    for (std::size_t i = 0; i < yo.data.size(); ++i) yo.data[i] -= yc.data[i];
    return frobenius_norm(yo) / ref;
}

CacheAccounting cache_accounting(const SequentialModel& model, std::size_t columns) {
    CacheAccounting acc;
    for (const auto& layer : model.layers) {
        if (!layer.is_factored()) continue;
        acc.full_state_elements += layer.out_dim() * columns;
        acc.factored_state_elements += layer.factored->rank * columns;
        acc.per_layer_ratio.push_back(static_cast<double>(layer.factored->rank) /
                                      static_cast<double>(layer.out_dim()));
    }
    if (acc.per_layer_ratio.empty())
        throw NumericalError("cache_accounting: model has no factored layers");
    acc.ratio = static_cast<double>(acc.factored_state_elements) /
                static_cast<double>(acc.full_state_elements);
    return acc;
}

double cache_recovery_error(const SequentialModel& model, const Matrix& x) {
    double worst = 0.0;
    bool any = false;
    Matrix cur = x;
    for (std::size_t i = 0; i < model.depth(); ++i) {
        const auto& layer = model.layers[i];
        if (layer.is_factored()) {
            any = true;
            Matrix cached = matmul(layer.factored->v_factor, cur);
            Matrix recovered = matmul(layer.factored->u_factor, cached);
            Matrix full = matmul(matmul(layer.factored->u_factor, layer.factored->v_factor), cur);
            for (std::size_t k = 0; k < full.data.size(); ++k)
                worst = std::max(worst, std::abs(full.data[k] - recovered.data[k]));
            cur = std::move(recovered);
        } else {
            cur = matmul(*layer.dense, cur);
        }
        if (i + 1 < model.depth()) cur = apply_activation(model.activation, std::move(cur));
    }
    if (!any) throw NumericalError("cache_recovery_error: model has no factored layers");
    return worst;
}

}  // namespace lowrank
