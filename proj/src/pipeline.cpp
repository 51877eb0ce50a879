#include "lowrank/pipeline.hpp"

#include "lowrank/baselines.hpp"

namespace lowrank {

namespace {

Matrix materialize(const FactoredLayer& layer) {
    return matmul(layer.u_factor, layer.v_factor);
}

}  // namespace

CompressionOutcome compress_model(const SequentialModel& model, const CalibrationSet& calib,
                                  const CompressionConfig& config) {
    for (const auto& layer : model.layers)
        if (layer.is_factored())
            throw ShapeError("compress_model: layer " + layer.name + " is already factored");
    if (calib.inputs.rows != model.input_dim())
        throw ShapeError("compress_model: calibration " + calib.inputs.shape_str() +
                         " vs model input dim " + std::to_string(model.input_dim()));

    CompressionOutcome out;
    out.report["tool_version"] = kToolVersion;
    out.report["config"] = config.to_json();
    ordered_json layer_records = ordered_json::array();

    const bool do_update = config.method == Method::Svdllm && config.update_enabled();

    SequentialModel compressed = model;
    std::vector<LayerPlan> plans;
    std::size_t params_before = 0;
    std::size_t params_after = 0;

    std::size_t failed_layer = model.depth();
    std::string failure;

    for (std::size_t i = 0; i < model.depth(); ++i) {
        const Matrix& w = *model.layers[i].dense;
        params_before += w.rows * w.cols;
        ordered_json rec;
        rec["name"] = model.layers[i].name;
        rec["out_dim"] = w.rows;
        rec["in_dim"] = w.cols;
        try {
            bool clamped = false;
            const std::size_t rank = rank_from_ratio(w.rows, w.cols, config.ratio, &clamped);
            rec["rank"] = rank;
            rec["rank_clamped"] = clamped;

            Matrix x = capture_activations(model, calib, i);
            FactoredLayer fl;
            switch (config.method) {
                case Method::Svd: {
                    fl = vanilla_svd_compress(w, rank);
                    rec["predicted_loss"] = nullptr;
                    rec["epsilon_used"] = nullptr;
                    break;
                }
                case Method::Asvd: {
                    DiagonalScaling scaling = scaling_from_activations(x);
                    auto [layer, factors] = asvd_compress(w, scaling, rank);
                    fl = std::move(layer);
                    rec["predicted_loss"] = asvd_predicted_loss(factors, scaling, x, rank);
                    rec["epsilon_used"] = nullptr;
                    break;
                }
                case Method::Svdllm: {
                    GramAccumulator acc(w.cols);
                    accumulate(acc, x);
                    WhiteningTransform s =
                        whitening_from_gram(acc.gram, config.damping_rel, acc.columns_seen);
                    CompressedLayer cl = compress_layer(w, s, rank);
                    fl = cl.layer;
                    rec["predicted_loss"] = cl.plan.predicted_loss;
                    rec["predicted_loss_approximate"] = s.damping_used > 0.0;
                    rec["epsilon_used"] = s.damping_used;
                    plans.push_back({std::move(cl), std::move(s)});
                    break;
                }
            }
            rec["measured_loss"] = measured_loss(w, materialize(fl), x);
            rec["updated"] = false;
            rec["ridge_used"] = nullptr;
            params_after += fl.rank * (w.rows + w.cols);
            compressed.layers[i].dense.reset();
            compressed.layers[i].factored = std::move(fl);
        } catch (const std::exception& e) {
            rec["error"] = e.what();
            layer_records.push_back(std::move(rec));
            failed_layer = i;
            failure = e.what();
            break;
        }
        layer_records.push_back(std::move(rec));
    }

    if (failure.empty() && do_update) {
        try {
            UpdateOutcome updated = update_model(model, plans, calib, config.ridge);
            compressed = std::move(updated.model);
            for (std::size_t i = 0; i < model.depth(); ++i) {
                auto& rec = layer_records[i];
                rec["updated"] = true;
                rec["ridge_used"] = updated.ridge_used[i];
                // loss at the updated model's own upstream activations,
                // the quantity the closed form minimizes
                Matrix x_prime = capture_activations(compressed, calib, i);
                rec["measured_loss"] = measured_loss(
                    *model.layers[i].dense, materialize(*compressed.layers[i].factored), x_prime);
            }
        } catch (const std::exception& e) {
            failure = e.what();
            out.report["update_error"] = failure;
        }
    }

    out.report["layers"] = std::move(layer_records);

    if (!failure.empty()) {
        out.report["error"] = failure;
        if (failed_layer < model.depth()) out.report["failed_layer"] = failed_layer;
        return out;
    }

    ordered_json model_rec;
    {
        Matrix calib_probe = calib.inputs;
        CalibrationSet holdout = generate_calibration(model.input_dim(), calib.inputs.cols,
                                                      config.seed + 1,
                                                      CalibSource::SyntheticGaussian);
        model_rec["output_deviation_calib"] = output_deviation(model, compressed, calib_probe);
        model_rec["output_deviation_holdout"] =
            output_deviation(model, compressed, holdout.inputs);
        model_rec["param_count_before"] = params_before;
        model_rec["param_count_after"] = params_after;
        model_rec["cache_ratio"] = cache_accounting(compressed, calib.inputs.cols).ratio;
    }
    out.report["model"] = std::move(model_rec);
    out.model = std::move(compressed);
    for (auto& plan : plans) out.whitening.push_back(std::move(plan.whitening));
    out.ok = true;
    return out;
}

}  // namespace lowrank
