#include "lowrank/compare.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

namespace lowrank {

namespace {

struct Variant {
    const char* label;
    Method method;
    UpdateMode update;
};

constexpr Variant kVariants[] = {
    {"svd", Method::Svd, UpdateMode::Off},
    {"asvd", Method::Asvd, UpdateMode::Off},
    {"svdllm-W", Method::Svdllm, UpdateMode::Off},
    {"svdllm-W+U", Method::Svdllm, UpdateMode::On},
};

}  // namespace

CompareTable compare_methods(const HarnessConfig& config, std::size_t trials) {
    if (trials < 1) throw ShapeError("compare_methods: trials must be >= 1");
    CompareTable table;
    table.depth = config.depth;
    std::vector<std::size_t> dims(config.depth + 1, config.width);

    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t seed = config.base.seed + t;
        SequentialModel model = generate_toy_model(config.depth, dims, config.activation, seed);
        CalibrationSet calib = generate_calibration(config.width, config.base.calib_count,
                                                    seed + 1000003,
                                                    CalibSource::SyntheticGaussian);
        std::vector<Matrix> x_orig(config.depth);
        for (std::size_t i = 0; i < config.depth; ++i)
            x_orig[i] = capture_activations(model, calib, i);

        for (double ratio : config.ratios) {
            for (const auto& variant : kVariants) {
                CompressionConfig cc = config.base;
                cc.ratio = ratio;
                cc.method = variant.method;
                cc.update = variant.update;
                cc.seed = seed;

                const auto start = std::chrono::steady_clock::now();
                CompressionOutcome outcome = compress_model(model, calib, cc);
                const auto stop = std::chrono::steady_clock::now();
                if (!outcome.ok)
                    throw NumericalError("compare_methods: " + std::string(variant.label) +
                                         " failed: " +
                                         outcome.report.at("error").get<std::string>());

                CompareRow row;
                row.trial = t;
                row.seed = seed;
                row.method = variant.label;
                row.ratio = ratio;
                for (std::size_t i = 0; i < config.depth; ++i) {
                    const auto& fl = *outcome.model.layers[i].factored;
                    Matrix w_approx = matmul(fl.u_factor, fl.v_factor);
                    row.loss_original_x.push_back(
                        measured_loss(*model.layers[i].dense, w_approx, x_orig[i]));
                    Matrix x_own = capture_activations(outcome.model, calib, i);
                    row.loss_own_x.push_back(
                        measured_loss(*model.layers[i].dense, w_approx, x_own));
                }
                row.deviation_calib =
                    outcome.report.at("model").at("output_deviation_calib").get<double>();
                row.deviation_holdout =
                    outcome.report.at("model").at("output_deviation_holdout").get<double>();
                row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

std::string compare_csv(const CompareTable& table) {
    std::ostringstream os;
    os << "trial,seed,method,ratio";
    for (std::size_t i = 0; i < table.depth; ++i) os << ",loss_orig_l" << i;
    for (std::size_t i = 0; i < table.depth; ++i) os << ",loss_own_l" << i;
    os << ",deviation_calib,deviation_holdout,wall_ms\n";
    os << std::setprecision(17);
    for (const auto& row : table.rows) {
        os << row.trial << ',' << row.seed << ',' << row.method << ',' << row.ratio;
        for (double v : row.loss_original_x) os << ',' << v;
        for (double v : row.loss_own_x) os << ',' << v;
        os << ',' << row.deviation_calib << ',' << row.deviation_holdout << ',' << row.wall_ms
           << '\n';
    }
    return os.str();
}

std::string compare_text(const CompareTable& table) {
    std::ostringstream os;
    os << std::left << std::setw(8) << "trial" << std::setw(12) << "method" << std::setw(8)
       << "ratio" << std::setw(14) << "dev_calib" << std::setw(14) << "dev_holdout"
       << "per-layer loss (original X)\n";
    for (const auto& row : table.rows) {
        os << std::left << std::setw(8) << row.trial << std::setw(12) << row.method
           << std::setw(8) << std::setprecision(3) << row.ratio << std::setw(14)
           << std::setprecision(5) << row.deviation_calib << std::setw(14)
           << row.deviation_holdout;
        for (double v : row.loss_original_x) os << std::setprecision(5) << v << ' ';
        os << '\n';
    }
    return os.str();
}

}  // namespace lowrank
