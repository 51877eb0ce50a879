#include "lowrank/calibration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace lowrank {

std::string calib_source_name(CalibSource s) {
    switch (s) {
        case CalibSource::SyntheticGaussian: return "synthetic-gaussian";
        case CalibSource::SyntheticHeavytail: return "synthetic-heavytail";
        case CalibSource::File: return "file";
    }
    return "file";
}

CalibrationSet generate_calibration(std::size_t dim, std::size_t count, std::uint64_t seed,
                                    CalibSource source) {
    if (dim < 1 || count < 1)
        throw ShapeError("generate_calibration: dim and count must be >= 1");
    CalibrationSet set;
    set.seed = seed;
    set.source = source;
    set.inputs = Matrix(dim, count);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> scale(dim, 1.0);
    if (source == CalibSource::SyntheticHeavytail && dim > 1) {
        // per-channel RMS spread of 10^3 between extremes
        for (std::size_t i = 0; i < dim; ++i)
            scale[i] = std::pow(10.0, 3.0 * static_cast<double>(i) /
                                          static_cast<double>(dim - 1) - 1.5);
    }
    for (std::size_t j = 0; j < count; ++j)
        for (std::size_t i = 0; i < dim; ++i) set.inputs(i, j) = scale[i] * gauss(rng);
    return set;
}

void accumulate(GramAccumulator& acc, const Matrix& x_batch) {
    if (x_batch.rows != acc.gram.rows)
        throw ShapeError("accumulate: batch " + x_batch.shape_str() + " vs gram " +
                         acc.gram.shape_str());
    using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const EMat> x(x_batch.data.data(), static_cast<Eigen::Index>(x_batch.rows),
                             static_cast<Eigen::Index>(x_batch.cols));
    Eigen::Map<EMat> g(acc.gram.data.data(), static_cast<Eigen::Index>(acc.gram.rows),
                       static_cast<Eigen::Index>(acc.gram.cols));
    g.noalias() += x * x.transpose();
    acc.columns_seen += x_batch.cols;
}

Matrix capture_activations(const SequentialModel& model, const CalibrationSet& calib,
                           std::size_t upto_layer) {
    return forward_upto(model, calib.inputs, upto_layer);
}

}  // namespace lowrank
