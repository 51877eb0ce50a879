#pragma once

#include "lowrank/model.hpp"

namespace lowrank {

enum class CalibSource { SyntheticGaussian, SyntheticHeavytail, File };

std::string calib_source_name(CalibSource s);

// Columns are calibration samples. Regeneration with the same seed and
// source is bit-identical.
struct CalibrationSet {
    Matrix inputs;  // dim x count
    std::uint64_t seed = 0;
    CalibSource source = CalibSource::SyntheticGaussian;
};

// Heavytail mixes per-channel scales spanning three orders of magnitude to
// emulate activation outliers.
CalibrationSet generate_calibration(std::size_t dim, std::size_t count, std::uint64_t seed,
                                    CalibSource source);

// Streaming X X^T accumulator.
struct GramAccumulator {
    Matrix gram;
    std::size_t columns_seen = 0;

    explicit GramAccumulator(std::size_t dim) : gram(dim, dim) {}
};

void accumulate(GramAccumulator& acc, const Matrix& x_batch);

// Input activation to layer `upto_layer` given the model's current
// (possibly partially compressed/updated) state.
Matrix capture_activations(const SequentialModel& model, const CalibrationSet& calib,
                           std::size_t upto_layer);

}  // namespace lowrank
