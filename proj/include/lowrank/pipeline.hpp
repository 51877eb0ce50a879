#pragma once

#include "lowrank/io.hpp"
#include "lowrank/update.hpp"

namespace lowrank {

// Whitening -> per-layer compression -> optional closed-form update, with a
// full audit report. On a per-layer numerical failure the report still
// carries every layer processed so far plus the failing layer's error.
struct CompressionOutcome {
    bool ok = false;
    SequentialModel model;  // valid only when ok
    ordered_json report;
    std::vector<WhiteningTransform> whitening;  // per layer, svdllm only
};

CompressionOutcome compress_model(const SequentialModel& model, const CalibrationSet& calib,
                                  const CompressionConfig& config);

}  // namespace lowrank
