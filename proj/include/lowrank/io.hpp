#pragma once

#include <filesystem>

#include "lowrank/calibration.hpp"
#include "lowrank/model.hpp"

#include <nlohmann/json.hpp>

namespace lowrank {

using ordered_json = nlohmann::ordered_json;

// Tensor container: magic "LRT1", version byte 1, rows and cols as u64
// little-endian, then row-major f64 little-endian payload. Writes go
// through a temp file and rename.
void write_tensor(const std::filesystem::path& path, const Matrix& m);
Matrix read_tensor(const std::filesystem::path& path);

enum class Method { Svd, Asvd, Svdllm };
enum class UpdateMode { Auto, On, Off };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::string update_mode_name(UpdateMode m);
UpdateMode update_mode_from_name(const std::string& name);

struct CompressionConfig {
    double ratio = 0.2;
    Method method = Method::Svdllm;
    UpdateMode update = UpdateMode::Auto;
    double damping_rel = 1e-6;
    double ridge = 0.0;
    std::uint64_t seed = 0;
    std::size_t calib_count = 256;

    // auto resolves to on iff ratio >= 0.4
    bool update_enabled() const {
        if (update == UpdateMode::On) return true;
        if (update == UpdateMode::Off) return false;
        return ratio >= 0.4;
    }

    ordered_json to_json() const;
    static CompressionConfig from_json(const ordered_json& j);
};

// Model directory: manifest.json + one tensor file per matrix.
void save_model(const std::filesystem::path& dir, const SequentialModel& model);
SequentialModel load_model(const std::filesystem::path& dir);

void save_calibration(const std::filesystem::path& path, const CalibrationSet& calib);
CalibrationSet load_calibration(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const ordered_json& j);
ordered_json read_json(const std::filesystem::path& path);

extern const char* const kToolVersion;

}  // namespace lowrank
