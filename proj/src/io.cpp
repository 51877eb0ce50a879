#include "lowrank/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lowrank {

namespace fs = std::filesystem;

const char* const kToolVersion = "0.1.0";

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'R', 'T', '1'};
constexpr unsigned char kVersion = 1;

[[noreturn]] void format_fail(const fs::path& path, std::size_t offset, const std::string& what) {
    throw FormatError(path.string() + ": " + what + " at offset " + std::to_string(offset));
}

void atomic_write(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw FormatError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

}  // namespace

void write_tensor(const fs::path& path, const Matrix& m) {
    std::string bytes;
    bytes.reserve(13 + 8 * m.data.size());
    bytes.append(kMagic, 4);
    bytes.push_back(static_cast<char>(kVersion));
    std::uint64_t dims[2] = {m.rows, m.cols};
    bytes.append(reinterpret_cast<const char*>(dims), 16);
    bytes.append(reinterpret_cast<const char*>(m.data.data()), 8 * m.data.size());
    atomic_write(path, bytes);
}

Matrix read_tensor(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        format_fail(path, 0, "bad magic");
    char version = 0;
    if (!in.get(version) || static_cast<unsigned char>(version) != kVersion)
        format_fail(path, 4, "unsupported version");
    std::uint64_t dims[2];
    if (!in.read(reinterpret_cast<char*>(dims), 16)) format_fail(path, 5, "truncated header");
    Matrix m(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]));
    if (!in.read(reinterpret_cast<char*>(m.data.data()),
                 static_cast<std::streamsize>(8 * m.data.size())))
        format_fail(path, 21 + static_cast<std::size_t>(in.gcount()), "truncated payload");
    return m;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Svd: return "svd";
        case Method::Asvd: return "asvd";
        case Method::Svdllm: return "svdllm";
    }
    return "svdllm";
}

Method method_from_name(const std::string& name) {
    if (name == "svd") return Method::Svd;
    if (name == "asvd") return Method::Asvd;
    if (name == "svdllm") return Method::Svdllm;
    throw FormatError("unknown method '" + name + "'");
}

std::string update_mode_name(UpdateMode m) {
    switch (m) {
        case UpdateMode::Auto: return "auto";
        case UpdateMode::On: return "on";
        case UpdateMode::Off: return "off";
    }
    return "auto";
}

UpdateMode update_mode_from_name(const std::string& name) {
    if (name == "auto") return UpdateMode::Auto;
    if (name == "on") return UpdateMode::On;
    if (name == "off") return UpdateMode::Off;
    throw FormatError("unknown update mode '" + name + "'");
}

ordered_json CompressionConfig::to_json() const {
    return ordered_json{{"ratio", ratio},
                        {"method", method_name(method)},
                        {"update", update_mode_name(update)},
                        {"damping_rel", damping_rel},
                        {"ridge", ridge},
                        {"seed", seed},
                        {"calib_count", calib_count}};
}

CompressionConfig CompressionConfig::from_json(const ordered_json& j) {
    CompressionConfig c;
    c.ratio = j.at("ratio").get<double>();
    c.method = method_from_name(j.at("method").get<std::string>());
    c.update = update_mode_from_name(j.at("update").get<std::string>());
    c.damping_rel = j.at("damping_rel").get<double>();
    c.ridge = j.at("ridge").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.calib_count = j.at("calib_count").get<std::size_t>();
    return c;
}

void write_json(const fs::path& path, const ordered_json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

ordered_json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_model(const fs::path& dir, const SequentialModel& model) {
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["activation"] = activation_name(model.activation);
    manifest["input_dim"] = model.input_dim();
    manifest["output_dim"] = model.output_dim();
    ordered_json layers = ordered_json::array();
    for (const auto& layer : model.layers) {
        ordered_json entry;
        entry["name"] = layer.name;
        if (layer.is_factored()) {
            entry["type"] = "factored";
            entry["out_dim"] = layer.out_dim();
            entry["in_dim"] = layer.in_dim();
            entry["rank"] = layer.factored->rank;
            entry["u_file"] = layer.name + ".u.lrt";
            entry["v_file"] = layer.name + ".v.lrt";
            write_tensor(dir / (layer.name + ".u.lrt"), layer.factored->u_factor);
            write_tensor(dir / (layer.name + ".v.lrt"), layer.factored->v_factor);
        } else {
            entry["type"] = "dense";
            entry["out_dim"] = layer.out_dim();
            entry["in_dim"] = layer.in_dim();
            entry["file"] = layer.name + ".lrt";
            write_tensor(dir / (layer.name + ".lrt"), *layer.dense);
        }
        layers.push_back(std::move(entry));
    }
    manifest["layers"] = std::move(layers);
    write_json(dir / "manifest.json", manifest);
}

SequentialModel load_model(const fs::path& dir) {
    ordered_json manifest = read_json(dir / "manifest.json");
    try {
        SequentialModel model;
        model.activation = activation_from_name(manifest.at("activation").get<std::string>());
        for (const auto& entry : manifest.at("layers")) {
            SequentialModel::Layer layer;
            layer.name = entry.at("name").get<std::string>();
            const std::string type = entry.at("type").get<std::string>();
            if (type == "dense") {
                layer.dense = read_tensor(dir / entry.at("file").get<std::string>());
            } else if (type == "factored") {
                FactoredLayer fl;
                fl.u_factor = read_tensor(dir / entry.at("u_file").get<std::string>());
                fl.v_factor = read_tensor(dir / entry.at("v_file").get<std::string>());
                fl.rank = entry.at("rank").get<std::size_t>();
                layer.factored = std::move(fl);
            } else {
                throw FormatError("unknown layer type '" + type + "'");
            }
            model.layers.push_back(std::move(layer));
        }
        if (model.layers.empty()) throw FormatError("manifest lists no layers");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
}

void save_calibration(const fs::path& path, const CalibrationSet& calib) {
    write_tensor(path, calib.inputs);
}

CalibrationSet load_calibration(const fs::path& path) {
    CalibrationSet set;
    set.inputs = read_tensor(path);
    set.source = CalibSource::File;
    return set;
}

}  // namespace lowrank
