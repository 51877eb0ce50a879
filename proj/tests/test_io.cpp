#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "lowrank/io.hpp"

using namespace lowrank;
using namespace lowrank::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lowrank_test_" + std::to_string(std::chrono::steady_clock::now()
                                                     .time_since_epoch()
                                                     .count()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("tensor round trip is bit-identical") {
    TempDir tmp;
    Matrix m = random_matrix(5, 7, 101);
    write_tensor(tmp.path / "m.lrt", m);
    Matrix back = read_tensor(tmp.path / "m.lrt");
    CHECK(back.rows == 5);
    CHECK(back.cols == 7);
    CHECK(back.data == m.data);
}

TEST_CASE("corrupt tensor files raise format errors naming the offset") {
    TempDir tmp;
    Matrix m = random_matrix(3, 3, 102);
    write_tensor(tmp.path / "m.lrt", m);

    std::string bytes = slurp(tmp.path / "m.lrt");

    {
        std::ofstream out(tmp.path / "truncated.lrt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
    }
    CHECK_THROWS_WITH_AS(read_tensor(tmp.path / "truncated.lrt"), doctest::Contains("offset"),
                         FormatError);

    bytes[0] = 'X';
    {
        std::ofstream out(tmp.path / "badmagic.lrt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_WITH_AS(read_tensor(tmp.path / "badmagic.lrt"), doctest::Contains("magic"),
                         FormatError);

    CHECK_THROWS_AS(read_tensor(tmp.path / "missing.lrt"), FormatError);
}

TEST_CASE("large tensor round trip stays fast") {
    TempDir tmp;
    Matrix m = random_matrix(1024, 1024, 103);
    const auto start = std::chrono::steady_clock::now();
    write_tensor(tmp.path / "big.lrt", m);
    Matrix back = read_tensor(tmp.path / "big.lrt");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(back.data == m.data);
    CHECK(secs < 1.0);
}

TEST_CASE("config serializes losslessly and resolves the update threshold") {
    CompressionConfig c;
    c.ratio = 0.45;
    c.method = Method::Asvd;
    c.update = UpdateMode::Auto;
    c.damping_rel = 1e-7;
    c.ridge = 1e-9;
    c.seed = 1234567;
    c.calib_count = 128;
    CompressionConfig back = CompressionConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());

    CompressionConfig a;
    a.update = UpdateMode::Auto;
    a.ratio = 0.39;
    CHECK_FALSE(a.update_enabled());
    a.ratio = 0.4;
    CHECK(a.update_enabled());
    a.update = UpdateMode::Off;
    CHECK_FALSE(a.update_enabled());
    a.update = UpdateMode::On;
    a.ratio = 0.1;
    CHECK(a.update_enabled());
}

TEST_CASE("model directory round trip") {
    TempDir tmp;
    SequentialModel model = generate_toy_model(2, {4, 5, 3}, Activation::Tanh, 104);
    FactoredLayer fl;
    fl.u_factor = random_matrix(3, 2, 105);
    fl.v_factor = random_matrix(2, 5, 106);
    fl.rank = 2;
    model.layers[1].dense.reset();
    model.layers[1].factored = fl;

    save_model(tmp.path / "model", model);
    SequentialModel back = load_model(tmp.path / "model");
    CHECK(back.activation == Activation::Tanh);
    REQUIRE(back.depth() == 2);
    CHECK(back.layers[0].dense->data == model.layers[0].dense->data);
    REQUIRE(back.layers[1].is_factored());
    CHECK(back.layers[1].factored->rank == 2);
    CHECK(back.layers[1].factored->u_factor.data == fl.u_factor.data);
    CHECK(back.layers[1].factored->v_factor.data == fl.v_factor.data);
}

TEST_CASE("calibration file round trip") {
    TempDir tmp;
    auto calib = generate_calibration(6, 10, 107, CalibSource::SyntheticGaussian);
    save_calibration(tmp.path / "c.lrt", calib);
    CalibrationSet back = load_calibration(tmp.path / "c.lrt");
    CHECK(back.inputs.data == calib.inputs.data);
    CHECK(back.source == CalibSource::File);
}

TEST_CASE("broken manifest raises a format error") {
    TempDir tmp;
    fs::create_directories(tmp.path / "model");
    std::ofstream(tmp.path / "model" / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_model(tmp.path / "model"), FormatError);
}
