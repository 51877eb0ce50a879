#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "lowrank/compare.hpp"
#include "lowrank/io.hpp"
#include "lowrank/pipeline.hpp"
#include "lowrank/verify.hpp"

namespace fs = std::filesystem;
using namespace lowrank;

namespace {

std::vector<std::size_t> parse_dims(const std::string& spec) {
    std::vector<std::size_t> dims;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) dims.push_back(std::stoul(item));
    return dims;
}

std::vector<double> parse_ratios(const std::string& spec) {
    std::vector<double> ratios;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) ratios.push_back(std::stod(item));
    return ratios;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_sizes(const std::string& spec) {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw CLI::ValidationError("--sizes", "expected RxC items");
        sizes.emplace_back(std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1)));
    }
    return sizes;
}

int cmd_gen_toy(std::size_t depth, const std::string& dims_spec, const std::string& activation,
                std::uint64_t seed, const std::string& out_dir, std::size_t calib_count,
                const std::string& calib_source) {
    auto dims = parse_dims(dims_spec);
    SequentialModel model =
        generate_toy_model(depth, dims, activation_from_name(activation), seed);
    CalibSource source = calib_source == "heavytail" ? CalibSource::SyntheticHeavytail
                                                     : CalibSource::SyntheticGaussian;
    CalibrationSet calib = generate_calibration(model.input_dim(), calib_count, seed, source);
    fs::create_directories(out_dir);
    save_model(out_dir, model);
    save_calibration(fs::path(out_dir) / "calibration.lrt", calib);
    std::cout << "wrote model (depth " << depth << ") and " << calib_count
              << "-column calibration to " << out_dir << "\n";
    return 0;
}

int cmd_compress(const std::string& model_dir, const std::string& calib_file, double ratio,
                 const std::string& method, const std::string& update, double damping,
                 double ridge, std::uint64_t seed, std::size_t calib_count,
                 const std::string& out_dir, const std::string& report_file,
                 const std::string& dump_whitening) {
    SequentialModel model = load_model(model_dir);
    CalibrationSet calib = load_calibration(calib_file);
    if (calib_count > 0 && calib_count < calib.inputs.cols)
        calib.inputs = take_cols(calib.inputs, calib_count);

    CompressionConfig config;
    config.ratio = ratio;
    config.method = method_from_name(method);
    config.update = update_mode_from_name(update);
    config.damping_rel = damping;
    config.ridge = ridge;
    config.seed = seed;
    config.calib_count = calib.inputs.cols;

    CompressionOutcome outcome = compress_model(model, calib, config);
    if (!report_file.empty()) write_json(report_file, outcome.report);
    if (!outcome.ok) {
        std::cerr << "compression failed: " << outcome.report.at("error").get<std::string>()
                  << "\n";
        return 1;
    }
    save_model(out_dir, outcome.model);
    if (!dump_whitening.empty()) {
        fs::create_directories(dump_whitening);
        for (std::size_t i = 0; i < outcome.whitening.size(); ++i)
            write_tensor(fs::path(dump_whitening) / (model.layers[i].name + ".whitening.lrt"),
                         outcome.whitening[i].factor.l);
    }
    std::cout << "compressed model written to " << out_dir;
    if (!report_file.empty()) std::cout << ", report to " << report_file;
    std::cout << "\n";
    return 0;
}

int cmd_verify(std::uint64_t seed, const std::string& sizes_spec) {
    VerifyOptions opts;
    opts.seed = seed;
    if (!sizes_spec.empty()) opts.sizes = parse_sizes(sizes_spec);
    const auto start = std::chrono::steady_clock::now();
    auto results = run_verification(opts);
    const auto secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results)
        std::cout << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width) + 2)
                  << r.name << r.detail << "\n";
    std::cout << (all_pass(results) ? "all checks passed" : "CHECKS FAILED") << " ("
              << std::setprecision(2) << std::fixed << secs << " s)\n";
    return all_pass(results) ? 0 : 1;
}

int cmd_eval(const std::string& original_dir, const std::string& compressed_dir,
             const std::string& calib_file, std::uint64_t probe_seed) {
    SequentialModel original = load_model(original_dir);
    SequentialModel compressed = load_model(compressed_dir);
    if (original.depth() != compressed.depth())
        throw ShapeError("eval: models differ in depth");
    CalibrationSet calib = load_calibration(calib_file);
    CalibrationSet probe = generate_calibration(original.input_dim(), calib.inputs.cols,
                                                probe_seed, CalibSource::SyntheticGaussian);

    ordered_json report;
    ordered_json layers = ordered_json::array();
    for (std::size_t i = 0; i < original.depth(); ++i) {
        const auto& lo = original.layers[i];
        const auto& lc = compressed.layers[i];
        if (lo.in_dim() != lc.in_dim() || lo.out_dim() != lc.out_dim())
            throw ShapeError("eval: layer " + std::to_string(i) + " dimensions differ (" +
                             std::to_string(lo.out_dim()) + "x" + std::to_string(lo.in_dim()) +
                             " vs " + std::to_string(lc.out_dim()) + "x" +
                             std::to_string(lc.in_dim()) + ")");
        Matrix wo = lo.is_factored() ? matmul(lo.factored->u_factor, lo.factored->v_factor)
                                     : *lo.dense;
        Matrix wc = lc.is_factored() ? matmul(lc.factored->u_factor, lc.factored->v_factor)
                                     : *lc.dense;
        Matrix x_calib = forward_upto(original, calib.inputs, i);
        Matrix x_probe = forward_upto(original, probe.inputs, i);
        ordered_json rec;
        rec["layer"] = lo.name;
        rec["loss_calib"] = measured_loss(wo, wc, x_calib);
        rec["loss_probe"] = measured_loss(wo, wc, x_probe);
        layers.push_back(std::move(rec));
    }
    report["layers"] = std::move(layers);
    report["output_deviation_calib"] = output_deviation(original, compressed, calib.inputs);
    report["output_deviation_probe"] = output_deviation(original, compressed, probe.inputs);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_compare(std::size_t depth, std::size_t width, const std::string& activation,
                const std::string& ratios_spec, std::size_t trials, std::uint64_t seed,
                std::size_t calib_count, const std::string& csv_file) {
    HarnessConfig config;
    config.depth = depth;
    config.width = width;
    config.activation = activation_from_name(activation);
    config.ratios = parse_ratios(ratios_spec);
    config.base.seed = seed;
    config.base.calib_count = calib_count;
    CompareTable table = compare_methods(config, trials);
    std::cout << compare_text(table);
    if (!csv_file.empty()) {
        std::ofstream out(csv_file);
        out << compare_csv(table);
        std::cout << "csv written to " << csv_file << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-rank compression of layered networks via whitened SVD"};
    app.require_subcommand(1);

    // gen-toy
    std::size_t depth = 3;
    std::string dims_spec = "16,16,16,16";
    std::string activation = "relu";
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t calib_count = 256;
    std::string calib_source = "gaussian";
    auto* gen = app.add_subcommand("gen-toy", "generate a seeded toy model + calibration set");
    gen->add_option("--depth", depth, "number of linear layers")->required();
    gen->add_option("--dims", dims_spec, "comma-separated dims, depth+1 entries")->required();
    gen->add_option("--activation", activation, "identity|relu|tanh");
    gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--calib-count", calib_count, "calibration columns");
    gen->add_option("--calib-source", calib_source, "gaussian|heavytail");

    // compress
    std::string model_dir, calib_file, report_file, dump_whitening;
    double ratio = 0.2, damping = 1e-6, ridge = 0.0;
    std::string method = "svdllm", update = "auto";
    std::size_t compress_calib_count = 0;
    auto* comp = app.add_subcommand("compress", "compress a model against calibration data");
    comp->add_option("--model", model_dir, "model directory")->required();
    comp->add_option("--calib", calib_file, "calibration tensor file")->required();
    comp->add_option("--ratio", ratio, "fraction of parameters to remove, in (0,1)")->required();
    comp->add_option("--method", method, "svd|asvd|svdllm");
    comp->add_option("--update", update, "auto|on|off (auto: on at ratio >= 0.4)");
    comp->add_option("--damping", damping, "relative gram damping");
    comp->add_option("--ridge", ridge, "update ridge");
    comp->add_option("--seed", seed, "seed for the held-out probe");
    comp->add_option("--calib-count", compress_calib_count,
                     "use only the first N calibration columns");
    comp->add_option("--out", out_dir, "output model directory")->required();
    comp->add_option("--report", report_file, "report JSON path");
    comp->add_option("--dump-whitening", dump_whitening,
                     "directory for per-layer whitening factors");

    // verify
    std::string sizes_spec;
    auto* ver = app.add_subcommand("verify", "run the executable invariant battery");
    ver->add_option("--seed", seed, "rng seed");
    ver->add_option("--sizes", sizes_spec, "weight shapes, e.g. 8x16,32x64");

    // eval
    std::string original_dir, compressed_dir;
    std::uint64_t probe_seed = 1;
    auto* ev = app.add_subcommand("eval", "compare a compressed model against its original");
    ev->add_option("--original", original_dir)->required();
    ev->add_option("--compressed", compressed_dir)->required();
    ev->add_option("--calib", calib_file)->required();
    ev->add_option("--probe-seed", probe_seed, "seed for held-out probes");

    // compare
    std::string ratios_spec = "0.2,0.4,0.6";
    std::size_t trials = 1, width = 16;
    std::string csv_file;
    auto* cmp = app.add_subcommand("compare", "A/B method sweep on seeded toy models");
    cmp->add_option("--depth", depth);
    cmp->add_option("--width", width);
    cmp->add_option("--activation", activation, "identity|relu|tanh");
    cmp->add_option("--ratios", ratios_spec, "comma-separated ratios");
    cmp->add_option("--trials", trials);
    cmp->add_option("--seed", seed);
    cmp->add_option("--calib-count", calib_count);
    cmp->add_option("--csv", csv_file, "write the table as CSV");

    try {
        app.parse(argc, argv);
        if (gen->parsed())
            return cmd_gen_toy(depth, dims_spec, activation, seed, out_dir, calib_count,
                               calib_source);
        if (comp->parsed())
            return cmd_compress(model_dir, calib_file, ratio, method, update, damping, ridge,
                                seed, compress_calib_count, out_dir, report_file, dump_whitening);
        if (ver->parsed()) return cmd_verify(seed, sizes_spec);
        if (ev->parsed()) return cmd_eval(original_dir, compressed_dir, calib_file, probe_seed);
        if (cmp->parsed())
            return cmd_compare(depth, width, activation, ratios_spec, trials, seed, calib_count,
                               csv_file);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
