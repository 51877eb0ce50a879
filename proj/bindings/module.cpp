#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lowrank/baselines.hpp"
#include "lowrank/io.hpp"
#include "lowrank/pipeline.hpp"
#include "lowrank/update.hpp"
#include "lowrank/verify.hpp"

namespace py = pybind11;
using namespace lowrank;

namespace {

Matrix from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw ShapeError("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::memcpy(m.data.data(), arr.data(), m.data.size() * sizeof(double));
    return m;
}

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::memcpy(arr.mutable_data(), m.data.data(), m.data.size() * sizeof(double));
    return arr;
}

using NpMatrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

CalibSource source_from_name(const std::string& name) {
    if (name == "gaussian") return CalibSource::SyntheticGaussian;
    if (name == "heavytail") return CalibSource::SyntheticHeavytail;
    throw FormatError("unknown calibration source '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_lowrank, m) {
    m.doc() = "whitened-SVD low-rank compression of linear layers";

    py::register_exception<NumericalError>(m, "NumericalError");
    py::register_exception<ShapeError>(m, "ShapeError");
    py::register_exception<FormatError>(m, "FormatError");

    m.def("matmul", [](const NpMatrix& a, const NpMatrix& b) {
        return to_numpy(matmul(from_numpy(a), from_numpy(b)));
    });
    m.def("frobenius_norm",
          [](const NpMatrix& a) { return frobenius_norm(from_numpy(a)); });
    m.def("svd", [](const NpMatrix& a) {
        SvdFactors f = svd(from_numpy(a));
        return py::make_tuple(to_numpy(f.u), f.sigma, to_numpy(f.v));
    });
    m.def("cholesky",
          [](const NpMatrix& a) { return to_numpy(cholesky(from_numpy(a)).l); });

    m.def(
        "whitening_from_gram",
        [](const NpMatrix& gram, double damping_rel) {
            WhiteningTransform s = whitening_from_gram(from_numpy(gram), damping_rel);
            return py::make_tuple(to_numpy(s.factor.l), s.damping_used);
        },
        py::arg("gram"), py::arg("damping_rel") = 1e-6);
    m.def("orthogonality_defect", [](const NpMatrix& x, const NpMatrix& s_lower) {
        WhiteningTransform s{CholeskyFactor{from_numpy(s_lower)}, 0.0, 0};
        return orthogonality_defect(from_numpy(x), s);
    });

    m.def("rank_from_ratio", [](std::size_t out_dim, std::size_t in_dim, double ratio) {
        return rank_from_ratio(out_dim, in_dim, ratio);
    });

    m.def(
        "compress_layer",
        [](const NpMatrix& w, const NpMatrix& gram, std::size_t rank, double damping_rel) {
            Matrix wm = from_numpy(w);
            WhiteningTransform s = whitening_from_gram(from_numpy(gram), damping_rel);
            CompressedLayer cl = compress_layer(wm, s, rank);
            py::dict out;
            out["u_factor"] = to_numpy(cl.layer.u_factor);
            out["v_factor"] = to_numpy(cl.layer.v_factor);
            out["sigma"] = cl.factors.sigma;
            out["kept_sigma"] = cl.plan.kept_sigma;
            out["cut_sigma"] = cl.plan.cut_sigma;
            out["predicted_loss"] = cl.plan.predicted_loss;
            out["epsilon_used"] = s.damping_used;
            return out;
        },
        py::arg("w"), py::arg("gram"), py::arg("rank"), py::arg("damping_rel") = 1e-6);

    m.def("measured_loss", [](const NpMatrix& w, const NpMatrix& w_approx, const NpMatrix& x) {
        return measured_loss(from_numpy(w), from_numpy(w_approx), from_numpy(x));
    });

    m.def("vanilla_svd_compress", [](const NpMatrix& w, std::size_t rank) {
        FactoredLayer fl = vanilla_svd_compress(from_numpy(w), rank);
        return py::make_tuple(to_numpy(fl.u_factor), to_numpy(fl.v_factor));
    });
    m.def("asvd_compress", [](const NpMatrix& w, const NpMatrix& x, std::size_t rank) {
        auto [fl, factors] = asvd_compress(from_numpy(w),
                                           scaling_from_activations(from_numpy(x)), rank);
        return py::make_tuple(to_numpy(fl.u_factor), to_numpy(fl.v_factor));
    });

    m.def(
        "closed_form_u",
        [](const NpMatrix& w, const NpMatrix& x_prime, const NpMatrix& d, double ridge) {
            UpdateContext ctx{0, from_numpy(x_prime), from_numpy(d), ridge};
            return to_numpy(closed_form_u(from_numpy(w), ctx));
        },
        py::arg("w"), py::arg("x_prime"), py::arg("d"), py::arg("ridge") = 0.0);

    m.def(
        "generate_calibration",
        [](std::size_t dim, std::size_t count, std::uint64_t seed, const std::string& source) {
            return to_numpy(
                generate_calibration(dim, count, seed, source_from_name(source)).inputs);
        },
        py::arg("dim"), py::arg("count"), py::arg("seed") = 0, py::arg("source") = "gaussian");

    m.def(
        "generate_toy_weights",
        [](std::size_t depth, const std::vector<std::size_t>& dims, const std::string& activation,
           std::uint64_t seed) {
            SequentialModel model =
                generate_toy_model(depth, dims, activation_from_name(activation), seed);
            py::list weights;
            for (const auto& layer : model.layers) weights.append(to_numpy(*layer.dense));
            return weights;
        },
        py::arg("depth"), py::arg("dims"), py::arg("activation") = "relu", py::arg("seed") = 0);

    m.def("write_tensor", [](const std::string& path, const NpMatrix& a) {
        write_tensor(path, from_numpy(a));
    });
    m.def("read_tensor", [](const std::string& path) { return to_numpy(read_tensor(path)); });

    m.def(
        "run_verification",
        [](std::uint64_t seed) {
            VerifyOptions opts;
            opts.seed = seed;
            py::list out;
            for (const auto& r : run_verification(opts))
                out.append(py::make_tuple(r.name, r.pass, r.detail));
            return out;
        },
        py::arg("seed") = 0);
}
