#include <doctest.h>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "lowrank/update.hpp"

using namespace lowrank;
using namespace lowrank::testing;

namespace {

struct Fixture {
    Matrix w;
    Matrix x;
    WhiteningTransform s;
    CompressedLayer cl;
};

Fixture make_fixture(std::uint64_t seed, std::size_t rank = 3) {
    Fixture fx;
    fx.w = random_matrix(6, 8, seed);
    fx.x = random_matrix(8, 48, seed + 1);
    GramAccumulator acc(8);
    accumulate(acc, fx.x);
    fx.s = whitening_from_gram(acc.gram, 0.0, 48);
    fx.cl = compress_layer(fx.w, fx.s, rank);
    return fx;
}

// independent oracle: least squares by column-pivoted QR on D^T
Matrix lstsq_oracle(const Matrix& w, const Matrix& x_prime, const Matrix& d) {
    using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Matrix target = matmul(w, x_prime);
    Eigen::Map<const EMat> dm(d.data.data(), static_cast<Eigen::Index>(d.rows),
                              static_cast<Eigen::Index>(d.cols));
    Eigen::Map<const EMat> tm(target.data.data(), static_cast<Eigen::Index>(target.rows),
                              static_cast<Eigen::Index>(target.cols));
    EMat sol = dm.transpose().colPivHouseholderQr().solve(tm.transpose()).transpose();
    Matrix out(static_cast<std::size_t>(sol.rows()), static_cast<std::size_t>(sol.cols()));
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j)
            out(i, j) = sol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

double fit_loss(const Matrix& w, const Matrix& x_prime, const Matrix& u, const Matrix& d) {
    Matrix fit = matmul(u, d);
    Matrix target = matmul(w, x_prime);
    for (std::size_t i = 0; i < fit.data.size(); ++i) fit.data[i] -= target.data[i];
    return frobenius_norm(fit);
}

}  // namespace

TEST_CASE("unchanged upstream activations make the update a no-op") {
    Fixture fx = make_fixture(81);
    Matrix d = build_d_matrix(fx.cl, fx.s, fx.x);
    UpdateContext ctx{0, fx.x, d, 0.0};
    Matrix u_new = closed_form_u(fx.w, ctx);
    CHECK(rel_frob_diff(u_new, take_cols(fx.cl.factors.u, 3)) < 1e-8);
}

TEST_CASE("identity design matrix returns the target directly") {
    Matrix a = random_matrix(4, 4, 82);
    UpdateContext ctx{0, Matrix::identity(4), Matrix::identity(4), 0.0};
    // W X' = A with X' = I, W = A
    CHECK(rel_frob_diff(closed_form_u(a, ctx), a) < 1e-12);
}

TEST_CASE("closed form matches the independent least-squares oracle") {
    for (std::uint64_t seed : {83u, 97u, 111u}) {
        Fixture fx = make_fixture(seed);
        Matrix x_prime = fx.x;
        Matrix noise = random_matrix(8, 48, seed + 5);
        for (std::size_t i = 0; i < x_prime.data.size(); ++i)
            x_prime.data[i] += 0.1 * noise.data[i];
        Matrix d = build_d_matrix(fx.cl, fx.s, x_prime);
        UpdateContext ctx{0, x_prime, d, 0.0};
        Matrix u_new = closed_form_u(fx.w, ctx);
        CHECK(rel_frob_diff(u_new, lstsq_oracle(fx.w, x_prime, d)) < 1e-8);

        // loss at U' never exceeds loss at the untouched U for the same D
        Matrix u_old = take_cols(fx.cl.factors.u, 3);
        CHECK(fit_loss(fx.w, x_prime, u_new, d) <=
              fit_loss(fx.w, x_prime, u_old, d) + 1e-12);
    }
}

TEST_CASE("direct and expanded formulations agree") {
    Fixture fx = make_fixture(89);
    Matrix x_prime = fx.x;
    Matrix noise = random_matrix(8, 48, 90);
    for (std::size_t i = 0; i < x_prime.data.size(); ++i) x_prime.data[i] += 0.1 * noise.data[i];

    Matrix d = build_d_matrix(fx.cl, fx.s, x_prime);
    UpdateContext ctx{0, x_prime, d, 0.0};
    Matrix u_direct = closed_form_u(fx.w, ctx);
    Matrix u_expanded = closed_form_u_expanded(fx.w, x_prime, fx.s, take_cols(fx.cl.factors.v, 3),
                                               fx.cl.plan.kept_sigma, 0.0);
    CHECK(rel_frob_diff(u_expanded, u_direct) < 1e-8);

    // identity setup: both give the kept U back
    Matrix d0 = build_d_matrix(fx.cl, fx.s, fx.x);
    UpdateContext ctx0{0, fx.x, d0, 0.0};
    CHECK(rel_frob_diff(closed_form_u(fx.w, ctx0),
                        closed_form_u_expanded(fx.w, fx.x, fx.s, take_cols(fx.cl.factors.v, 3),
                                               fx.cl.plan.kept_sigma, 0.0)) < 1e-10);
}

TEST_CASE("rank-deficient activations agree under a small ridge") {
    Fixture fx = make_fixture(91);
    // two distinct columns only: D D^T of rank <= 2 < 3
    Matrix x_prime(8, 48);
    Matrix cols = random_matrix(8, 2, 92);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 48; ++j) x_prime(i, j) = cols(i, j % 2);
    Matrix d = build_d_matrix(fx.cl, fx.s, x_prime);

    // all-zero activations give D = 0, so the ridge-free solve must fail
    Matrix x_zero(8, 48);
    Matrix d_zero = build_d_matrix(fx.cl, fx.s, x_zero);
    UpdateContext exact{0, x_zero, d_zero, 0.0};
    CHECK_THROWS_WITH_AS(closed_form_u(fx.w, exact), doctest::Contains("ridge"), NumericalError);

    UpdateContext damped{0, x_prime, d, 1e-8};
    Matrix u_direct = closed_form_u(fx.w, damped);
    Matrix u_expanded = closed_form_u_expanded(fx.w, x_prime, fx.s, take_cols(fx.cl.factors.v, 3),
                                               fx.cl.plan.kept_sigma, 1e-8);
    CHECK(rel_frob_diff(u_expanded, u_direct) < 1e-6);
}

TEST_CASE("sequential model update never worsens per-layer loss") {
    const std::size_t depth = 3, width = 10;
    auto model = generate_toy_model(depth, {width, width, width, width}, Activation::Relu, 93);
    auto calib = generate_calibration(width, 50, 94, CalibSource::SyntheticGaussian);

    std::vector<LayerPlan> plans;
    for (std::size_t i = 0; i < depth; ++i) {
        Matrix x = capture_activations(model, calib, i);
        GramAccumulator acc(width);
        accumulate(acc, x);
        WhiteningTransform s = whitening_from_gram(acc.gram, 1e-6, 50);
        plans.push_back(
            {compress_layer(*model.layers[i].dense, s, rank_from_ratio(width, width, 0.4)),
             std::move(s)});
    }
    UpdateOutcome out = update_model(model, plans, calib, 0.0);

    for (std::size_t i = 0; i < depth; ++i) {
        Matrix x_prime = capture_activations(out.model, calib, i);
        Matrix old_w = matmul(plans[i].compressed.layer.u_factor,
                              plans[i].compressed.layer.v_factor);
        Matrix new_w = matmul(out.model.layers[i].factored->u_factor,
                              out.model.layers[i].factored->v_factor);
        const double before = measured_loss(*model.layers[i].dense, old_w, x_prime);
        const double after = measured_loss(*model.layers[i].dense, new_w, x_prime);
        CHECK(after <= before + 1e-9);
    }

    // layer 0 sees unchanged inputs: fixed point
    CHECK(rel_frob_diff(out.model.layers[0].factored->u_factor,
                        plans[0].compressed.layer.u_factor) < 1e-8);

    // determinism
    UpdateOutcome again = update_model(model, plans, calib, 0.0);
    for (std::size_t i = 0; i < depth; ++i)
        CHECK(again.model.layers[i].factored->u_factor.data ==
              out.model.layers[i].factored->u_factor.data);
}

TEST_CASE("depth-1 update is a no-op") {
    auto model = generate_toy_model(1, {6, 6}, Activation::Relu, 95);
    auto calib = generate_calibration(6, 30, 96, CalibSource::SyntheticGaussian);
    Matrix x = calib.inputs;
    GramAccumulator acc(6);
    accumulate(acc, x);
    WhiteningTransform s = whitening_from_gram(acc.gram, 0.0, 30);
    std::vector<LayerPlan> plans;
    plans.push_back({compress_layer(*model.layers[0].dense, s, 3), std::move(s)});
    UpdateOutcome out = update_model(model, plans, calib, 0.0);
    CHECK(rel_frob_diff(out.model.layers[0].factored->u_factor,
                        plans[0].compressed.layer.u_factor) < 1e-8);
}
