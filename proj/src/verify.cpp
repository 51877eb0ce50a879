#include "lowrank/verify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "lowrank/baselines.hpp"
#include "lowrank/calibration.hpp"
#include "lowrank/compress.hpp"
#include "lowrank/update.hpp"

namespace lowrank {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& x : m.data) x = gauss(rng);
    return m;
}

// W' = U diag(masked sigma) V^T S^{-1}, keeping only the listed indices.
Matrix reconstruct_subset(const SvdFactors& f, const std::vector<bool>& keep,
                          const WhiteningTransform* s) {
    std::vector<double> masked(f.sigma.size(), 0.0);
    for (std::size_t i = 0; i < f.sigma.size(); ++i)
        if (keep[i]) masked[i] = f.sigma[i];
    Matrix core = matmul(scale_cols(f.u, masked), transpose(f.v));
    return s ? unwhiten_right(core, *s) : core;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

}  // namespace

CheckResult single_value_exactness_check(const VerifyOptions& options, bool use_whitening) {
    CheckResult r{use_whitening ? "loss-equals-sigma (single value)"
                                : "loss-equals-sigma without whitening (negative control)",
                  true, ""};
    double worst = 0.0;
    for (auto [rows, cols] : options.sizes) {
        for (std::size_t t = 0; t < options.instances; ++t) {
            std::mt19937_64 rng(options.seed * 7919 + rows * 131 + cols * 17 + t);
            Matrix w = random_matrix(rows, cols, rng);
            Matrix x = random_matrix(cols, 4 * cols, rng);
            GramAccumulator acc(cols);
            accumulate(acc, x);
            WhiteningTransform s = whitening_from_gram(acc.gram, 0.0, x.cols);
            SvdFactors f = use_whitening ? svd(whiten_weight(w, s)) : svd(w);
            for (std::size_t i = 0; i < f.sigma.size(); ++i) {
                std::vector<bool> keep(f.sigma.size(), true);
                keep[i] = false;
                Matrix w_approx = reconstruct_subset(f, keep, use_whitening ? &s : nullptr);
                worst = std::max(worst, rel(measured_loss(w, w_approx, x), f.sigma[i]));
            }
        }
    }
    r.pass = worst < 1e-6;
    r.detail = "max |measured - sigma_i| / sigma_i = " + fmt(worst);
    return r;
}

namespace {

CheckResult tail_sum_check(const VerifyOptions& options) {
    CheckResult r{"loss-squared-equals-tail-sum (multi value)", true, ""};
    double worst = 0.0;
    for (auto [rows, cols] : options.sizes) {
        for (std::size_t t = 0; t < options.instances; ++t) {
            std::mt19937_64 rng(options.seed * 7919 + rows * 131 + cols * 17 + t);
            Matrix w = random_matrix(rows, cols, rng);
            Matrix x = random_matrix(cols, 4 * cols, rng);
            GramAccumulator acc(cols);
            accumulate(acc, x);
            WhiteningTransform s = whitening_from_gram(acc.gram, 0.0, x.cols);
            SvdFactors f = svd(whiten_weight(w, s));
            const std::size_t k = f.sigma.size();
            for (std::size_t rank = 1; rank < k; ++rank) {
                std::vector<bool> keep(k, false);
                double tail2 = 0.0;
                for (std::size_t i = 0; i < k; ++i) {
                    keep[i] = i < rank;
                    if (i >= rank) tail2 += f.sigma[i] * f.sigma[i];
                }
                Matrix w_approx = reconstruct_subset(f, keep, &s);
                const double measured = measured_loss(w, w_approx, x);
                worst = std::max(worst, rel(measured * measured, tail2));
            }
        }
    }
    r.pass = worst < 1e-6;
    r.detail = "max relative gap of L^2 vs sum of cut sigma^2 = " + fmt(worst);
    return r;
}

CheckResult subset_optimality_check(const VerifyOptions& options) {
    CheckResult r{"tail subset is loss-minimal (brute force)", true, ""};
    const std::size_t rows = 6, cols = 9;
    for (std::size_t t = 0; t < options.instances; ++t) {
        std::mt19937_64 rng(options.seed * 104729 + t);
        Matrix w = random_matrix(rows, cols, rng);
        Matrix x = random_matrix(cols, 4 * cols, rng);
        GramAccumulator acc(cols);
        accumulate(acc, x);
        WhiteningTransform s = whitening_from_gram(acc.gram, 0.0, x.cols);
        SvdFactors f = svd(whiten_weight(w, s));
        const std::size_t k = f.sigma.size();
        for (std::size_t cut = 1; cut < k; ++cut) {
            double best = -1.0, tail = -1.0;
            for (unsigned mask = 0; mask < (1u << k); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcount(mask)) != cut) continue;
                std::vector<bool> keep(k, true);
                for (std::size_t i = 0; i < k; ++i)
                    if (mask & (1u << i)) keep[i] = false;
                const double loss = measured_loss(w, reconstruct_subset(f, keep, &s), x);
                if (best < 0.0 || loss < best) best = loss;
                bool is_tail = true;
                for (std::size_t i = 0; i < k; ++i)
                    if (keep[i] != (i < k - cut)) is_tail = false;
                if (is_tail) tail = loss;
            }
            if (tail > best * (1.0 + 1e-9)) {
                r.pass = false;
                r.detail = "instance " + std::to_string(t) + " cut " + std::to_string(cut) +
                           ": tail loss " + fmt(tail) + " > best " + fmt(best);
                return r;
            }
        }
    }
    r.detail = "tail truncation minimal over all subsets, " + std::to_string(options.instances) +
               " instances, all cardinalities";
    return r;
}

CheckResult orthogonality_check(const VerifyOptions& options) {
    CheckResult r{"whitened activations orthogonal", true, ""};
    std::mt19937_64 rng(options.seed + 13);
    Matrix x = random_matrix(8, 64, rng);
    GramAccumulator acc(8);
    accumulate(acc, x);
    WhiteningTransform s = whitening_from_gram(acc.gram, 0.0, x.cols);
    const double defect = orthogonality_defect(x, s);
    r.pass = defect < 1e-8;

    // rank-deficient side channel: reported, not asserted
    Matrix one_col = random_matrix(4, 1, rng);
    Matrix deficient = matmul(one_col, transpose(one_col));  // rank-1 gram
    WhiteningTransform sd = whitening_from_gram(deficient, 1e-6, 1);
    r.detail = "defect (eps=0) = " + fmt(defect) + "; damped rank-deficient case used eps = " +
               fmt(sd.damping_used);
    return r;
}

struct UpdateFixture {
    Matrix w;
    Matrix x_prime;
    WhiteningTransform s;
    CompressedLayer cl;
    Matrix d;
};

UpdateFixture make_update_fixture(std::uint64_t seed, double perturbation) {
    std::mt19937_64 rng(seed);
    UpdateFixture fx;
    fx.w = random_matrix(6, 8, rng);
    Matrix x = random_matrix(8, 48, rng);
    GramAccumulator acc(8);
    accumulate(acc, x);
    fx.s = whitening_from_gram(acc.gram, 0.0, x.cols);
    fx.cl = compress_layer(fx.w, fx.s, 3);
    fx.x_prime = x;
    if (perturbation > 0.0) {
        Matrix noise = random_matrix(8, 48, rng);
        for (std::size_t i = 0; i < noise.data.size(); ++i)
            fx.x_prime.data[i] += perturbation * noise.data[i];
    }
    fx.d = build_d_matrix(fx.cl, fx.s, fx.x_prime);
    return fx;
}

// independent least-squares route: column-pivoted QR on D^T
Matrix qr_least_squares_u(const Matrix& w, const Matrix& x_prime, const Matrix& d) {
    using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const EMat> dm(d.data.data(), static_cast<Eigen::Index>(d.rows),
                              static_cast<Eigen::Index>(d.cols));
    Matrix target = matmul(w, x_prime);
    Eigen::Map<const EMat> tm(target.data.data(), static_cast<Eigen::Index>(target.rows),
                              static_cast<Eigen::Index>(target.cols));
    EMat sol = dm.transpose().colPivHouseholderQr().solve(tm.transpose());
    Matrix u(static_cast<std::size_t>(sol.cols()), static_cast<std::size_t>(sol.rows()));
    for (std::size_t i = 0; i < u.rows; ++i)
        for (std::size_t j = 0; j < u.cols; ++j)
            u(i, j) = sol(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    return u;
}

double rel_diff(const Matrix& a, const Matrix& b) {
    Matrix d = a;
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] -= b.data[i];
    return frobenius_norm(d) / std::max(frobenius_norm(b), 1e-300);
}

CheckResult update_oracle_check(const VerifyOptions& options) {
    CheckResult r{"closed-form update matches least-squares oracle", true, ""};
    double worst = 0.0;
    for (std::size_t t = 0; t < options.instances; ++t) {
        UpdateFixture fx = make_update_fixture(options.seed * 31 + t, 0.1);
        UpdateContext ctx{0, fx.x_prime, fx.d, 0.0};
        Matrix u_direct = closed_form_u(fx.w, ctx);
        Matrix u_oracle = qr_least_squares_u(fx.w, fx.x_prime, fx.d);
        worst = std::max(worst, rel_diff(u_direct, u_oracle));
    }
    r.pass = worst < 1e-8;
    r.detail = "max relative difference vs QR oracle = " + fmt(worst);
    return r;
}

CheckResult update_equivalence_check(const VerifyOptions& options) {
    CheckResult r{"direct and expanded closed forms agree", true, ""};
    double worst = 0.0;
    for (std::size_t t = 0; t < options.instances; ++t) {
        UpdateFixture fx = make_update_fixture(options.seed * 37 + t, 0.1);
        UpdateContext ctx{0, fx.x_prime, fx.d, 0.0};
        Matrix u_direct = closed_form_u(fx.w, ctx);
        Matrix u_expanded = closed_form_u_expanded(fx.w, fx.x_prime, fx.s,
                                                   take_cols(fx.cl.factors.v, fx.cl.plan.rank),
                                                   fx.cl.plan.kept_sigma, 0.0);
        worst = std::max(worst, rel_diff(u_expanded, u_direct));
    }
    r.pass = worst < 1e-8;
    r.detail = "max relative difference between formulations = " + fmt(worst);
    return r;
}

CheckResult update_optimality_check(const VerifyOptions& options) {
    CheckResult r{"closed-form update is loss-minimal (perturbation probe)", true, ""};
    UpdateFixture fx = make_update_fixture(options.seed * 41 + 1, 0.1);
    UpdateContext ctx{0, fx.x_prime, fx.d, 0.0};
    Matrix u_star = closed_form_u(fx.w, ctx);
    Matrix target = matmul(fx.w, fx.x_prime);
    auto loss_at = [&](const Matrix& u) {
        Matrix fit = matmul(u, fx.d);
        for (std::size_t i = 0; i < fit.data.size(); ++i) fit.data[i] -= target.data[i];
        return frobenius_norm(fit);
    };
    const double base = loss_at(u_star);
    std::mt19937_64 rng(options.seed + 997);
    for (int k = 0; k < 16; ++k) {
        Matrix dir = random_matrix(u_star.rows, u_star.cols, rng);
        const double scale = 1e-3 / std::max(frobenius_norm(dir), 1e-300);
        Matrix probe = u_star;
        for (std::size_t i = 0; i < probe.data.size(); ++i)
            probe.data[i] += scale * dir.data[i] * frobenius_norm(u_star);
        if (loss_at(probe) <= base) {
            r.pass = false;
            r.detail = "perturbation direction " + std::to_string(k) + " did not increase loss";
            return r;
        }
    }
    r.detail = "16/16 random perturbations at 1e-3 increase the loss (base " + fmt(base) + ")";
    return r;
}

CheckResult first_layer_fixed_point_check(const VerifyOptions& options) {
    CheckResult r{"first-layer update is a fixed point", true, ""};
    UpdateFixture fx = make_update_fixture(options.seed * 43 + 2, 0.0);  // X' = X
    UpdateContext ctx{0, fx.x_prime, fx.d, 0.0};
    Matrix u_new = closed_form_u(fx.w, ctx);
    Matrix u_kept = take_cols(fx.cl.factors.u, fx.cl.plan.rank);
    const double gap = rel_diff(u_new, u_kept);
    r.pass = gap < 1e-8;
    r.detail = "relative change of U on unchanged activations = " + fmt(gap);
    return r;
}

CheckResult update_non_worsening_check(const VerifyOptions& options) {
    CheckResult r{"update never increases per-layer calibration loss", true, ""};
    const std::size_t depth = 3, width = 12;
    std::vector<std::size_t> dims(depth + 1, width);
    SequentialModel model =
        generate_toy_model(depth, dims, Activation::Relu, options.seed + 5);
    CalibrationSet calib =
        generate_calibration(width, 64, options.seed + 6, CalibSource::SyntheticGaussian);

    std::vector<LayerPlan> plans;
    for (std::size_t i = 0; i < depth; ++i) {
        Matrix x = capture_activations(model, calib, i);
        GramAccumulator acc(width);
        accumulate(acc, x);
        WhiteningTransform s = whitening_from_gram(acc.gram, 1e-6, x.cols);
        const std::size_t rank = rank_from_ratio(width, width, 0.5);
        CompressedLayer cl = compress_layer(*model.layers[i].dense, s, rank);
        plans.push_back({std::move(cl), std::move(s)});
    }
    UpdateOutcome updated = update_model(model, plans, calib, 0.0);

    double worst_slack = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        Matrix x_prime = capture_activations(updated.model, calib, i);
        Matrix old_approx =
            matmul(plans[i].compressed.layer.u_factor, plans[i].compressed.layer.v_factor);
        Matrix new_approx = matmul(updated.model.layers[i].factored->u_factor,
                                   updated.model.layers[i].factored->v_factor);
        const double before = measured_loss(*model.layers[i].dense, old_approx, x_prime);
        const double after = measured_loss(*model.layers[i].dense, new_approx, x_prime);
        worst_slack = std::max(worst_slack, after - before);
        if (after > before + 1e-9) {
            r.pass = false;
            r.detail = "layer " + std::to_string(i) + ": loss " + fmt(before) + " -> " +
                       fmt(after);
            return r;
        }
    }
    r.detail = "max (after - before) over layers = " + fmt(worst_slack);
    return r;
}

CheckResult asvd_formula_check(const VerifyOptions& options) {
    CheckResult r{"diagonal-scaling loss formula matches measurement", true, ""};
    double worst = 0.0;
    for (std::size_t t = 0; t < 20; ++t) {
        std::mt19937_64 rng(options.seed * 53 + t);
        Matrix w = random_matrix(5, 7, rng);
        CalibrationSet calib =
            generate_calibration(7, 40, options.seed * 59 + t, CalibSource::SyntheticHeavytail);
        DiagonalScaling scaling = scaling_from_activations(calib.inputs);
        for (std::size_t rank = 1; rank < 5; ++rank) {
            auto [layer, factors] = asvd_compress(w, scaling, rank);
            const double predicted = asvd_predicted_loss(factors, scaling, calib.inputs, rank);
            const double measured =
                measured_loss(w, matmul(layer.u_factor, layer.v_factor), calib.inputs);
            worst = std::max(worst, rel(measured, predicted));
        }
    }
    r.pass = worst < 1e-6;
    r.detail = "max relative gap of predicted vs measured = " + fmt(worst);
    return r;
}

CheckResult asvd_witness_check(const VerifyOptions& options) {
    CheckResult r{"smallest-sigma truncation suboptimal for diagonal scaling", false, ""};
    // a small calibration set makes the sampled channel correlations large,
    // which the diagonal scheme cannot absorb, so witnesses are more common
    for (std::uint64_t t = 0; t < 40000; ++t) {
        std::mt19937_64 rng(options.seed * 61 + t);
        Matrix w = random_matrix(3, 3, rng);
        CalibrationSet calib =
            generate_calibration(3, 4, options.seed * 67 + t, CalibSource::SyntheticHeavytail);
        DiagonalScaling scaling = scaling_from_activations(calib.inputs);
        SvdFactors f = svd(scale_cols(w, scaling.diag));
        std::vector<double> inv(scaling.diag.size());
        for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scaling.diag[i];

        auto loss_dropping = [&](std::size_t drop) {
            std::vector<bool> keep(f.sigma.size(), true);
            keep[drop] = false;
            Matrix w_approx = scale_cols(reconstruct_subset(f, keep, nullptr), inv);
            return measured_loss(w, w_approx, calib.inputs);
        };
        const double loss_smallest = loss_dropping(2);
        const double loss_second = loss_dropping(1);
        if (loss_smallest > loss_second * (1.0 + 1e-9)) {
            // same instance must still be tail-optimal for the whitened route
            GramAccumulator acc(3);
            accumulate(acc, calib.inputs);
            WhiteningTransform s;
            try {
                s = whitening_from_gram(acc.gram, 0.0, calib.inputs.cols);
            } catch (const NumericalError&) {
                continue;  // ill-conditioned draw; keep searching
            }
            SvdFactors fw = svd(whiten_weight(w, s));
            double best = -1.0;
            std::size_t best_idx = 0;
            for (std::size_t i = 0; i < fw.sigma.size(); ++i) {
                std::vector<bool> keep(fw.sigma.size(), true);
                keep[i] = false;
                const double loss = measured_loss(w, reconstruct_subset(fw, keep, &s),
                                                  calib.inputs);
                if (best < 0.0 || loss < best) {
                    best = loss;
                    best_idx = i;
                }
            }
            if (best_idx != fw.sigma.size() - 1) continue;
            r.pass = true;
            r.detail = "witness at seed offset " + std::to_string(t) + ": dropping smallest gives " +
                       fmt(loss_smallest) + " vs " + fmt(loss_second) +
                       " for second-smallest; whitened route stays tail-optimal";
            return r;
        }
    }
    r.detail = "no witness found in 40000 seeded instances";
    return r;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    std::vector<CheckResult> results;
    results.push_back(single_value_exactness_check(options, true));
    results.push_back(tail_sum_check(options));
    results.push_back(subset_optimality_check(options));
    results.push_back(orthogonality_check(options));
    results.push_back(update_oracle_check(options));
    results.push_back(update_equivalence_check(options));
    results.push_back(update_optimality_check(options));
    results.push_back(first_layer_fixed_point_check(options));
    results.push_back(update_non_worsening_check(options));
    results.push_back(asvd_formula_check(options));
    results.push_back(asvd_witness_check(options));
    return results;
}

bool all_pass(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

}  // namespace lowrank
