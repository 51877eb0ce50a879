#pragma once

#include <random>

#include "lowrank/matrix.hpp"

namespace lowrank::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& x : m.data) x = gauss(rng);
    return m;
}

inline Matrix random_spd(std::size_t n, std::uint64_t seed) {
    Matrix b = random_matrix(n, n, seed);
    Matrix a = matmul(transpose(b), b);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    return a;
}

inline double rel_err(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

inline double rel_frob_diff(const Matrix& a, const Matrix& b) {
    Matrix d = a;
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] -= b.data[i];
    return frobenius_norm(d) / std::max(frobenius_norm(b), 1e-300);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace lowrank::testing
