#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lowrank/errors.hpp"

namespace lowrank {

// Dense row-major matrix of 64-bit floats. The universal carrier for
// weights, activations, whitening factors and SVD factors.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, length rows*cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool all_finite() const;
    std::string shape_str() const;

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
};

// Thin SVD: u (m x k) and v (n x k) with orthonormal columns, sigma
// descending and nonnegative, k = min(m, n).
struct SvdFactors {
    Matrix u;
    std::vector<double> sigma;
    Matrix v;
};

// Lower-triangular Cholesky factor; strictly upper entries exactly zero,
// diagonal strictly positive.
struct CholeskyFactor {
    Matrix l;
    std::size_t dim() const { return l.rows; }
};

enum class Side { Left, Right };

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// Deterministic thin SVD. Sign convention: the first nonzero entry of each
// column of u is positive (v flipped in tandem).
SvdFactors svd(const Matrix& a);

// Throws NumericalError naming the failing pivot index when the input is
// not positive definite.
CholeskyFactor cholesky(const Matrix& a);

// Solve op(L) Y = B (Side::Left) or Y op(L) = B (Side::Right),
// op(L) = L^T when transpose is set.
Matrix solve_triangular(const CholeskyFactor& l, const Matrix& b, Side side, bool transpose);

// Solve (A + ridge*mean(diag(A))*I) Y = B via Cholesky. A symmetric PSD.
Matrix solve_regularized(const Matrix& a, const Matrix& b, double ridge);

// Row/column scaling by a diagonal, and column truncation helpers used by
// the factorization code.
Matrix scale_rows(const Matrix& a, const std::vector<double>& d);
Matrix scale_cols(const Matrix& a, const std::vector<double>& d);
Matrix take_cols(const Matrix& a, std::size_t k);

double mean_diag(const Matrix& a);

}  // namespace lowrank
