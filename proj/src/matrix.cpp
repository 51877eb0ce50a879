#include "lowrank/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace lowrank {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

namespace {

ECMap as_eigen(const Matrix& m) {
    return ECMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                 static_cast<Eigen::Index>(m.cols));
}

EMap as_eigen(Matrix& m) {
    return EMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                static_cast<Eigen::Index>(m.cols));
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << a.shape_str() << " and " << b.shape_str();
    throw ShapeError(os.str());
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) {
        std::ostringstream os;
        os << "Matrix: data length " << data.size() << " does not match shape " << shape_str();
        throw ShapeError(os.str());
    }
}

bool Matrix::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) shape_fail("matmul", a, b);
    Matrix out(a.rows, b.cols);
    as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    as_eigen(out) = as_eigen(a).transpose();
    return out;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.data) s += x * x;
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data) m = std::max(m, std::abs(x));
    return m;
}

SvdFactors svd(const Matrix& a) {
    if (!a.all_finite())
        throw NumericalError("svd: non-finite entries in " + a.shape_str() + " input");
    Eigen::JacobiSVD<EMat> dec(as_eigen(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto k = std::min(a.rows, a.cols);
    SvdFactors f;
    f.u = Matrix(a.rows, k);
    f.v = Matrix(a.cols, k);
    f.sigma.assign(dec.singularValues().data(), dec.singularValues().data() + k);
    as_eigen(f.u) = dec.matrixU();
    as_eigen(f.v) = dec.matrixV();
    if (!f.u.all_finite() || !f.v.all_finite())
        throw NumericalError("svd: decomposition failed on " + a.shape_str() + " input");
    // pin signs: first nonzero entry of each u column positive
    for (std::size_t j = 0; j < k; ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < f.u.rows; ++i) {
            if (f.u(i, j) != 0.0) {
                lead = f.u(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < f.u.rows; ++i) f.u(i, j) = -f.u(i, j);
            for (std::size_t i = 0; i < f.v.rows; ++i) f.v(i, j) = -f.v(i, j);
        }
    }
    return f;
}

CholeskyFactor cholesky(const Matrix& a) {
    if (a.rows != a.cols)
        throw ShapeError("cholesky: input " + a.shape_str() + " is not square");
    const std::size_t n = a.rows;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            std::ostringstream os;
            os << "cholesky: non-positive-definite pivot at index " << j << " (value " << d << ")";
            throw NumericalError(os.str());
        }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return CholeskyFactor{std::move(l)};
}

Matrix solve_triangular(const CholeskyFactor& l, const Matrix& b, Side side, bool transpose) {
    const std::size_t n = l.dim();
    for (std::size_t i = 0; i < n; ++i) {
        if (l.l(i, i) == 0.0)
            throw NumericalError("solve_triangular: zero diagonal at index " + std::to_string(i));
    }
    if (side == Side::Left ? (b.rows != n) : (b.cols != n))
        shape_fail("solve_triangular", l.l, b);
    Matrix out(b.rows, b.cols);
    auto L = as_eigen(l.l);
    auto lower = L.triangularView<Eigen::Lower>();
    auto upper = L.transpose().triangularView<Eigen::Upper>();
    if (side == Side::Left) {
        if (transpose)
            as_eigen(out) = upper.solve(as_eigen(b));
        else
            as_eigen(out) = lower.solve(as_eigen(b));
    } else {
        // Y op(L) = B  <=>  op(L)^T Y^T = B^T
        if (transpose)
            as_eigen(out) = lower.solve(as_eigen(b).transpose()).transpose();
        else
            as_eigen(out) = upper.solve(as_eigen(b).transpose()).transpose();
    }
    return out;
}

Matrix solve_regularized(const Matrix& a, const Matrix& b, double ridge) {
    if (a.rows != a.cols || a.rows != b.rows) shape_fail("solve_regularized", a, b);
    Matrix damped = a;
    if (ridge > 0.0) {
        const double eps = ridge * mean_diag(a);
        for (std::size_t i = 0; i < a.rows; ++i) damped(i, i) += eps;
    }
    CholeskyFactor l;
    try {
        l = cholesky(damped);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("solve_regularized: ") + e.what());
    }
    Matrix y = solve_triangular(l, b, Side::Left, false);
    return solve_triangular(l, y, Side::Left, true);
}

Matrix scale_rows(const Matrix& a, const std::vector<double>& d) {
    if (d.size() != a.rows)
        throw ShapeError("scale_rows: diagonal length " + std::to_string(d.size()) +
                         " does not match " + a.shape_str());
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(i, j) *= d[i];
    return out;
}

Matrix scale_cols(const Matrix& a, const std::vector<double>& d) {
    if (d.size() != a.cols)
        throw ShapeError("scale_cols: diagonal length " + std::to_string(d.size()) +
                         " does not match " + a.shape_str());
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(i, j) *= d[j];
    return out;
}

Matrix take_cols(const Matrix& a, std::size_t k) {
    if (k > a.cols)
        throw ShapeError("take_cols: k=" + std::to_string(k) + " exceeds " + a.shape_str());
    Matrix out(a.rows, k);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < k; ++j) out(i, j) = a(i, j);
    return out;
}

double mean_diag(const Matrix& a) {
    if (a.rows == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(a.rows, a.cols); ++i) s += a(i, i);
    return s / static_cast<double>(std::min(a.rows, a.cols));
}

}  // namespace lowrank
