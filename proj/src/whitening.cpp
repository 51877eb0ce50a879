#include "lowrank/whitening.hpp"

#include <cmath>
#include <sstream>

namespace lowrank {

WhiteningTransform whitening_from_gram(const Matrix& gram, double damping_rel,
                                       std::size_t source_columns) {
    if (gram.rows != gram.cols)
        throw ShapeError("whitening_from_gram: gram " + gram.shape_str() + " is not square");

    try {
        return WhiteningTransform{cholesky(gram), 0.0, source_columns};
    } catch (const NumericalError&) {
        if (damping_rel <= 0.0) throw;
    }

    const double base = damping_rel * mean_diag(gram);
    double eps = base;
    for (int k = 0; k <= 8; ++k, eps *= 10.0) {
        Matrix damped = gram;
        for (std::size_t i = 0; i < gram.rows; ++i) damped(i, i) += eps;
        try {
            return WhiteningTransform{cholesky(damped), eps, source_columns};
        } catch (const NumericalError&) {
            // escalate
        }
    }
    std::ostringstream os;
    os << "whitening_from_gram: gram " << gram.shape_str()
       << " not positive definite after 8 damping escalations (final eps " << eps / 10.0 << ")";
    throw NumericalError(os.str());
}

Matrix whiten_weight(const Matrix& w, const WhiteningTransform& s) {
    if (w.cols != s.dim())
        throw ShapeError("whiten_weight: weight " + w.shape_str() + " vs whitening " +
                         s.factor.l.shape_str());
    // S is lower-triangular; a plain product suffices and stays deterministic.
    return matmul(w, s.factor.l);
}

Matrix unwhiten_right(const Matrix& m, const WhiteningTransform& s) {
    return solve_triangular(s.factor, m, Side::Right, false);
}

double orthogonality_defect(const Matrix& x, const WhiteningTransform& s) {
    if (x.rows != s.dim())
        throw ShapeError("orthogonality_defect: activation " + x.shape_str() + " vs whitening " +
                         s.factor.l.shape_str());
    Matrix y = solve_triangular(s.factor, x, Side::Left, false);
    Matrix g = matmul(y, transpose(y));
    double defect = 0.0;
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j)
            defect = std::max(defect, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return defect;
}

}  // namespace lowrank
