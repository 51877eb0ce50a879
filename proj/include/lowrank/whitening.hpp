#pragma once

#include "lowrank/matrix.hpp"

namespace lowrank {

// Lower-triangular whitening factor S with S*S^T = gram + eps*I.
// S^{-1} is never formed; callers go through triangular solves.
struct WhiteningTransform {
    CholeskyFactor factor;
    double damping_used = 0.0;      // the eps actually applied
    std::size_t source_columns = 0;  // calibration columns behind the gram

    std::size_t dim() const { return factor.dim(); }
};

// Cholesky of the (possibly damped) gram. On a definiteness failure retries
// with eps = damping_rel * mean(diag(gram)) * 10^k, k = 0..8, and records
// the eps that succeeded.
WhiteningTransform whitening_from_gram(const Matrix& gram, double damping_rel,
                                       std::size_t source_columns = 0);

// W * S by triangular multiplication.
Matrix whiten_weight(const Matrix& w, const WhiteningTransform& s);

// M * S^{-1} via a right triangular solve.
Matrix unwhiten_right(const Matrix& m, const WhiteningTransform& s);

// || (S^{-1} X)(S^{-1} X)^T - I ||_max
double orthogonality_defect(const Matrix& x, const WhiteningTransform& s);

}  // namespace lowrank
