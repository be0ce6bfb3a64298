#pragma once

#include <memory>

#include "fitsim/sparse_util.hpp"

namespace fitsim {

/// Direct sparse factorisation, reusable across right-hand sides. The matrix
/// is row/column equilibrated before LU so that pencils with mixed physical
/// units factor reliably.
class CachedFactor {
public:
    explicit CachedFactor(const SpMat& A);
    ~CachedFactor();
    CachedFactor(CachedFactor&&) noexcept;
    CachedFactor& operator=(CachedFactor&&) noexcept;

    Vec solve(const Vec& b) const;
    int size() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot direct solve with a residual guard:
/// |Ax - b| <= 1e-10 (|A| |x| + |b|).
Vec factor_solve(const SpMat& A, const Vec& b);

/// Conjugate gradients for symmetric positive (semi)definite systems with a
/// Jacobi preconditioner. For a consistent singular system the iterates stay
/// in the range and converge to the minimum-norm-type solution.
Vec cg_solve(const SpMat& A, const Vec& b, double tol = 1e-12, int max_iter = 0);

}  // namespace fitsim
