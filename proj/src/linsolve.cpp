#include "fitsim/linsolve.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "fitsim/errors.hpp"

namespace fitsim {

struct CachedFactor::Impl {
    Eigen::SparseLU<SpMat> lu;
    Vec row_scale, col_scale;
    int n = 0;
};

namespace {

// Ruiz equilibration on a sparse square matrix; returns scaled copy.
SpMat equilibrate(const SpMat& A, Vec& r, Vec& c, int sweeps = 4) {
    const int n = static_cast<int>(A.rows());
    r = Vec::Ones(n);
    c = Vec::Ones(n);
    SpMat B = A;
    for (int s = 0; s < sweeps; ++s) {
        Vec rmax = Vec::Zero(n), cmax = Vec::Zero(n);
        for (int k = 0; k < B.outerSize(); ++k)
            for (SpMat::InnerIterator it(B, k); it; ++it) {
                double v = std::abs(it.value());
                rmax[it.row()] = std::max(rmax[it.row()], v);
                cmax[it.col()] = std::max(cmax[it.col()], v);
            }
        for (int i = 0; i < n; ++i) {
            rmax[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
            cmax[i] = cmax[i] > 0 ? 1.0 / std::sqrt(cmax[i]) : 1.0;
        }
        for (int k = 0; k < B.outerSize(); ++k)
            for (SpMat::InnerIterator it(B, k); it; ++it)
                it.valueRef() *= rmax[it.row()] * cmax[it.col()];
        r = r.cwiseProduct(rmax);
        c = c.cwiseProduct(cmax);
    }
    return B;
}

}  // namespace

CachedFactor::CachedFactor(const SpMat& A) : impl_(std::make_unique<Impl>()) {
    if (A.rows() != A.cols()) fail(ErrorCode::invalid_spec, "factorisation needs a square matrix");
    impl_->n = static_cast<int>(A.rows());
    SpMat B = equilibrate(A, impl_->row_scale, impl_->col_scale);
    B.makeCompressed();
    impl_->lu.compute(B);
    if (impl_->lu.info() != Eigen::Success)
        fail(ErrorCode::singular_system, "sparse LU factorisation failed (singular to tolerance)");
}

CachedFactor::~CachedFactor() = default;
CachedFactor::CachedFactor(CachedFactor&&) noexcept = default;
CachedFactor& CachedFactor::operator=(CachedFactor&&) noexcept = default;

Vec CachedFactor::solve(const Vec& b) const {
    Vec bs = b.cwiseProduct(impl_->row_scale);
    Vec xs = impl_->lu.solve(bs);
    if (impl_->lu.info() != Eigen::Success) fail(ErrorCode::solve_error, "LU back-substitution failed");
    return xs.cwiseProduct(impl_->col_scale);
}

int CachedFactor::size() const { return impl_->n; }

Vec factor_solve(const SpMat& A, const Vec& b) {
    CachedFactor f(A);
    Vec x = f.solve(b);
    double anorm = 0.0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) anorm = std::max(anorm, std::abs(it.value()));
    double resid = (A * x - b).norm();
    if (resid > 1e-10 * (anorm * x.norm() + b.norm()) + 1e-300)
        fail(ErrorCode::singular_system, "direct solve residual above tolerance");
    return x;
}

Vec cg_solve(const SpMat& A, const Vec& b, double tol, int max_iter) {
    const int n = static_cast<int>(A.rows());
    if (max_iter <= 0) max_iter = 20 * n + 200;
    Vec diag = Vec::Ones(n);
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (it.row() == it.col() && it.value() > 0) diag[it.row()] = it.value();

    double bnorm = b.norm();
    if (bnorm == 0.0) return Vec::Zero(n);

    Vec x = Vec::Zero(n);
    Vec r = b;
    Vec z = r.cwiseQuotient(diag);
    Vec p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
        Vec Ap = A * p;
        double pAp = p.dot(Ap);
        if (pAp <= 0) {
            // direction in the numerical null space; for consistent
            // semidefinite systems the current residual should already be small
            if (r.norm() <= tol * bnorm) return x;
            fail(ErrorCode::no_convergence, "CG hit a non-positive curvature direction");
        }
        double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        if (r.norm() <= tol * bnorm) return x;
        z = r.cwiseQuotient(diag);
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    fail(ErrorCode::no_convergence, "CG did not reach the requested tolerance");
}

}  // namespace fitsim
