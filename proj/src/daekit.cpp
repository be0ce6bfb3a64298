#include "fitsim/daekit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>

#include "fitsim/constants.hpp"
#include "fitsim/dae.hpp"
#include "fitsim/errors.hpp"
#include "fitsim/timeint.hpp"

namespace fitsim {

namespace {

int svd_rank(const Eigen::BDCSVD<Mat>& svd, int m, int n, double factor) {
    if (svd.singularValues().size() == 0) return 0;
    double smax = svd.singularValues()[0];
    double tol = smax * std::max(m, n) * std::numeric_limits<double>::epsilon() * factor;
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > tol) ++r;
    return r;
}

bool full_rank(const Mat& A, double factor) {
    Eigen::BDCSVD<Mat> svd(A);
    return svd_rank(svd, static_cast<int>(A.rows()), static_cast<int>(A.cols()), factor) ==
           A.rows();
}

}  // namespace

PencilReport index_probe(Mat M, Mat K, double rank_tol_factor) {
    const int n = static_cast<int>(M.rows());
    if (M.cols() != n || K.rows() != n || K.cols() != n)
        fail(ErrorCode::invalid_spec, "index probe needs a square pencil");
    if (n > 3000) fail(ErrorCode::size_limit, "dense index probe limited to n <= 3000");

    PencilReport report;
    report.n = n;
    report.rank_tol_factor = rank_tol_factor;
    if (n == 0) return report;

    equilibrate_pencil(M, K);

    // regularity: lambda M + K must be regular for some lambda
    bool regular = false;
    for (double lambda : {0.61803398875, 1.0, 1.73205080757, 0.31830988618}) {
        if (full_rank(lambda * M + K, rank_tol_factor)) {
            regular = true;
            break;
        }
    }
    if (!regular) {
        report.regular = false;
        fail(ErrorCode::irregular_pencil, "lambda*M + K is singular at every probe value");
    }

    for (int pass = 0; pass <= n + 1; ++pass) {
        Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeFullU);
        int r = svd_rank(svd, n, n, rank_tol_factor);
        report.rank_sequence.push_back(r);
        if (r == n) {
            report.index_estimate = pass;
            return report;
        }
        // rotate so the bottom n-r rows of M vanish, then differentiate them:
        // their K-part becomes the new M-part with a zero K-row.
        Mat Mu = svd.matrixU().transpose() * M;
        Mat Ku = svd.matrixU().transpose() * K;
        Mat M_next(n, n), K_next(n, n);
        M_next.topRows(r) = Mu.topRows(r);
        M_next.bottomRows(n - r) = Ku.bottomRows(n - r);
        K_next.topRows(r) = Ku.topRows(r);
        K_next.bottomRows(n - r).setZero();
        M = M_next;
        K = K_next;
        equilibrate_pencil(M, K, 2);
    }
    fail(ErrorCode::irregular_pencil, "deflation did not terminate; pencil is not regular");
}

PencilReport index_probe(const SpMat& M, const SpMat& K, double rank_tol_factor) {
    if (M.rows() > 3000) fail(ErrorCode::size_limit, "dense index probe limited to n <= 3000");
    return index_probe(Mat(M), Mat(K), rank_tol_factor);
}

double perturbation_experiment(int k, double dt) {
    if (k < 1) fail(ErrorCode::invalid_spec, "perturbation order k must be >= 1");
    const double omega = std::pow(10.0, 2 * k);
    const double period = 2.0 * kPi / omega;
    if (dt > period / 40.0 * (1.0 + 1e-12))
        fail(ErrorCode::resolution_error,
             "time step does not resolve the perturbation; need dt <= 2*pi*10^(-2k)/40");

    DaeSystem sys;
    sys.tag = "index2-toy";
    BlockBuilder M(2, 2), K(2, 2);
    M.add_identity(0, 0, 1);
    K.add_identity(0, 1, 1, -1.0);
    K.add_identity(1, 0, 1);
    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(2);
    sys.blocks = {{"x1", 0, 1}, {"x2", 1, 1}};

    Signal base;
    base.kind = Signal::Kind::sin;
    base.amplitude = 1.0;
    base.frequency = 1.0 / (2.0 * kPi);
    RhsTerm tb;
    tb.pattern = Vec::Zero(2);
    tb.pattern[1] = 1.0;
    tb.signal = base;
    sys.rhs_terms.push_back(tb);

    TimeGrid tg{0.0, period, dt, };
    EulerOptions opts;
    opts.extractors = {{"x2", [](int, double, const Vec& x) { return x[1]; }}};
    TimeSeries clean = implicit_euler(sys, tg, opts);

    Signal pert;
    pert.kind = Signal::Kind::sin;
    pert.amplitude = std::pow(10.0, -k);
    pert.frequency = omega / (2.0 * kPi);
    RhsTerm tp;
    tp.pattern = Vec::Zero(2);
    tp.pattern[1] = 1.0;
    tp.signal = pert;
    sys.rhs_terms.push_back(tp);
    TimeSeries perturbed = implicit_euler(sys, tg, opts);

    double amp = 0.0;
    for (size_t i = 0; i < clean.t.size(); ++i)
        amp = std::max(amp, std::abs(perturbed.scalars.at("x2")[i] - clean.scalars.at("x2")[i]));
    return amp;
}

std::vector<DefinitenessSample> pencil_definiteness(const SpMat& M, const SpMat& K,
                                                    const std::vector<double>& lambdas) {
    std::vector<DefinitenessSample> out;
    for (double lambda : lambdas) {
        SpMat A = SpMat(lambda * M + K);
        DefinitenessSample s;
        s.lambda = lambda;
        s.min_eig_estimate = std::numeric_limits<double>::quiet_NaN();
        Eigen::SimplicialLLT<SpMat> llt(A);
        s.positive = llt.info() == Eigen::Success;
        if (A.rows() <= 2000) {
            Mat Ad = 0.5 * (Mat(A) + Mat(A).transpose());
            Eigen::SelfAdjointEigenSolver<Mat> eig(Ad, Eigen::EigenvaluesOnly);
            s.min_eig_estimate = eig.eigenvalues().minCoeff();
            s.positive = s.min_eig_estimate > 0;
        } else if (s.positive) {
            // inverse power iteration for a smallest-eigenvalue estimate
            Vec v = Vec::Ones(A.rows()).normalized();
            for (int i = 0; i < 12; ++i) {
                Vec w = llt.solve(v);
                double nw = w.norm();
                if (nw == 0) break;
                v = w / nw;
            }
            s.min_eig_estimate = v.dot(A * v);
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace fitsim
