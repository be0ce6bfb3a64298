#pragma once

#include "fitsim/sparse_util.hpp"

namespace fitsim {

struct PencilReport {
    int index_estimate = 0;
    std::vector<int> rank_sequence;  // rank of the leading matrix per deflation stage
    double rank_tol_factor = 100.0;
    bool regular = true;
    int n = 0;
};

/// Kronecker/differential index of the regular pencil (M, K) by a
/// rank-revealing deflation ("shuffle") sequence: rows outside the range of M
/// are algebraic and get differentiated until the leading matrix is regular;
/// the number of passes is the index. The pencil is Ruiz-equilibrated first
/// (a diagonal equivalence, which leaves the index unchanged). Rank tolerance
/// is |.|_2 * max(m,n) * eps * factor.
PencilReport index_probe(Mat M, Mat K, double rank_tol_factor = 100.0);
PencilReport index_probe(const SpMat& M, const SpMat& K, double rank_tol_factor = 100.0);

/// Index-2 sensitivity experiment: integrates dx1/dt = x2, x1 = sin(t) + d(t)
/// with d(t) = 10^-k sin(10^{2k} t) and with d = 0, both by implicit Euler
/// over one perturbation period, and returns max |x2_pert - x2_clean|.
/// Requires dt <= 2*pi*10^(-2k)/40 to resolve the perturbation.
double perturbation_experiment(int k, double dt);

struct DefinitenessSample {
    double lambda;
    bool positive;
    double min_eig_estimate;  // NaN when not computed
};

/// Positive-definiteness of lambda*M + K at the given samples via sparse
/// Cholesky, with a dense smallest-eigenvalue estimate on small systems.
std::vector<DefinitenessSample> pencil_definiteness(const SpMat& M, const SpMat& K,
                                                    const std::vector<double>& lambdas);

}  // namespace fitsim
