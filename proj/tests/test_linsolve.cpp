#include <doctest.h>

#include <random>

#include "fitsim/errors.hpp"
#include "fitsim/linsolve.hpp"

using namespace fitsim;

namespace {

SpMat random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Mat B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = nd(rng);
    Mat A = B.transpose() * B + n * Mat::Identity(n, n);
    return A.sparseView();
}

}  // namespace

TEST_CASE("identity and scalar systems") {
    SpMat I(3, 3);
    I.setIdentity();
    Vec b(3);
    b << 1, -2, 3;
    CHECK((factor_solve(I, b) - b).norm() == 0.0);

    SpMat A(1, 1);
    A.insert(0, 0) = 2.0;
    Vec r(1);
    r << 4.0;
    CHECK(factor_solve(A, r)[0] == doctest::Approx(2.0));
}

TEST_CASE("random SPD system agrees with a dense elimination oracle") {
    std::mt19937_64 rng(5);
    SpMat A = random_spd(50, rng);
    std::normal_distribution<double> nd;
    Vec b(50);
    for (int i = 0; i < 50; ++i) b[i] = nd(rng);
    Vec x = factor_solve(A, b);
    // dense Gaussian elimination oracle
    Vec x_ref = Mat(A).fullPivLu().solve(b);
    CHECK((x - x_ref).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + x_ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("singular matrix raises SingularSystem") {
    SpMat A(2, 2);
    A.insert(0, 0) = 1.0;
    A.insert(0, 1) = 1.0;
    A.insert(1, 0) = 1.0;
    A.insert(1, 1) = 1.0;
    Vec b(2);
    b << 1, 2;
    CHECK_THROWS_AS(factor_solve(A, b), Error);
}

TEST_CASE("cg: zero rhs, diagonal system, SPD cross-check") {
    std::mt19937_64 rng(9);
    SpMat A = random_spd(40, rng);
    Vec zero = Vec::Zero(40);
    CHECK(cg_solve(A, zero).norm() == 0.0);

    SpMat D(5, 5);
    for (int i = 0; i < 5; ++i) D.insert(i, i) = (i + 1.0);
    Vec b(5);
    b << 1, 2, 3, 4, 5;
    Vec x = cg_solve(D, b, 1e-14);
    for (int i = 0; i < 5; ++i) CHECK(x[i] == doctest::Approx(1.0).epsilon(1e-12));

    std::normal_distribution<double> nd;
    Vec r(40);
    for (int i = 0; i < 40; ++i) r[i] = nd(rng);
    Vec xc = cg_solve(A, r, 1e-12);
    Vec xd = factor_solve(A, r);
    CHECK((xc - xd).norm() <= 1e-8 * xd.norm());
}

TEST_CASE("symmetric input gives transpose-invariant solutions") {
    std::mt19937_64 rng(13);
    SpMat A = random_spd(20, rng);
    Vec b(20);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 20; ++i) b[i] = nd(rng);
    Vec x1 = factor_solve(A, b);
    Vec x2 = factor_solve(SpMat(A.transpose()), b);
    CHECK((x1 - x2).norm() <= 1e-10 * x1.norm());
}

TEST_CASE("cg reports no convergence on an inconsistent singular system") {
    SpMat A(2, 2);
    A.insert(0, 0) = 1.0;  // diag(1, 0): PSD singular
    A.insert(1, 1) = 0.0;
    Vec b(2);
    b << 0.0, 1.0;  // not in the range
    CHECK_THROWS_AS(cg_solve(A, b, 1e-12, 50), Error);
}
