#include <doctest.h>

#include <random>

#include "fitsim/constants.hpp"
#include "fitsim/daekit.hpp"
#include "fitsim/errors.hpp"

using namespace fitsim;

TEST_CASE("nonsingular mass gives index 0") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Mat M = Mat::Identity(5, 5);
    Mat K(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) K(i, j) = nd(rng);
    CHECK(index_probe(M, K).index_estimate == 0);
}

TEST_CASE("one algebraic row gives index 1") {
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = 1.0;
    Mat K = Mat::Identity(2, 2);
    PencilReport rep = index_probe(M, K);
    CHECK(rep.index_estimate == 1);
    CHECK(rep.rank_sequence.front() == 1);
}

TEST_CASE("the classical educational problem has index 2") {
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = 1.0;
    Mat K(2, 2);
    K << 0, -1, 1, 0;
    CHECK(index_probe(M, K).index_estimate == 2);
}

TEST_CASE("index is invariant under orthogonal congruence") {
    Mat M = Mat::Zero(3, 3);
    M(0, 0) = 1.0;
    M(1, 1) = 2.0;
    Mat K(3, 3);
    K << 0, -1, 0, 1, 0, 0, 0, 1, 1;  // one constraint row coupling the states
    int base = index_probe(M, K).index_estimate;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        Mat A(3, 3);
        for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = nd(rng);
        Eigen::HouseholderQR<Mat> qr(A);
        Mat Q = qr.householderQ();
        CHECK(index_probe(Mat(Q.transpose() * M * Q), Mat(Q.transpose() * K * Q)).index_estimate ==
              base);
    }
}

TEST_CASE("singular pencil is flagged irregular") {
    Mat M = Mat::Zero(2, 2);
    Mat K = Mat::Zero(2, 2);
    M(0, 0) = 1.0;
    K(0, 0) = 1.0;  // second row identically zero: det(lambda M + K) == 0
    CHECK_THROWS_AS(index_probe(M, K), Error);
}

TEST_CASE("perturbation experiment matches the damped analytic amplification") {
    // delta = 0: identical trajectories
    double dt = 2.0 * kPi * 1e-4 / 40.0;
    SUBCASE("clean run") {
        // compare a run against itself via k large but amplitude zero is not
        // expressible; instead check determinism: two evaluations agree
        double a1 = perturbation_experiment(2, dt);
        double a2 = perturbation_experiment(2, dt);
        CHECK(a1 == a2);
    }
    SUBCASE("k = 2 amplification within the implicit-Euler band") {
        double amp = perturbation_experiment(2, dt);
        CHECK(amp >= 50.0);
        CHECK(amp <= 100.0);
    }
    SUBCASE("under-resolved step is rejected") {
        CHECK_THROWS_AS(perturbation_experiment(2, 10.0 * dt), Error);
    }
}

TEST_CASE("pencil definiteness on trivial and indefinite cases") {
    SpMat M(2, 2), K(2, 2);
    M.setIdentity();
    K.setIdentity();
    auto rep = pencil_definiteness(M, K, {1.0});
    REQUIRE(rep.size() == 1);
    CHECK(rep[0].positive);
    CHECK(rep[0].min_eig_estimate == doctest::Approx(2.0));

    SpMat Kneg(2, 2);
    Kneg.insert(0, 0) = 1.0;
    Kneg.insert(1, 1) = -3.0;
    auto rep2 = pencil_definiteness(M, Kneg, {1.0});
    CHECK(!rep2[0].positive);
    CHECK(rep2[0].min_eig_estimate == doctest::Approx(-2.0));
}
