#include <doctest.h>

#include <random>

#include "fitsim/bench.hpp"
#include "fitsim/constants.hpp"
#include "fitsim/errors.hpp"
#include "fitsim/formulations.hpp"
#include "fitsim/timeint.hpp"

using namespace fitsim;

namespace {

// scalar decay ODE dx/dt = -x as a 1x1 system
DaeSystem scalar_decay() {
    DaeSystem sys;
    sys.tag = "decay";
    SpMat M(1, 1), K(1, 1);
    M.insert(0, 0) = 1.0;
    K.insert(0, 0) = 1.0;
    sys.M = M;
    sys.K = K;
    sys.x0 = Vec::Ones(1);
    sys.blocks = {{"x", 0, 1}};
    return sys;
}

Model cavity_model(int points, double h) {
    SceneDoc doc;
    doc.name = "cavity";
    for (int a = 0; a < 3; ++a) {
        doc.grid.coords[a].resize(points);
        for (int i = 0; i < points; ++i) doc.grid.coords[a][i] = i * h;
    }
    doc.boundary.face_class.fill(BoundaryClass::ebc);
    return build_model(doc);
}

}  // namespace

TEST_CASE("implicit Euler single step matches the closed form") {
    DaeSystem sys = scalar_decay();
    TimeGrid tg{0.0, 0.1, 0.1};
    TimeSeries ts = implicit_euler(sys, tg,
                                   {{{"x", [](int, double, const Vec& x) { return x[0]; }}}});
    REQUIRE(ts.t.size() == 2);
    CHECK(ts.scalars["x"][1] == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
}

TEST_CASE("index-2 toy tracks the analytic solution after the first step") {
    DaeSystem sys;
    SpMat M(2, 2), K(2, 2);
    M.insert(0, 0) = 1.0;
    K.insert(0, 1) = -1.0;
    K.insert(1, 0) = 1.0;
    sys.M = M;
    sys.K = K;
    sys.x0 = Vec::Zero(2);
    sys.blocks = {{"x1", 0, 1}, {"x2", 1, 1}};
    Signal sine;
    sine.kind = Signal::Kind::sin;
    sine.amplitude = 1.0;
    sine.frequency = 1.0 / (2.0 * kPi);  // omega = 1
    RhsTerm t;
    t.pattern = Vec::Zero(2);
    t.pattern[1] = 1.0;
    t.signal = sine;
    sys.rhs_terms.push_back(t);

    double dt = 1e-3;
    TimeGrid tg{0.0, 0.5, dt};
    TimeSeries ts = implicit_euler(
        sys, tg,
        {{{"x1", [](int, double, const Vec& x) { return x[0]; }},
          {"x2", [](int, double, const Vec& x) { return x[1]; }}}});
    for (size_t i = 5; i < ts.t.size(); ++i) {
        double time = ts.t[i];
        CHECK(ts.scalars["x1"][i] == doctest::Approx(std::sin(time)).epsilon(1e-10));
        // x2 = cos(t) up to O(dt)
        CHECK(std::abs(ts.scalars["x2"][i] - std::cos(time)) < 5 * dt);
    }
}

TEST_CASE("singular step matrix is reported") {
    DaeSystem sys;
    SpMat M(2, 2), K(2, 2);
    M.insert(0, 0) = 1.0;  // second row: 0 = 0, irregular
    sys.M = M;
    sys.K = K;
    sys.x0 = Vec::Zero(2);
    CHECK_THROWS_AS(implicit_euler(sys, TimeGrid{0, 1, 0.5}), Error);
}

TEST_CASE("cfl estimate: cubic and anisotropic spacings") {
    SceneDoc doc;
    doc.name = "cfl";
    double h = 0.01;
    doc.grid.coords[0] = {0, h, 2 * h};
    doc.grid.coords[1] = {0, 2 * h, 4 * h};
    doc.grid.coords[2] = {0, 2 * h, 4 * h};
    doc.boundary.face_class.fill(BoundaryClass::ebc);
    Model m = build_model(doc);
    double dt = cfl_timestep(m.grid, m.sub);
    double expect = 1.0 / (kC0 * std::sqrt(1.0 / (h * h) + 2.0 / (4 * h * h)));
    CHECK(dt == doctest::Approx(expect).epsilon(1e-12));

    SceneDoc cube;
    cube.name = "cube";
    for (int a = 0; a < 3; ++a) cube.grid.coords[a] = {0, h, 2 * h};
    cube.boundary.face_class.fill(BoundaryClass::ebc);
    Model mc = build_model(cube);
    CHECK(cfl_timestep(mc.grid, mc.sub) ==
          doctest::Approx(h / (kC0 * std::sqrt(3.0))).epsilon(1e-12));

    // micrometre cells sit at the published order of magnitude
    SceneDoc um;
    um.name = "um";
    for (int a = 0; a < 3; ++a) um.grid.coords[a] = {0, 3e-6, 6e-6};
    um.boundary.face_class.fill(BoundaryClass::ebc);
    Model mu = build_model(um);
    double dtu = cfl_timestep(mu.grid, mu.sub);
    CHECK(dtu > 1e-15);
    CHECK(dtu < 1e-14);
}

TEST_CASE("leapfrog: zero fields stay zero, held energy is conserved, above-CFL diverges") {
    Model m = cavity_model(6, 0.02);
    DaeSystem sys = fullwave_eh(m);
    double dt_cfl = cfl_timestep(m.grid, m.sub);

    int nE = sys.block("e").size, nF = sys.block("h").size;
    SUBCASE("zero everything") {
        TimeSeries ts = leapfrog(sys, TimeGrid{0, 200 * 0.5 * dt_cfl, 0.5 * dt_cfl},
                                 Vec::Zero(nE), Vec::Zero(nF));
        for (double e : ts.scalars["E_em"]) CHECK(e == 0.0);
    }

    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    Vec e0(nE), h0(nF);
    for (int i = 0; i < nE; ++i) e0[i] = nd(rng);
    for (int i = 0; i < nF; ++i) h0[i] = nd(rng);
    // scale h to comparable energy
    h0 *= std::sqrt(e0.dot(sys.fullwave->m_eps.cwiseProduct(e0)) /
                    h0.dot(sys.fullwave->m_nu.cwiseInverse().cwiseProduct(h0)));

    SUBCASE("held energy at 0.99 CFL over 10^4 steps: no drift") {
        double dt = 0.99 * dt_cfl;
        TimeSeries ts = leapfrog(sys, TimeGrid{0, 10000 * dt, dt}, e0, h0);
        const auto& E = ts.scalars["E_em"];
        double lo = E[0], hi = E[0];
        for (double e : E) {
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        CHECK(hi / lo < 1.01);
        // linear fit slope per step, relative to the mean
        double n = static_cast<double>(E.size());
        double mean = 0, tmean = (n - 1) / 2;
        for (double e : E) mean += e / n;
        double num = 0, den = 0;
        for (size_t i = 0; i < E.size(); ++i) {
            num += (i - tmean) * (E[i] - mean);
            den += (i - tmean) * (i - tmean);
        }
        CHECK(std::abs(num / den) / mean < 1e-6);
    }

    SUBCASE("1.2 CFL diverges beyond 1000x") {
        double dt = 1.2 * dt_cfl;
        LeapfrogOptions opts;
        opts.energy_cap = 1e4;
        TimeSeries ts = leapfrog(sys, TimeGrid{0, 2000 * dt, dt}, e0, h0, opts);
        const auto& E = ts.scalars["E_em"];
        CHECK(std::abs(E.back()) > 1e3 * std::abs(E.front()));
    }
}

TEST_CASE("consistent_init accepts zero states and flags perturbed charges") {
    SceneDoc doc = resolve_scene("reference-3x3");
    Model m = build_model(doc);
    DaeSystem lorenz = aphi_lorenz(m);
    CHECK(consistent_init(lorenz, lorenz.x0).consistent);

    DaeSystem coulomb = aphi_coulomb(m);
    CHECK(consistent_init(coulomb, coulomb.x0).consistent);

    // random phi/pi with the charge predicate enforced, then perturbed
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    Vec x = Vec::Zero(lorenz.n());
    auto phi = lorenz.block("phi");
    auto pi = lorenz.block("pi");
    auto qb = lorenz.block("q");
    for (int i = 0; i < phi.size; ++i) x[phi.offset + i] = nd(rng);
    for (int i = 0; i < pi.size; ++i) x[pi.offset + i] = nd(rng);
    // evaluate the predicate residual directly to build a consistent q
    // (the charge block enters the residual linearly with unit weight)
    Vec probe = x;
    for (int i = 0; i < qb.size; ++i) probe[qb.offset + i] = 0.0;
    auto [res0, scale0] = lorenz.predicates[0].eval(probe);
    // q = rhs follows from re-evaluating with q zeroed: residual equals |rhs|
    // reconstruct rhs by finite assembly: use the system matrices instead
    (void)res0;
    (void)scale0;
    // Gauss row: q - L_eps phi + St M_eps pi = 0 -> q = -(K x)|gauss with q = 0
    Vec kx = lorenz.K * probe;
    int gauss_off = lorenz.block("q").size + lorenz.block("phi").size + lorenz.block("a").size;
    // the Gauss row block starts after gauge and Ampere rows: rows [nN+nE, 2nN+nE)
    int nN = qb.size, nEdg = pi.size;
    for (int i = 0; i < nN; ++i) x[qb.offset + i] = -kx[nN + nEdg + i];
    (void)gauss_off;
    CHECK(consistent_init(lorenz, x).consistent);

    Vec bad = x;
    for (int i = 0; i < nN; ++i) bad[qb.offset + i] *= 1.001;
    InitReport rep = consistent_init(lorenz, bad);
    CHECK(!rep.consistent);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].rel_residual == doctest::Approx(1e-3).epsilon(0.1));
}
