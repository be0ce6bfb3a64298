#include <doctest.h>

#include <Eigen/SparseCholesky>
#include <random>

#include "fitsim/constants.hpp"
#include "fitsim/errors.hpp"
#include "fitsim/materials.hpp"
#include "fitsim/scene.hpp"

using namespace fitsim;

namespace {

GridSpec uniform_spec(int nx, int ny, int nz, double h = 1.0) {
    GridSpec s;
    int n[3] = {nx, ny, nz};
    for (int a = 0; a < 3; ++a) {
        s.coords[a].resize(n[a]);
        for (int i = 0; i < n[a]; ++i) s.coords[a][i] = i * h;
    }
    return s;
}

BoundarySpec all_faces(BoundaryClass cls) {
    BoundarySpec b;
    b.face_class.fill(cls);
    return b;
}

SubdomainMap uniform_sub(const TopoOps& ops, double eps, double sigma, double mu) {
    SubdomainMap sub;
    int n = ops.n_cells();
    sub.eps = Vec::Constant(n, eps);
    sub.sigma = Vec::Constant(n, sigma);
    sub.mu = Vec::Constant(n, mu);
    sub.label.assign(n, CellLabel::air);
    sub.winding_of_cell.assign(n, -1);
    sub.pec.assign(n, 0);
    return sub;
}

}  // namespace

TEST_CASE("edge hodge entry: uniform material, interior edge") {
    double h = 0.5, sigma = 3.0;
    Grid g = build_grid(uniform_spec(4, 4, 4, h), all_faces(BoundaryClass::mbc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, sigma, kMu0);
    Vec Ms = assemble_hodge(g, ops, sub, HodgeProperty::sigma);
    int e = ops.edge_of_slot[g.slot(Axis::z, 1, 1, 1)];
    // sigma * h^2 / h = sigma * h
    CHECK(Ms[e] == doctest::Approx(sigma * h).epsilon(1e-14));
}

TEST_CASE("edge hodge averages two cells symmetrically") {
    double h = 1.0;
    Grid g = build_grid(uniform_spec(3, 2, 2, h), all_faces(BoundaryClass::mbc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, 0.0, kMu0);
    double s1 = 2.0, s2 = 10.0;
    sub.sigma[ops.cell_of_slot[g.node_id(0, 0, 0)]] = s1;
    sub.sigma[ops.cell_of_slot[g.node_id(1, 0, 0)]] = s2;
    Vec Ms = assemble_hodge(g, ops, sub, HodgeProperty::sigma);
    // the y-edge on the shared plane sees both cells through equal quadrants
    int e = ops.edge_of_slot[g.slot(Axis::y, 1, 0, 0)];
    double area = g.dual_facet_area(g.slot(Axis::y, 1, 0, 0));
    CHECK(area == doctest::Approx(h * h / 2).epsilon(1e-14));
    CHECK(Ms[e] == doctest::Approx(0.5 * (s1 + s2) * area / h).epsilon(1e-13));
}

TEST_CASE("sigma = 0 gives the zero PSD matrix") {
    Grid g = build_grid(uniform_spec(3, 3, 3), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, 0.0, kMu0);
    Vec Ms = assemble_hodge(g, ops, sub, HodgeProperty::sigma);
    CHECK(Ms.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hodge diagonals are positive on real entities (Cholesky trivially passes)") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> np(2, 5);
    for (int trial = 0; trial < 8; ++trial) {
        Grid g = build_grid(uniform_spec(np(rng), np(rng), np(rng), 0.3), all_faces(BoundaryClass::ebc));
        TopoOps ops = build_topology(g);
        SubdomainMap sub = uniform_sub(ops, 2 * kEps0, 1.0, 3 * kMu0);
        MaterialSet m = assemble_materials(g, ops, sub);
        CHECK(m.eps_edge.minCoeff() > 0);
        CHECK(m.nu_facet.minCoeff() > 0);
        CHECK(m.mu_edge.minCoeff() > 0);
        CHECK(m.sigma_edge.minCoeff() >= 0);
    }
}

TEST_CASE("nonpositive permittivity or permeability is rejected") {
    Grid g = build_grid(uniform_spec(2, 2, 2), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, 0.0, kMu0);
    sub.eps[0] = 0.0;
    CHECK_THROWS_AS(assemble_materials(g, ops, sub), Error);
    sub.eps[0] = kEps0;
    sub.mu[0] = -1.0;
    CHECK_THROWS_AS(assemble_materials(g, ops, sub), Error);
}

TEST_CASE("M_sigma is PSD over random vectors") {
    Grid g = build_grid(uniform_spec(4, 3, 3, 0.2), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, 0.0, kMu0);
    sub.sigma[0] = 5.7e7;  // one conducting cell
    MaterialSet m = assemble_materials(g, ops, sub);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 1000; ++i) {
        Vec x(m.sigma_edge.size());
        for (int k = 0; k < x.size(); ++k) x[k] = nd(rng);
        CHECK(x.dot(m.sigma_edge.cwiseProduct(x)) >= 0.0);
    }
}

TEST_CASE("node Laplacian on the 3-point all-ebc cube is the scalar 6 eps h") {
    double h = 0.5, eps = 3.0 * kEps0;
    Grid g = build_grid(uniform_spec(3, 3, 3, h), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, eps, 1.0, kMu0);
    MaterialSet m = assemble_materials(g, ops, sub);
    auto [Leps, Lsig] = laplacians(ops, m.eps_edge, m.sigma_edge);
    REQUIRE(Leps.rows() == 1);
    CHECK(Leps.coeff(0, 0) == doctest::Approx(6.0 * eps * h).epsilon(1e-13));
    // L symmetric by construction
    CHECK(Lsig.coeff(0, 0) == doctest::Approx(6.0 * 1.0 * h).epsilon(1e-13));
}

TEST_CASE("L_eps stays symmetric and SPD on a heterogeneous scene") {
    Grid g = build_grid(uniform_spec(4, 4, 3, 0.1), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, 0.0, kMu0);
    sub.eps[0] = 5 * kEps0;
    sub.eps[3] = 2 * kEps0;
    MaterialSet m = assemble_materials(g, ops, sub);
    auto [Leps, Lsig] = laplacians(ops, m.eps_edge, m.sigma_edge);
    SpMat diff = SpMat(Leps - SpMat(Leps.transpose()));
    double asym = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SpMat::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    CHECK(asym == 0.0);
    Eigen::SimplicialLLT<SpMat> llt(Leps);
    CHECK(llt.info() == Eigen::Success);
    CHECK(Lsig.nonZeros() == 0);  // sigma vanished
}

TEST_CASE("scaling matrix: scalar case and diagonal mode") {
    double h = 0.5, eps = 2.0 * kEps0, mu = 3.0 * kMu0;
    Grid g = build_grid(uniform_spec(3, 3, 3, h), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, eps, 0.0, mu);
    MaterialSet m = assemble_materials(g, ops, sub);
    auto [Leps, Lsig] = laplacians(ops, m.eps_edge, m.sigma_edge);

    SpMat MN = scaling_matrix(ScalingMode::paper, g, ops, m, Leps);
    REQUIRE(MN.rows() == 1);
    // node carriers on the interior node: eps*h (edges) and nu/h (facets)
    double node_eps = eps * h;
    double node_nu = (1.0 / mu) / h;
    double expect = (node_nu / node_eps) / (6.0 * eps * h);
    CHECK(MN.coeff(0, 0) == doctest::Approx(expect).epsilon(1e-12));

    SpMat MNd = scaling_matrix(ScalingMode::diagonal, g, ops, m, Leps);
    CHECK(MNd.coeff(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("scaling matrix is symmetric positive definite on a larger grid") {
    Grid g = build_grid(uniform_spec(4, 4, 4, 0.2), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    SubdomainMap sub = uniform_sub(ops, kEps0, 0.0, kMu0);
    sub.eps[1] = 4 * kEps0;
    MaterialSet m = assemble_materials(g, ops, sub);
    auto [Leps, Lsig] = laplacians(ops, m.eps_edge, m.sigma_edge);
    SpMat MN = scaling_matrix(ScalingMode::paper, g, ops, m, Leps);
    Mat MNd = Mat(MN);
    CHECK((MNd - MNd.transpose()).cwiseAbs().maxCoeff() <=
          1e-13 * MNd.cwiseAbs().maxCoeff());
    Eigen::LLT<Mat> llt(MNd);
    CHECK(llt.info() == Eigen::Success);
    // diagonal mode equals the diagonal of the paper matrix
    SpMat MNdiag = scaling_matrix(ScalingMode::diagonal, g, ops, m, Leps);
    for (int i = 0; i < MNd.rows(); ++i)
        CHECK(MNdiag.coeff(i, i) == doctest::Approx(MNd(i, i)).epsilon(1e-10));
}

TEST_CASE("box winding: single-cell support and partition of unity") {
    double h = 1.0;
    Grid g = build_grid(uniform_spec(3, 3, 3, h), all_faces(BoundaryClass::mbc));
    TopoOps ops = build_topology(g);
    WindingDecl decl;
    decl.id = "w";
    decl.type = "box";
    decl.axis = Axis::z;
    decl.box = {0, 1, 0, 1, 0, 1};
    decl.turns = 1.0;
    Winding w = discretise_winding(g, ops, decl);
    // four corner edges, each a quarter of the unit current
    CHECK(w.X.nonZeros() == 4);
    double sum = 0.0;
    for (Eigen::SparseVector<double>::InnerIterator it(w.X); it; ++it) {
        CHECK(it.value() == doctest::Approx(0.25).epsilon(1e-14));
        sum += it.value();
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("loop winding: exact divergence-freeness and cross-plane sums") {
    Grid g = build_grid(uniform_spec(7, 7, 7, 1e-3), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);
    WindingDecl decl;
    decl.id = "coil";
    decl.type = "loop";
    decl.axis = Axis::z;
    decl.hole = {2e-3, 4e-3, 2e-3, 4e-3};
    decl.span = {1e-3, 5e-3};
    decl.turns = 120.0;
    Winding w = discretise_winding(g, ops, decl);

    Vec X = Vec(w.X);
    Vec div = ops.Std() * X;
    CHECK(div.cwiseAbs().maxCoeff() <= 1e-12 * X.cwiseAbs().maxCoeff());

    // cut one side of the loop with an x-plane: x-edges at the y-interface
    // columns collect the full ampere-turns
    double total = 0.0;
    for (Eigen::SparseVector<double>::InnerIterator it(w.X); it; ++it) {
        long s = ops.edges[it.index()];
        if (g.slot_axis(s) != Axis::x) continue;
        auto ijk = g.decode_node(g.slot_node(s));
        if (ijk[0] == 2 && g.coord(Axis::y, ijk[1]) == doctest::Approx(2e-3)) total += it.value();
    }
    CHECK(std::abs(total) == doctest::Approx(120.0).epsilon(1e-12));

    // mirror stream closes the facet current exactly
    Vec Xf = ops.Cd() * Vec(w.stream_edge);
    Vec divf = ops.S.cast<double>() * Xf;
    CHECK(divf.cwiseAbs().maxCoeff() <= 1e-12 * Xf.cwiseAbs().maxCoeff());
}

TEST_CASE("windings in disjoint boxes do not intersect") {
    Grid g = build_grid(uniform_spec(5, 4, 4), all_faces(BoundaryClass::mbc));
    TopoOps ops = build_topology(g);
    WindingDecl a, b;
    a.id = "a";
    a.type = "box";
    a.axis = Axis::z;
    a.box = {0, 1, 0, 1, 0, 2};
    b = a;
    b.id = "b";
    b.box = {3, 4, 2, 3, 0, 2};
    Winding wa = discretise_winding(g, ops, a);
    Winding wb = discretise_winding(g, ops, b);
    CHECK(!windings_intersect(wa, wb));
}

TEST_CASE("source field: zero for zero winding, exact for loops, rejected for open boxes") {
    Grid g = build_grid(uniform_spec(6, 6, 6, 1.0), all_faces(BoundaryClass::ebc));
    TopoOps ops = build_topology(g);

    Eigen::SparseVector<double> zero(ops.n_edges());
    CHECK(source_h_field(ops, zero).norm() == 0.0);

    WindingDecl loop;
    loop.id = "loop";
    loop.type = "loop";
    loop.axis = Axis::z;
    loop.hole = {2, 4, 2, 4};
    loop.span = {1, 5};
    loop.turns = 7.0;
    Winding wl = discretise_winding(g, ops, loop);
    Vec hs = source_h_field(ops, wl.X);
    Vec resid = SpMat(ops.Cd().transpose()) * hs - Vec(wl.X);
    CHECK(resid.norm() <= 1e-10 * Vec(wl.X).norm());

    WindingDecl box;
    box.id = "open";
    box.type = "box";
    box.axis = Axis::z;
    box.box = {2, 3, 2, 3, 1, 4};
    Winding wb = discretise_winding(g, ops, box);
    CHECK_THROWS_AS(source_h_field(ops, wb.X), Error);
}
