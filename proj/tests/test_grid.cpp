#include <doctest.h>

#include <random>

#include "fitsim/errors.hpp"
#include "fitsim/grid.hpp"

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

}  // namespace

TEST_CASE("single-cell unit cube") {
    Grid g = build_grid(uniform_spec(2, 2, 2), all_faces(BoundaryClass::ebc));
    CHECK(g.n_nodes() == 8);
    CHECK(g.n_slots() == 24);
    int real_cells = 0;
    double vol = 0.0;
    for (long n = 0; n < g.n_nodes(); ++n)
        if (g.cell_real(n)) {
            real_cells++;
            vol += g.cell_vol(n);
        }
    CHECK(real_cells == 1);
    CHECK(vol == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("numbering strides match the canonical formula") {
    Grid g = build_grid(uniform_spec(3, 4, 5), all_faces(BoundaryClass::ebc));
    // k_x = 1, k_y = nx, k_z = nx*ny with 1-based coordinates
    CHECK(entity_index(g, 1, 1, 1, Axis::x, EntityKind::node) == 1);
    CHECK(entity_index(g, 2, 3, 2, Axis::x, EntityKind::node) == 20);
    CHECK(entity_index(g, 2, 1, 1, Axis::x, EntityKind::node) -
              entity_index(g, 1, 1, 1, Axis::x, EntityKind::node) ==
          1);
    CHECK(entity_index(g, 1, 2, 1, Axis::x, EntityKind::node) -
              entity_index(g, 1, 1, 1, Axis::x, EntityKind::node) ==
          3);
    CHECK(entity_index(g, 1, 1, 2, Axis::x, EntityKind::node) -
              entity_index(g, 1, 1, 1, Axis::x, EntityKind::node) ==
          12);
    // z-edges live in the third direction block
    CHECK(entity_index(g, 1, 1, 1, Axis::z, EntityKind::edge) == 2 * 60 + 1);
    CHECK_THROWS_AS(entity_index(g, 4, 1, 1, Axis::x, EntityKind::node), Error);
    CHECK_THROWS_AS(entity_index(g, 3, 1, 1, Axis::x, EntityKind::cell), Error);
}

TEST_CASE("numbering is a bijection over in-range triples") {
    Grid g = build_grid(uniform_spec(3, 4, 5), all_faces(BoundaryClass::ebc));
    std::vector<char> seen(g.n_nodes(), 0);
    for (int k = 1; k <= 5; ++k)
        for (int j = 1; j <= 4; ++j)
            for (int i = 1; i <= 3; ++i) {
                long n = entity_index(g, i, j, k, Axis::x, EntityKind::node);
                CHECK(n >= 1);
                CHECK(n <= g.n_nodes());
                CHECK(!seen[n - 1]);
                seen[n - 1] = 1;
            }
}

TEST_CASE("interior free edge count on the all-ebc 3-point cube") {
    Grid g = build_grid(uniform_spec(3, 3, 3, 0.5), all_faces(BoundaryClass::ebc));
    int free_per_dir[3] = {0, 0, 0};
    for (long s = 0; s < g.n_slots(); ++s)
        if (g.edge_real(s) && !g.edge_ebc_constrained(s))
            free_per_dir[static_cast<int>(g.slot_axis(s))]++;
    CHECK(free_per_dir[0] == 2);
    CHECK(free_per_dir[1] == 2);
    CHECK(free_per_dir[2] == 2);
}

TEST_CASE("all-mbc leaves every real edge free") {
    Grid g = build_grid(uniform_spec(3, 4, 3), all_faces(BoundaryClass::mbc));
    for (long s = 0; s < g.n_slots(); ++s)
        if (g.edge_real(s)) CHECK(!g.edge_ebc_constrained(s));
}

TEST_CASE("phantom mask marks exactly the spans exiting the domain") {
    Grid g = build_grid(uniform_spec(3, 4, 5), all_faces(BoundaryClass::ebc));
    long real_edges = 0;
    for (long s = 0; s < g.n_slots(); ++s)
        if (g.edge_real(s)) real_edges++;
    // per direction: (n_a - 1) * n_b * n_c
    CHECK(real_edges == 2 * 4 * 5 + 3 * 3 * 5 + 3 * 4 * 4);
}

TEST_CASE("volume sum matches the domain volume on random graded grids") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> np(2, 5);
    std::uniform_real_distribution<double> dh(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        GridSpec s;
        for (int a = 0; a < 3; ++a) {
            int n = np(rng);
            s.coords[a].resize(n);
            s.coords[a][0] = 0.0;
            for (int i = 1; i < n; ++i) s.coords[a][i] = s.coords[a][i - 1] + dh(rng);
        }
        Grid g = build_grid(s, all_faces(BoundaryClass::ebc));
        double vol = 0.0;
        for (long n = 0; n < g.n_nodes(); ++n)
            if (g.cell_real(n)) vol += g.cell_vol(n);
        CHECK(vol == doctest::Approx(g.domain_volume()).epsilon(1e-12));
    }
}

TEST_CASE("dual facet areas tile the cross-section and truncate at the boundary") {
    double h = 0.25;
    Grid g = build_grid(uniform_spec(4, 4, 4, h), all_faces(BoundaryClass::ebc));
    // interior z-edge: four quadrants of (h/2)^2
    long s_int = g.slot(Axis::z, 1, 1, 1);
    CHECK(g.dual_facet_area(s_int) == doctest::Approx(h * h).epsilon(1e-14));
    // corner z-edge: one quadrant survives
    long s_corner = g.slot(Axis::z, 0, 0, 1);
    CHECK(g.dual_facet_area(s_corner) == doctest::Approx(0.25 * h * h).epsilon(1e-14));
    // dual areas of the edges crossing one z-plane tile the full cross-section
    double acc = 0.0;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) acc += g.dual_facet_area(g.slot(Axis::z, i, j, 1));
    CHECK(acc == doctest::Approx(g.extent(Axis::x) * g.extent(Axis::y)).epsilon(1e-13));
    // dual edge through a boundary facet is a half segment
    CHECK(g.dual_edge_len(g.slot(Axis::z, 1, 1, 0)) == doctest::Approx(0.5 * h));
    CHECK(g.dual_edge_len(g.slot(Axis::z, 1, 1, 1)) == doctest::Approx(h));
}

TEST_CASE("non-monotone coordinates are rejected") {
    GridSpec s = uniform_spec(3, 3, 3);
    s.coords[0][2] = s.coords[0][1];
    CHECK_THROWS_AS(build_grid(s, all_faces(BoundaryClass::ebc)), Error);
}

TEST_CASE("driven patch classifies nodes and leaves bridging edges free") {
    GridSpec s = uniform_spec(5, 5, 3);
    BoundarySpec b = all_faces(BoundaryClass::mbc);
    BoundaryPatch ground;
    ground.face = Face::zmin;
    ground.box = {1.0, 3.0, 1.0, 3.0};
    ground.cls = BoundaryClass::ebc;
    b.patches.push_back(ground);
    BoundaryPatch driven = ground;
    driven.face = Face::zmax;
    driven.drive = "v";
    b.patches.push_back(driven);
    Grid g = build_grid(s, b);

    CHECK(g.node_ebc_constrained(g.node_id(2, 2, 0)));
    CHECK(g.node_drive(g.node_id(2, 2, 0)).empty());
    CHECK(g.node_ebc_constrained(g.node_id(2, 2, 2)));
    CHECK(g.node_drive(g.node_id(2, 2, 2)) == "v");
    CHECK(!g.node_ebc_constrained(g.node_id(0, 0, 0)));
    // edge inside the patch is constrained, edge leaving it is not
    CHECK(g.edge_ebc_constrained(g.slot(Axis::x, 1, 2, 0)));
    CHECK(!g.edge_ebc_constrained(g.slot(Axis::x, 3, 2, 0)));
}
