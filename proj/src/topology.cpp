#include "fitsim/topology.hpp"

#include <filesystem>

#include "fitsim/errors.hpp"

namespace fitsim {

namespace {

// facet normal a spans in-plane axes (b, c) in right-handed order
void facet_plane(int a, int& b, int& c) {
    b = (a + 1) % 3;
    c = (a + 2) % 3;
}

}  // namespace

TopoOps build_topology(const Grid& grid, const std::vector<char>* extra) {
    TopoOps ops;
    const long N = grid.n_nodes();
    const long S3 = grid.n_slots();

    ops.edge_of_slot.assign(S3, -1);
    ops.facet_of_slot.assign(S3, -1);
    ops.cell_of_slot.assign(N, -1);

    for (long s = 0; s < S3; ++s) {
        if (grid.edge_real(s)) {
            ops.edge_of_slot[s] = static_cast<int>(ops.edges.size());
            ops.edges.push_back(s);
        }
        if (grid.facet_real(s)) {
            ops.facet_of_slot[s] = static_cast<int>(ops.facets.size());
            ops.facets.push_back(s);
        }
    }
    for (long n = 0; n < N; ++n) {
        if (grid.cell_real(n)) {
            ops.cell_of_slot[n] = static_cast<int>(ops.cells.size());
            ops.cells.push_back(n);
        }
    }

    const int nE = ops.n_edges(), nF = static_cast<int>(ops.facets.size());
    const int nV = static_cast<int>(ops.cells.size());
    long stride[3] = {1, grid.np(Axis::x), static_cast<long>(grid.np(Axis::x)) * grid.np(Axis::y)};

    // C: boundary circulation of each facet over its four edges. For the facet
    // with normal a at point n: +e_b(n), +e_c(n + k_b), -e_b(n + k_c), -e_c(n).
    std::vector<Eigen::Triplet<int>> ct;
    ct.reserve(4 * nF);
    for (int f = 0; f < nF; ++f) {
        long s = ops.facets[f];
        int a = static_cast<int>(grid.slot_axis(s));
        long n = grid.slot_node(s);
        int b, c;
        facet_plane(a, b, c);
        int e0 = ops.edge_of_slot[b * N + n];
        int e1 = ops.edge_of_slot[c * N + n + stride[b]];
        int e2 = ops.edge_of_slot[b * N + n + stride[c]];
        int e3 = ops.edge_of_slot[c * N + n];
        if (e0 < 0 || e1 < 0 || e2 < 0 || e3 < 0)
            fail(ErrorCode::assembly_bug, "real facet with phantom bounding edge");
        ct.emplace_back(f, e0, 1);
        ct.emplace_back(f, e1, 1);
        ct.emplace_back(f, e2, -1);
        ct.emplace_back(f, e3, -1);
    }
    ops.C.resize(nF, nE);
    ops.C.setFromTriplets(ct.begin(), ct.end());

    // S: net outflow of each cell over its six facets.
    std::vector<Eigen::Triplet<int>> st;
    st.reserve(6 * nV);
    for (int v = 0; v < nV; ++v) {
        long n = ops.cells[v];
        for (int a = 0; a < 3; ++a) {
            st.emplace_back(v, ops.facet_of_slot[a * N + n + stride[a]], 1);
            st.emplace_back(v, ops.facet_of_slot[a * N + n], -1);
        }
    }
    ops.S.resize(nV, nF);
    ops.S.setFromTriplets(st.begin(), st.end());

    // St: dual divergence on each (truncated) dual cell; dual facets are
    // crossed by the primal edges incident to the node.
    std::vector<Eigen::Triplet<int>> dt;
    dt.reserve(6 * N);
    for (long n = 0; n < N; ++n) {
        auto ijk = grid.decode_node(n);
        int idx[3] = {ijk[0], ijk[1], ijk[2]};
        for (int a = 0; a < 3; ++a) {
            long out = a * N + n;
            if (grid.edge_real(out)) dt.emplace_back(static_cast<int>(n), ops.edge_of_slot[out], 1);
            if (idx[a] > 0) {
                long in = a * N + n - stride[a];
                if (grid.edge_real(in)) dt.emplace_back(static_cast<int>(n), ops.edge_of_slot[in], -1);
            }
        }
    }
    ops.St.resize(static_cast<int>(N), nE);
    ops.St.setFromTriplets(dt.begin(), dt.end());

    // ebc projection
    ops.free_edge_of.assign(nE, -1);
    for (int e = 0; e < nE; ++e) {
        long s = ops.edges[e];
        bool constrained = grid.edge_ebc_constrained(s) || (extra && (*extra)[s]);
        if (!constrained) {
            ops.free_edge_of[e] = static_cast<int>(ops.free_edges.size());
            ops.free_edges.push_back(e);
        }
    }
    // nodes with no free incident edge are dead (interior of a perfect
    // conductor); keeping them would make the node Laplacian singular
    std::vector<char> has_free_edge(N, 0);
    for (int fe : ops.free_edges) {
        long s = ops.edges[fe];
        int a = static_cast<int>(grid.slot_axis(s));
        long n0 = grid.slot_node(s);
        long stride = (a == 0) ? 1
                               : (a == 1 ? grid.np(Axis::x)
                                         : static_cast<long>(grid.np(Axis::x)) * grid.np(Axis::y));
        has_free_edge[n0] = 1;
        has_free_edge[n0 + stride] = 1;
    }
    ops.free_node_of.assign(static_cast<int>(N), -1);
    for (long n = 0; n < N; ++n) {
        if (grid.node_ebc_constrained(n) || !has_free_edge[n]) {
            ops.constrained_nodes.push_back(static_cast<int>(n));
        } else {
            ops.free_node_of[n] = static_cast<int>(ops.free_nodes.size());
            ops.free_nodes.push_back(static_cast<int>(n));
        }
    }

    ops.Cp = slice_cols(ops.C, ops.free_edges);
    ops.Stp = slice(ops.St, ops.free_nodes, ops.free_edges);
    return ops;
}

std::vector<int> project_free(const TopoOps& ops, const Grid&, EntityKind kind) {
    if (kind == EntityKind::edge) {
        if (ops.free_edges.empty()) fail(ErrorCode::degenerate_problem, "no free edges");
        return ops.free_edges;
    }
    if (kind == EntityKind::node) {
        if (ops.free_nodes.empty()) fail(ErrorCode::degenerate_problem, "no free nodes");
        return ops.free_nodes;
    }
    fail(ErrorCode::invalid_spec, "projection applies to edges and nodes");
}

void export_operators(const TopoOps& ops, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    auto p = [&](const char* name) { return (fs::path(outdir) / name).string(); };
    mm_write(p("C.mtx"), ops.C, "primal curl, facets x edges");
    mm_write(p("S.mtx"), ops.S, "primal divergence, cells x facets");
    mm_write(p("St.mtx"), ops.St, "dual divergence, nodes x edges");
    mm_write(p("G.mtx"), SpMatI(ops.G()), "primal gradient, edges x nodes (= -St^T)");
    mm_write(p("C_free.mtx"), ops.Cp, "curl on free edges");
    mm_write(p("St_free.mtx"), ops.Stp, "dual divergence on free nodes/edges");
}

}  // namespace fitsim
