#include "fitsim/materials.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "fitsim/errors.hpp"
#include "fitsim/linsolve.hpp"

namespace fitsim {

bool SubdomainMap::has_conductor() const {
    for (int c = 0; c < sigma.size(); ++c)
        if (sigma[c] > 0) return true;
    return false;
}

Vec edge_hodge(const Grid& grid, const TopoOps& ops, const Vec& cell_values) {
    const long N = grid.n_nodes();
    Vec out = Vec::Zero(ops.n_edges());
    for (int e = 0; e < ops.n_edges(); ++e) {
        long s = ops.edges[e];
        int a = static_cast<int>(grid.slot_axis(s));
        auto ijk = grid.decode_node(grid.slot_node(s));
        int b = (a + 1) % 3, c = (a + 2) % 3;
        int idx[3] = {ijk[0], ijk[1], ijk[2]};
        // quadrant cells around the edge: (idx[b]-1..idx[b]) x (idx[c]-1..idx[c])
        double acc = 0.0;
        for (int db = -1; db <= 0; ++db)
            for (int dc = -1; dc <= 0; ++dc) {
                int q[3] = {idx[0], idx[1], idx[2]};
                q[b] += db;
                q[c] += dc;
                if (q[b] < 0 || q[b] >= grid.np(static_cast<Axis>(b)) - 1) continue;
                if (q[c] < 0 || q[c] >= grid.np(static_cast<Axis>(c)) - 1) continue;
                int cell = ops.cell_of_slot[grid.node_id(q[0], q[1], q[2])];
                double quadrant = 0.25 * grid.spacing(static_cast<Axis>(b), q[b]) *
                                  grid.spacing(static_cast<Axis>(c), q[c]);
                acc += cell_values[cell] * quadrant;
            }
        out[e] = acc / grid.edge_len(s);
    }
    return out;
}

Vec facet_hodge(const Grid& grid, const TopoOps& ops, const Vec& cell_values) {
    Vec out = Vec::Zero(ops.n_facets());
    for (int f = 0; f < ops.n_facets(); ++f) {
        long s = ops.facets[f];
        int a = static_cast<int>(grid.slot_axis(s));
        auto ijk = grid.decode_node(grid.slot_node(s));
        int idx[3] = {ijk[0], ijk[1], ijk[2]};
        // dual edge segments into the two cells sharing the facet
        double acc = 0.0;
        for (int da = -1; da <= 0; ++da) {
            int q[3] = {idx[0], idx[1], idx[2]};
            q[a] += da;
            if (q[a] < 0 || q[a] >= grid.np(static_cast<Axis>(a)) - 1) continue;
            int cell = ops.cell_of_slot[grid.node_id(q[0], q[1], q[2])];
            acc += cell_values[cell] * 0.5 * grid.spacing(static_cast<Axis>(a), q[a]);
        }
        out[f] = acc / grid.facet_area(s);
    }
    return out;
}

Vec assemble_hodge(const Grid& grid, const TopoOps& ops, const SubdomainMap& sub,
                   HodgeProperty property) {
    switch (property) {
        case HodgeProperty::eps:
            return edge_hodge(grid, ops, sub.eps);
        case HodgeProperty::sigma: {
            Vec sigma = sub.sigma;
            // stranded source regions carry no eddy currents
            for (int c = 0; c < sigma.size(); ++c)
                if (sub.winding_of_cell[c] >= 0) sigma[c] = 0.0;
            return edge_hodge(grid, ops, sigma);
        }
        case HodgeProperty::nu: {
            Vec nu(sub.mu.size());
            for (int c = 0; c < sub.mu.size(); ++c) nu[c] = 1.0 / sub.mu[c];
            return facet_hodge(grid, ops, nu);
        }
    }
    fail(ErrorCode::invalid_spec, "unknown hodge property");
}

MaterialSet assemble_materials(const Grid& grid, const TopoOps& ops, const SubdomainMap& sub) {
    for (int c = 0; c < sub.eps.size(); ++c) {
        if (!(sub.eps[c] > 0) || !(sub.mu[c] > 0))
            fail(ErrorCode::material_error, "permittivity and permeability must be positive");
        if (sub.sigma[c] < 0) fail(ErrorCode::material_error, "negative conductivity");
    }
    MaterialSet m;
    m.eps_edge = assemble_hodge(grid, ops, sub, HodgeProperty::eps);
    m.sigma_edge = assemble_hodge(grid, ops, sub, HodgeProperty::sigma);
    m.mu_edge = edge_hodge(grid, ops, sub.mu);
    m.nu_facet = assemble_hodge(grid, ops, sub, HodgeProperty::nu);
    Vec rho(sub.sigma.size());
    for (int c = 0; c < sub.sigma.size(); ++c) rho[c] = sub.sigma[c] > 0 ? 1.0 / sub.sigma[c] : 0.0;
    m.rho_facet = facet_hodge(grid, ops, rho);
    return m;
}

Vec MaterialSet::free(const Vec& edge_vals, const TopoOps& ops) const {
    Vec out(ops.n_free_edges());
    for (size_t i = 0; i < ops.free_edges.size(); ++i) out[i] = edge_vals[ops.free_edges[i]];
    return out;
}

NodeOperator node_laplacian(const TopoOps& ops, const Vec& edge_vals) {
    Vec d(ops.n_free_edges());
    for (size_t i = 0; i < ops.free_edges.size(); ++i) d[i] = edge_vals[ops.free_edges[i]];
    SpMat D = diag_matrix(d);
    SpMat Stp = ops.Stpd();
    SpMatI St_ci = slice(ops.St, ops.constrained_nodes, ops.free_edges);
    SpMat St_c = St_ci.cast<double>();
    NodeOperator L;
    L.ff = Stp * D * SpMat(Stp.transpose());
    L.fc = Stp * D * SpMat(St_c.transpose());
    return L;
}

std::pair<SpMat, SpMat> laplacians(const TopoOps& ops, const Vec& eps_edge,
                                   const Vec& sigma_edge) {
    SpMat L_eps = node_laplacian(ops, eps_edge).ff;
    SpMat L_sigma = node_laplacian(ops, sigma_edge).ff;
    if (!ops.constrained_nodes.empty()) {
        Eigen::SimplicialLLT<SpMat> llt(L_eps);
        if (llt.info() != Eigen::Success)
            fail(ErrorCode::assembly_bug, "L_eps failed Cholesky despite ebc boundary");
    }
    return {L_eps, L_sigma};
}

namespace {

// Node unit carriers: averages of the incident edge/facet hodge entries.
void node_unit_carriers(const Grid& grid, const TopoOps& ops, const MaterialSet& mats,
                        Vec& node_eps, Vec& node_nu) {
    const long N = grid.n_nodes();
    node_eps = Vec::Zero(N);
    node_nu = Vec::Zero(N);
    Vec edge_cnt = Vec::Zero(N), facet_cnt = Vec::Zero(N);
    for (int e = 0; e < ops.n_edges(); ++e) {
        long s = ops.edges[e];
        int a = static_cast<int>(grid.slot_axis(s));
        long n = grid.slot_node(s);
        long stride = (a == 0) ? 1 : (a == 1 ? grid.np(Axis::x) : static_cast<long>(grid.np(Axis::x)) * grid.np(Axis::y));
        for (long node : {n, n + stride}) {
            node_eps[node] += mats.eps_edge[e];
            edge_cnt[node] += 1;
        }
    }
    for (int f = 0; f < ops.n_facets(); ++f) {
        long s = ops.facets[f];
        int a = static_cast<int>(grid.slot_axis(s));
        long n = grid.slot_node(s);
        auto ijk = grid.decode_node(n);
        int b = (a + 1) % 3, c = (a + 2) % 3;
        int di[3] = {0, 0, 0};
        for (int db = 0; db <= 1; ++db)
            for (int dc = 0; dc <= 1; ++dc) {
                di[0] = ijk[0];
                di[1] = ijk[1];
                di[2] = ijk[2];
                di[b] += db;
                di[c] += dc;
                long node = grid.node_id(di[0], di[1], di[2]);
                node_nu[node] += mats.nu_facet[f];
                facet_cnt[node] += 1;
            }
    }
    for (long n = 0; n < N; ++n) {
        if (edge_cnt[n] > 0) node_eps[n] /= edge_cnt[n];
        if (facet_cnt[n] > 0) node_nu[n] /= facet_cnt[n];
    }
}

}  // namespace

SpMat scaling_matrix(ScalingMode mode, const Grid& grid, const TopoOps& ops,
                     const MaterialSet& mats, const SpMat& L_eps) {
    const int n = static_cast<int>(L_eps.rows());
    if (mode == ScalingMode::paper && n > 2000)
        fail(ErrorCode::size_limit, "paper-mode scaling matrix needs a dense Laplacian inverse; "
                                    "node count " + std::to_string(n) + " exceeds 2000");
    Vec node_eps, node_nu;
    node_unit_carriers(grid, ops, mats, node_eps, node_nu);
    Vec d(n);
    for (int i = 0; i < n; ++i) {
        long node = ops.free_nodes[i];
        d[i] = std::sqrt(node_nu[node] / node_eps[node]);
    }

    Eigen::SimplicialLLT<SpMat> llt(L_eps);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::singular_laplacian, "L_eps not SPD while building the scaling matrix");

    if (mode == ScalingMode::paper) {
        Mat Linv = llt.solve(Mat::Identity(n, n));
        Mat MN = d.asDiagonal() * Linv * d.asDiagonal();
        MN = 0.5 * (MN + MN.transpose());  // symmetrize roundoff
        return MN.sparseView();
    }
    // diagonal mode: exact diagonal of the paper matrix
    Vec diag(n);
    Vec e = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        Vec col = llt.solve(e);
        diag[i] = d[i] * d[i] * col[i];
        e[i] = 0.0;
    }
    return diag_matrix(diag);
}

namespace {

double overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

int plane_index(const Grid& grid, Axis a, double value, const char* what) {
    const auto& c = grid.spec().coords[static_cast<int>(a)];
    double tol = 1e-9 * std::max(1.0, std::abs(c.back() - c.front()));
    for (size_t i = 0; i < c.size(); ++i)
        if (std::abs(c[i] - value) <= tol) return static_cast<int>(i);
    fail(ErrorCode::invalid_spec, std::string(what) + " not snapped to a grid plane");
}

}  // namespace

Winding discretise_winding(const Grid& grid, const TopoOps& ops, const WindingDecl& decl) {
    Winding w;
    w.id = decl.id;
    w.turns = decl.turns;
    const long N = grid.n_nodes();
    w.X.resize(ops.n_edges());

    if (decl.type == "box") {
        int a = static_cast<int>(decl.axis);
        int b = (a + 1) % 3, c = (a + 2) % 3;
        double lo[3] = {decl.box[0], decl.box[2], decl.box[4]};
        double hi[3] = {decl.box[1], decl.box[3], decl.box[5]};
        w.cross_area = (hi[b] - lo[b]) * (hi[c] - lo[c]);
        double chi = decl.turns / w.cross_area;
        for (int e = 0; e < ops.n_edges(); ++e) {
            long s = ops.edges[e];
            if (static_cast<int>(grid.slot_axis(s)) != a) continue;
            auto ijk = grid.decode_node(grid.slot_node(s));
            int idx[3] = {ijk[0], ijk[1], ijk[2]};
            double mid = grid.coord(static_cast<Axis>(a), idx[a]) + 0.5 * grid.edge_len(s);
            if (!(mid > lo[a] && mid < hi[a])) continue;
            // clipped dual facet: sum of quadrant rectangles inside the box
            double area = 0.0;
            for (int db = -1; db <= 0; ++db)
                for (int dc = -1; dc <= 0; ++dc) {
                    int qb = idx[b] + db, qc = idx[c] + dc;
                    if (qb < 0 || qb >= grid.np(static_cast<Axis>(b)) - 1) continue;
                    if (qc < 0 || qc >= grid.np(static_cast<Axis>(c)) - 1) continue;
                    double pb = grid.coord(static_cast<Axis>(b), idx[b]);
                    double pc = grid.coord(static_cast<Axis>(c), idx[c]);
                    double eb0 = (db == -1) ? pb - 0.5 * grid.spacing(static_cast<Axis>(b), qb) : pb;
                    double eb1 = (db == -1) ? pb : pb + 0.5 * grid.spacing(static_cast<Axis>(b), qb);
                    double ec0 = (dc == -1) ? pc - 0.5 * grid.spacing(static_cast<Axis>(c), qc) : pc;
                    double ec1 = (dc == -1) ? pc : pc + 0.5 * grid.spacing(static_cast<Axis>(c), qc);
                    area += overlap(eb0, eb1, lo[b], hi[b]) * overlap(ec0, ec1, lo[c], hi[c]);
                }
            if (area > 0) w.X.insert(e) = chi * area;
        }
    } else if (decl.type == "loop") {
        w.loop = true;
        int a = static_cast<int>(decl.axis);
        int b = (a + 1) % 3, c = (a + 2) % 3;
        Axis ab = static_cast<Axis>(b), ac = static_cast<Axis>(c);
        int b0 = plane_index(grid, ab, decl.hole[0], "winding hole");
        int b1 = plane_index(grid, ab, decl.hole[1], "winding hole");
        int c0 = plane_index(grid, ac, decl.hole[2], "winding hole");
        int c1 = plane_index(grid, ac, decl.hole[3], "winding hole");
        int k0 = plane_index(grid, decl.axis, decl.span[0], "winding span");
        int k1 = plane_index(grid, decl.axis, decl.span[1], "winding span");
        double h_span = decl.span[1] - decl.span[0];
        w.cross_area = h_span;  // sheet current: unit radial thickness absorbed in the stream

        // facet-typed stream over axis-normal facets of the enclosed columns,
        // weighted with the dual edge length clipped to the span
        w.stream_facet.resize(ops.n_facets());
        for (int ib = b0; ib < b1; ++ib)
            for (int ic = c0; ic < c1; ++ic)
                for (int k = k0; k <= k1; ++k) {
                    int idx[3];
                    idx[a] = k;
                    idx[b] = ib;
                    idx[c] = ic;
                    long s = a * N + grid.node_id(idx[0], idx[1], idx[2]);
                    if (!grid.facet_real(s)) continue;
                    double za = grid.coord(decl.axis, k);
                    double lo = za - (k > 0 ? 0.5 * grid.spacing(decl.axis, k - 1) : 0.0);
                    double hi = za + (k < grid.np(decl.axis) - 1 ? 0.5 * grid.spacing(decl.axis, k) : 0.0);
                    double len = overlap(lo, hi, decl.span[0], decl.span[1]);
                    if (len > 0) w.stream_facet.insert(ops.facet_of_slot[s]) = decl.turns / h_span * len;
                }
        Vec Xd = ops.Cd().transpose() * Vec(w.stream_facet);
        for (int e = 0; e < ops.n_edges(); ++e)
            if (Xd[e] != 0.0) w.X.insert(e) = Xd[e];

        // edge-typed mirror stream on axis edges of the enclosed node columns
        // (closure); C * stream_edge circulates through the first cell ring
        w.stream_edge.resize(ops.n_edges());
        for (int ib = b0; ib <= b1; ++ib)
            for (int ic = c0; ic <= c1; ++ic)
                for (int k = k0; k < k1; ++k) {
                    int idx[3];
                    idx[a] = k;
                    idx[b] = ib;
                    idx[c] = ic;
                    long s = a * N + grid.node_id(idx[0], idx[1], idx[2]);
                    if (!grid.edge_real(s)) continue;
                    w.stream_edge.insert(ops.edge_of_slot[s]) =
                        decl.turns / h_span * grid.edge_len(s);
                }
    } else {
        fail(ErrorCode::invalid_spec, "winding type must be 'loop' or 'box'");
    }

    // cells incident to the support edges (used for the disjointness check)
    std::vector<char> seen(ops.n_cells(), 0);
    for (Eigen::SparseVector<double>::InnerIterator it(w.X); it; ++it) {
        long s = ops.edges[it.index()];
        int a = static_cast<int>(grid.slot_axis(s));
        auto ijk = grid.decode_node(grid.slot_node(s));
        int b = (a + 1) % 3, cax = (a + 2) % 3;
        for (int db = -1; db <= 0; ++db)
            for (int dc = -1; dc <= 0; ++dc) {
                int q[3] = {ijk[0], ijk[1], ijk[2]};
                q[b] += db;
                q[cax] += dc;
                if (q[b] < 0 || q[b] >= grid.np(static_cast<Axis>(b)) - 1) continue;
                if (q[cax] < 0 || q[cax] >= grid.np(static_cast<Axis>(cax)) - 1) continue;
                int cell = ops.cell_of_slot[grid.node_id(q[0], q[1], q[2])];
                if (cell >= 0 && !seen[cell]) {
                    seen[cell] = 1;
                    w.support_cells.push_back(cell);
                }
            }
    }
    std::sort(w.support_cells.begin(), w.support_cells.end());
    return w;
}

bool windings_intersect(const Winding& a, const Winding& b) {
    Eigen::SparseVector<double> prod = a.X.cwiseProduct(b.X);
    for (Eigen::SparseVector<double>::InnerIterator it(prod); it; ++it)
        if (it.value() != 0.0) return true;
    return false;
}

Vec source_h_field(const TopoOps& ops, const Eigen::SparseVector<double>& X) {
    Vec x = Vec(X);
    double xnorm = x.norm();
    if (xnorm == 0.0) return Vec::Zero(ops.n_facets());
    Vec div = ops.Std() * x;
    if (div.norm() > 1e-10 * xnorm * 6.0)
        fail(ErrorCode::source_inconsistent,
             "winding current has nonzero discrete divergence; a source field needs a loop");
    // minimum-norm h with C^T h = X: h = C y, (C^T C) y = X, solved by CG on
    // the consistent semidefinite normal equations
    SpMat C = ops.Cd();
    SpMat CtC = SpMat(C.transpose()) * C;
    Vec y = cg_solve(CtC, x, 1e-13, 20000);
    Vec h = C * y;
    if ((SpMat(C.transpose()) * h - x).norm() > 1e-10 * xnorm)
        fail(ErrorCode::source_inconsistent, "curl system for the source field did not close");
    return h;
}

}  // namespace fitsim
