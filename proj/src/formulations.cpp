#include "fitsim/formulations.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

#include "fitsim/errors.hpp"
#include "fitsim/linsolve.hpp"

namespace fitsim {

Vec DaeSystem::rhs(double t) const {
    Vec r = Vec::Zero(n());
    for (const auto& term : rhs_terms)
        r += term.pattern * (term.use_derivative ? term.signal.dot(t) : term.signal.value(t));
    return r;
}

const Block& DaeSystem::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    fail(ErrorCode::invalid_spec, "unknown state block '" + name + "'");
}

Eigen::VectorBlock<const Vec> DaeSystem::part(const Vec& x, const std::string& name) const {
    const Block& b = block(name);
    return x.segment(b.offset, b.size);
}

namespace {

/// Shared projected operator pieces of one model.
struct Pieces {
    int nE, nN, nF, nC;
    SpMat Cp, Stp;
    Vec eps, sigma;  // free-edge diagonals
    Vec nu;          // facet diagonal
    NodeOperator Leps, Lsig;
    SpMat SMe, SMs;     // St M_eps / St M_sigma over free spaces
    SpMat Gp, Gfc;      // gradient free/constrained column blocks (edges x nodes)
    SpMat curlcurl;     // C^T M_nu C over free edges
};

Pieces make_pieces(const Model& m) {
    Pieces p;
    p.nE = m.ops.n_free_edges();
    p.nN = m.ops.n_free_nodes();
    p.nF = m.ops.n_facets();
    p.nC = static_cast<int>(m.ops.constrained_nodes.size());
    p.Cp = m.ops.Cpd();
    p.Stp = m.ops.Stpd();
    p.eps = m.eps_free;
    p.sigma = m.sigma_free;
    p.nu = m.mats.nu_facet;
    p.Leps = node_laplacian(m.ops, m.mats.eps_edge);
    p.Lsig = node_laplacian(m.ops, m.mats.sigma_edge);
    p.SMe = p.Stp * diag_matrix(p.eps);
    p.SMs = p.Stp * diag_matrix(p.sigma);
    p.Gp = SpMat(-p.Stp.transpose());
    SpMat St_c = slice(m.ops.St, m.ops.constrained_nodes, m.ops.free_edges).cast<double>();
    p.Gfc = SpMat(-St_c.transpose());
    p.curlcurl = SpMat(p.Cp.transpose()) * diag_matrix(p.nu) * p.Cp;
    return p;
}

double opnorm_estimate(const SpMat& A, int iters = 40) {
    if (A.rows() == 0 || A.cols() == 0) return 0.0;
    Vec v = Vec::Ones(A.cols());
    v.normalize();
    double s = 0.0;
    SpMat At = A.transpose();
    for (int i = 0; i < iters; ++i) {
        Vec w = At * (A * v);
        double n = w.norm();
        if (n == 0) return 0.0;
        v = w / n;
        s = std::sqrt(n);
    }
    return s;
}

/// Dirichlet lift contributions -K_fc g v(t) - M_fc g vdot(t) for every driven
/// contact, given per-row coupling blocks (value-block, derivative-block).
void add_lift_terms(DaeSystem& sys, const Model& model, int row_offset, const SpMat& value_block,
                    const SpMat& deriv_block) {
    for (const auto& [id, sig] : model.doc.drives) {
        Vec g = model.drive_node_pattern(id);
        if (g.size() == 0 || g.maxCoeff() == 0.0) continue;
        if (value_block.size() > 0) {
            Vec v = value_block * g;
            if (v.norm() > 0) {
                RhsTerm t;
                t.pattern = Vec::Zero(sys.n());
                t.pattern.segment(row_offset, v.size()) = -v;
                t.signal = sig;
                sys.rhs_terms.push_back(std::move(t));
            }
        }
        if (deriv_block.size() > 0) {
            Vec v = deriv_block * g;
            if (v.norm() > 0) {
                RhsTerm t;
                t.pattern = Vec::Zero(sys.n());
                t.pattern.segment(row_offset, v.size()) = -v;
                t.signal = sig;
                t.use_derivative = true;
                sys.rhs_terms.push_back(std::move(t));
            }
        }
    }
}

void add_current_sources(DaeSystem& sys, const Model& model, int row_offset, double scale = 1.0) {
    for (const auto& [pattern, sig] : model.edge_current_sources()) {
        RhsTerm t;
        t.pattern = Vec::Zero(sys.n());
        t.pattern.segment(row_offset, pattern.size()) = scale * pattern;
        t.signal = sig;
        sys.rhs_terms.push_back(std::move(t));
    }
}

SpMat graddiv_regulariser(const Model& model, const Pieces& p, ScalingMode mode) {
    // M1: regularised M_sigma, theta * diag(M_eps) at 1 S/(F s) scale
    Vec m1 = p.sigma + 1e-6 * p.eps;
    SpMat MN = scaling_matrix(mode, model.grid, model.ops, model.mats, p.Leps.ff);
    SpMat D1 = diag_matrix(m1);
    return D1 * SpMat(p.Stp.transpose()) * MN * p.Stp * D1;
}

}  // namespace

DaeSystem fullwave_eh(const Model& model) {
    if (model.sub.sigma.size() > 0 && model.sub.sigma.maxCoeff() > 0)
        fail(ErrorCode::formulation_misuse,
             "full-wave E/H formulation assumes lossless media (sigma = 0)");
    Pieces p = make_pieces(model);
    DaeSystem sys;
    sys.tag = "fullwave-eh";
    const int n = p.nF + p.nE;
    BlockBuilder M(n, n), K(n, n);
    Vec inv_nu(p.nF);
    for (int f = 0; f < p.nF; ++f) inv_nu[f] = 1.0 / p.nu[f];
    M.add_diag(0, 0, inv_nu);
    M.add_diag(p.nF, p.nF, p.eps);
    K.add(0, p.nF, p.Cp);
    K.add(p.nF, 0, SpMat(p.Cp.transpose()), -1.0);
    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(n);
    sys.blocks = {{"h", 0, p.nF}, {"e", p.nF, p.nE}};
    sys.expected_index = 0;
    // Ampere row: M_eps de/dt - Ct h = -j_s
    add_current_sources(sys, model, p.nF, -1.0);

    FullwaveParts fw;
    fw.m_eps = p.eps;
    fw.m_nu = p.nu;
    fw.C = p.Cp;
    for (const auto& [pattern, sig] : model.edge_current_sources()) {
        RhsTerm t;
        t.pattern = pattern;
        t.signal = sig;
        fw.j_terms.push_back(std::move(t));
    }
    sys.fullwave = std::move(fw);
    return sys;
}

SpMat fullwave_transformed_stiffness(const Model& model) {
    Pieces p = make_pieces(model);
    Vec nu_h = p.nu.cwiseSqrt();
    Vec eps_ih = p.eps.cwiseSqrt().cwiseInverse();
    SpMat B = diag_matrix(nu_h) * p.Cp * diag_matrix(eps_ih);  // M_nu^1/2 C M_eps^-1/2
    const int n = p.nF + p.nE;
    BlockBuilder K(n, n);
    K.add(0, p.nF, B, -1.0);
    K.add(p.nF, 0, SpMat(B.transpose()));
    return K.finish();
}

namespace {

/// Shared assembly of the two gauged A-Phi systems; the gauge only changes the
/// first block row and the consistency predicates.
DaeSystem aphi_system(const Model& model, bool lorenz, ScalingMode mode) {
    Pieces p = make_pieces(model);
    if (model.ops.constrained_nodes.empty())
        fail(ErrorCode::singular_laplacian, "A-Phi gauged systems need ebc boundary nodes");
    DaeSystem sys;
    sys.tag = lorenz ? "aphi-lorenz" : "aphi-coulomb";
    const int nN = p.nN, nE = p.nE;
    const int off_q = 0, off_phi = nN, off_a = 2 * nN, off_pi = 2 * nN + nE;
    const int n = 2 * nN + 2 * nE;
    sys.blocks = {{"q", off_q, nN}, {"phi", off_phi, nN}, {"a", off_a, nE}, {"pi", off_pi, nE}};

    SpMat MEG = diag_matrix(p.eps) * p.Gp;  // M_eps G
    SpMat MSG = diag_matrix(p.sigma) * p.Gp;

    BlockBuilder M(n, n), K(n, n);
    // gauge row (q-sized): Lorenz couples the gauge to phi, Coulomb pins div a
    if (lorenz) {
        SpMat MN = scaling_matrix(mode, model.grid, model.ops, model.mats, p.Leps.ff);
        M.add(0, off_phi, p.Leps.ff);
        K.add(0, off_phi, p.Lsig.ff);
        K.add(0, off_a, SpMat(p.Leps.ff * MN * p.SMe));
    } else {
        K.add(0, off_a, p.SMe);
    }
    // Ampere row (a-sized equations)
    M.add(nN, off_phi, MEG);
    M.add(nN, off_pi, diag_matrix(p.eps));
    K.add(nN, off_phi, MSG);
    K.add(nN, off_a, p.curlcurl);
    K.add(nN, off_pi, diag_matrix(p.sigma));
    // Gauss row
    K.add(nN + nE, off_q, diag_matrix(Vec::Ones(nN)));
    K.add(nN + nE, off_phi, p.Leps.ff, -1.0);
    K.add(nN + nE, off_pi, p.SMe);
    // definition row da/dt = pi
    M.add_identity(2 * nN + nE, off_a, nE);
    K.add_identity(2 * nN + nE, off_pi, nE, -1.0);

    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(n);
    sys.expected_index = lorenz ? 1 : 2;

    add_current_sources(sys, model, nN);
    // Dirichlet lift of driven contacts: phi columns of the gauge, Ampere and
    // Gauss rows (a and pi are homogeneous on ebc)
    if (model.has_driven_contacts()) {
        if (lorenz) add_lift_terms(sys, model, 0, p.Lsig.fc, p.Leps.fc);
        SpMat MEG_fc = diag_matrix(p.eps) * p.Gfc;
        SpMat MSG_fc = diag_matrix(p.sigma) * p.Gfc;
        add_lift_terms(sys, model, nN, MSG_fc, MEG_fc);
        add_lift_terms(sys, model, nN + nE, SpMat(-p.Leps.fc), SpMat());
    }

    // consistency predicates per the gauge theorems
    SpMat Leps = p.Leps.ff, SMe = p.SMe;
    double sme_norm = opnorm_estimate(SMe);
    sys.predicates.push_back(
        {"charge", [Leps, SMe, off_q, off_phi, off_pi, nN, nE](const Vec& x) {
             Vec q = x.segment(off_q, nN);
             Vec rhs = Leps * x.segment(off_phi, nN) - SMe * x.segment(off_pi, nE);
             double res = (q - rhs).norm();
             double scale = std::max({q.norm(), rhs.norm(), 1e-300});
             return std::make_pair(res, scale);
         }});
    if (!lorenz) {
        sys.predicates.push_back({"divfree_a", [SMe, sme_norm, off_a, nE](const Vec& x) {
                                      Vec a = x.segment(off_a, nE);
                                      double res = (SMe * a).norm();
                                      double scale = std::max(sme_norm * a.norm(), 1e-300);
                                      return std::make_pair(res, scale);
                                  }});
        sys.predicates.push_back({"divfree_pi", [SMe, sme_norm, off_pi, nE](const Vec& x) {
                                      Vec pi = x.segment(off_pi, nE);
                                      double res = (SMe * pi).norm();
                                      double scale = std::max(sme_norm * pi.norm(), 1e-300);
                                      return std::make_pair(res, scale);
                                  }});
    }
    return sys;
}

}  // namespace

DaeSystem aphi_lorenz(const Model& model, ScalingMode mode) { return aphi_system(model, true, mode); }

DaeSystem aphi_coulomb(const Model& model, ScalingMode mode) {
    return aphi_system(model, false, mode);
}

DaeSystem wave_pair(const Model& model, const std::optional<ChargeSource>& q, ScalingMode mode) {
    Pieces p = make_pieces(model);
    if (model.ops.constrained_nodes.empty())
        fail(ErrorCode::singular_laplacian, "wave pair needs ebc boundary nodes");
    if (p.nN > 2000) fail(ErrorCode::size_limit, "wave pair uses dense Laplacian solves");

    SpMat MN = scaling_matrix(mode, model.grid, model.ops, model.mats, p.Leps.ff);
    Mat MNd = Mat(MN);
    Mat MNinv = MNd.llt().solve(Mat::Identity(p.nN, p.nN));
    // L_nu = Ct M_nu C - M_eps G M_N St M_eps
    SpMat Lnu = p.curlcurl - SpMat(diag_matrix(p.eps) * p.Gp * MN * p.SMe);
    Eigen::SimplicialLDLT<SpMat> leps(p.Leps.ff);
    Mat damp = MNinv * leps.solve(Mat(p.Lsig.ff));  // M_N^-1 L_eps^-1 L_sigma

    DaeSystem sys;
    sys.tag = "wave-pair";
    const int nE = p.nE, nN = p.nN;
    const int off_a = 0, off_v = nE, off_phi = 2 * nE, off_w = 2 * nE + nN;
    const int n = 2 * nE + 2 * nN;
    sys.blocks = {{"a", off_a, nE}, {"adot", off_v, nE}, {"phi", off_phi, nN}, {"phidot", off_w, nN}};

    BlockBuilder M(n, n), K(n, n);
    M.add_identity(0, off_a, nE);
    K.add_identity(0, off_v, nE, -1.0);
    M.add_diag(nE, off_v, p.eps);
    K.add(nE, off_a, Lnu);
    K.add(nE, off_v, diag_matrix(p.sigma));
    M.add_identity(2 * nE, off_phi, nN);
    K.add_identity(2 * nE, off_w, nN, -1.0);
    M.add(2 * nE + nN, off_w, MNinv.sparseView());
    K.add(2 * nE + nN, off_phi, p.Leps.ff);
    K.add(2 * nE + nN, off_w, damp.sparseView());

    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(n);
    sys.expected_index = 0;
    add_current_sources(sys, model, nE);
    if (q) {
        RhsTerm t;
        t.pattern = Vec::Zero(n);
        t.pattern.segment(2 * nE + nN, nN) = q->pattern;
        t.signal = q->signal;
        sys.rhs_terms.push_back(std::move(t));
    }

    // the sources must satisfy the discrete continuity equation at start-up
    double t0 = 0.0;
    Vec js = Vec::Zero(nE);
    for (const auto& [pattern, sig] : model.edge_current_sources()) js += pattern * sig.value(t0);
    Vec q0 = Vec::Zero(nN), qd0 = Vec::Zero(nN);
    if (q) {
        q0 = q->pattern * q->signal.value(t0);
        qd0 = q->pattern * q->signal.dot(t0);
    }
    Vec adot0 = sys.x0.segment(off_v, nE);
    double rel = continuity_residual(model, js, q0, qd0, adot0);
    if (rel > 1e-8)
        fail(ErrorCode::source_inconsistent,
             "current and charge sources violate the discrete continuity equation");
    return sys;
}

DaeSystem eqs_phi(const Model& model) {
    if (model.ops.constrained_nodes.empty())
        fail(ErrorCode::singular_laplacian, "electroquasistatic potential needs ebc somewhere");
    Pieces p = make_pieces(model);
    DaeSystem sys;
    sys.tag = "eqs";
    sys.M = p.Leps.ff;
    sys.K = p.Lsig.ff;
    sys.x0 = Vec::Zero(p.nN);
    sys.blocks = {{"phi", 0, p.nN}};
    sys.expected_index = 0;
    add_lift_terms(sys, model, 0, p.Lsig.fc, p.Leps.fc);
    return sys;
}

DaeSystem eqs_mixed(const Model& model) {
    if (model.ops.constrained_nodes.empty())
        fail(ErrorCode::singular_laplacian, "electroquasistatic potential needs ebc somewhere");
    Pieces p = make_pieces(model);
    DaeSystem sys;
    sys.tag = "eqs-mixed";
    const int nN = p.nN, n = 2 * nN;
    sys.blocks = {{"phi", 0, nN}, {"q", nN, nN}};
    BlockBuilder M(n, n), K(n, n);
    M.add_identity(0, nN, nN);
    K.add(0, 0, p.Lsig.ff);
    K.add(nN, 0, p.Leps.ff, -1.0);
    K.add_identity(nN, nN, nN);
    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(n);
    sys.expected_index = 1;
    add_lift_terms(sys, model, 0, p.Lsig.fc, SpMat());
    add_lift_terms(sys, model, nN, SpMat(-p.Leps.fc), SpMat());
    return sys;
}

DaeSystem mqs_astar(const Model& model, MqsGauge gauge) {
    Pieces p = make_pieces(model);
    DaeSystem sys;
    sys.tag = "mqs-astar";
    sys.M = diag_matrix(p.sigma);
    sys.K = p.curlcurl;
    if (gauge == MqsGauge::graddiv) {
        sys.K = SpMat(sys.K + graddiv_regulariser(model, p, ScalingMode::diagonal));
        SpMat pencil = SpMat(sys.M + sys.K);
        Eigen::SimplicialLLT<SpMat> llt(pencil);
        if (llt.info() != Eigen::Success)
            fail(ErrorCode::gauge_insufficient,
                 "grad-div gauged pencil is not positive definite at lambda = 1");
        sys.expected_index = 1;
        sys.hint = SolverHint::direct;
    } else {
        sys.expected_index = -1;
        sys.hint = SolverHint::cg_spsd;
    }
    sys.x0 = Vec::Zero(p.nE);
    sys.blocks = {{"a", 0, p.nE}};
    add_current_sources(sys, model, 0);
    return sys;
}

DaeSystem mqs_tomega(const Model& model) {
    const TopoOps& ops = model.ops;
    const Grid& grid = model.grid;
    const int nEr = ops.n_edges();
    const long N = grid.n_nodes();

    // conductor edges: at least one incident cell conducts
    std::vector<char> is_cond_edge(nEr, 0);
    std::vector<char> is_cond_node(N, 0);
    for (int e = 0; e < nEr; ++e) {
        long s = ops.edges[e];
        int a = static_cast<int>(grid.slot_axis(s));
        auto ijk = grid.decode_node(grid.slot_node(s));
        int b = (a + 1) % 3, c = (a + 2) % 3;
        for (int db = -1; db <= 0 && !is_cond_edge[e]; ++db)
            for (int dc = -1; dc <= 0; ++dc) {
                int q[3] = {ijk[0], ijk[1], ijk[2]};
                q[b] += db;
                q[c] += dc;
                if (q[b] < 0 || q[b] >= grid.np(static_cast<Axis>(b)) - 1) continue;
                if (q[c] < 0 || q[c] >= grid.np(static_cast<Axis>(c)) - 1) continue;
                int cell = ops.cell_of_slot[grid.node_id(q[0], q[1], q[2])];
                if (cell >= 0 && model.sub.sigma[cell] > 0) {
                    is_cond_edge[e] = 1;
                    break;
                }
            }
        if (is_cond_edge[e]) {
            long stride = (a == 0) ? 1
                                   : (a == 1 ? grid.np(Axis::x)
                                             : static_cast<long>(grid.np(Axis::x)) * grid.np(Axis::y));
            is_cond_node[grid.slot_node(s)] = 1;
            is_cond_node[grid.slot_node(s) + stride] = 1;
        }
    }
    std::vector<int> cond_edges;
    for (int e = 0; e < nEr; ++e)
        if (is_cond_edge[e]) cond_edges.push_back(e);
    if (cond_edges.empty()) fail(ErrorCode::tree_error, "T-Omega needs a conducting region");

    // breadth-first spanning tree over the conductor node/edge graph, rooted
    // at the lowest conductor node; ties broken by edge index
    std::vector<std::vector<std::pair<int, long>>> adj(N);  // node -> (edge, other)
    for (int e : cond_edges) {
        long s = ops.edges[e];
        int a = static_cast<int>(grid.slot_axis(s));
        long n0 = grid.slot_node(s);
        long stride = (a == 0) ? 1
                               : (a == 1 ? grid.np(Axis::x)
                                         : static_cast<long>(grid.np(Axis::x)) * grid.np(Axis::y));
        adj[n0].emplace_back(e, n0 + stride);
        adj[n0 + stride].emplace_back(e, n0);
    }
    long root = -1;
    long n_cond_nodes = 0;
    for (long n = 0; n < N; ++n)
        if (is_cond_node[n]) {
            n_cond_nodes++;
            if (root < 0) root = n;
        }
    std::vector<char> visited(N, 0), in_tree(nEr, 0);
    std::vector<long> queue{root};
    visited[root] = 1;
    long reached = 1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        long u = queue[qi];
        auto nb = adj[u];
        std::sort(nb.begin(), nb.end());
        for (auto& [e, v] : nb) {
            if (visited[v]) continue;
            visited[v] = 1;
            in_tree[e] = 1;
            queue.push_back(v);
            reached++;
        }
    }
    if (reached < n_cond_nodes)
        fail(ErrorCode::tree_error, "conducting region is disconnected");

    std::vector<int> cotree;
    for (int e : cond_edges)
        if (!in_tree[e]) cotree.push_back(e);
    const int nT = static_cast<int>(cotree.size());
    if (nT == 0) fail(ErrorCode::tree_error, "tree-cotree gauge removed every conductor edge");

    // psi on every node with one grounded to fix the Neumann constant
    const long ground = 0;
    std::vector<int> psi_nodes;
    psi_nodes.reserve(N - 1);
    for (long n = 0; n < N; ++n)
        if (n != ground) psi_nodes.push_back(static_cast<int>(n));

    SpMat P(nEr, nT);
    P.reserve(Eigen::VectorXi::Constant(nT, 1));
    for (int t = 0; t < nT; ++t) P.insert(cotree[t], t) = 1.0;
    P.makeCompressed();

    SpMat St_g = slice_rows(SpMat(model.ops.St.cast<double>()), psi_nodes);
    SpMat Dmu = diag_matrix(model.mats.mu_edge);
    SpMat Drho = diag_matrix(model.mats.rho_facet);
    SpMat C = model.ops.Cd();

    SpMat A_tt = SpMat(P.transpose()) * Dmu * P;
    SpMat A_tp = SpMat(P.transpose()) * Dmu * SpMat(St_g.transpose());
    SpMat K_tt = SpMat(P.transpose()) * SpMat(C.transpose()) * Drho * C * P;
    SpMat B_pt = St_g * Dmu * P;
    SpMat B_pp = St_g * Dmu * SpMat(St_g.transpose());

    // cotree property: the gauged curl-curl block must be regular
    if (nT <= 600) {
        Eigen::FullPivLU<Mat> lu(Mat(K_tt));
        if (!lu.isInvertible())
            fail(ErrorCode::tree_error, "cotree projection left a singular curl-curl block");
    }

    DaeSystem sys;
    sys.tag = "mqs-tomega";
    const int nPsi = static_cast<int>(psi_nodes.size());
    const int n = nT + nPsi;
    sys.blocks = {{"t", 0, nT}, {"psi", nT, nPsi}};
    BlockBuilder M(n, n), K(n, n);
    M.add(0, 0, A_tt);
    M.add(0, nT, A_tp);
    K.add(0, 0, K_tt);
    K.add(nT, 0, B_pt);
    K.add(nT, nT, B_pp);
    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(n);
    sys.expected_index = 1;
    // post-processing: H = h_s + P t + St_g^T psi on the real edges
    sys.aux["H_from_t"] = P;
    sys.aux["H_from_psi"] = SpMat(St_g.transpose());

    // r = [-P^T M_mu dhs/dt ; -St M_mu hs], hs from the loop winding streams
    for (const auto& [wid, did] : model.doc.excitations) {
        const Winding& w = model.winding(wid);
        if (!w.loop)
            fail(ErrorCode::source_inconsistent,
                 "T-Omega source field needs a loop winding (closed current path)");
        Vec hs = Vec(w.stream_edge);
        Vec mu_hs = model.mats.mu_edge.cwiseProduct(hs);
        RhsTerm t1;
        t1.pattern = Vec::Zero(n);
        t1.pattern.segment(0, nT) = -(SpMat(P.transpose()) * mu_hs);
        t1.signal = model.drive(did);
        t1.use_derivative = true;
        sys.rhs_terms.push_back(std::move(t1));
        RhsTerm t2;
        t2.pattern = Vec::Zero(n);
        t2.pattern.segment(nT, nPsi) = -(St_g * mu_hs);
        t2.signal = model.drive(did);
        sys.rhs_terms.push_back(std::move(t2));
    }
    return sys;
}

namespace {

DaeSystem darwin_system(const Model& model, bool variant_a, const std::optional<ChargeSource>& q,
                        bool graddiv_gauge, ScalingMode mode) {
    Pieces p = make_pieces(model);
    if (model.ops.constrained_nodes.empty())
        fail(ErrorCode::singular_laplacian, "Darwin systems need ebc boundary nodes");
    DaeSystem sys;
    sys.tag = variant_a ? "darwin-a" : "darwin-b";
    const int nE = p.nE, nN = p.nN, n = nE + nN;
    sys.blocks = {{"a", 0, nE}, {"phi", nE, nN}};

    SpMat MESt = diag_matrix(p.eps) * SpMat(p.Stp.transpose());
    SpMat MSSt = diag_matrix(p.sigma) * SpMat(p.Stp.transpose());

    BlockBuilder M(n, n), K(n, n);
    M.add_diag(0, 0, p.sigma);
    M.add(0, nE, MESt, -1.0);
    SpMat Knu = p.curlcurl;
    if (!variant_a && graddiv_gauge)
        Knu = SpMat(Knu + graddiv_regulariser(model, p, mode));
    K.add(0, 0, Knu);
    K.add(0, nE, MSSt, -1.0);
    if (variant_a) {
        M.add(nE, 0, p.SMe);
        K.add(nE, nE, p.Leps.ff);  // St M_eps St^T
    } else {
        M.add(nE, 0, p.SMs);
        M.add(nE, nE, p.Leps.ff);
        K.add(nE, nE, p.Lsig.ff);
    }
    sys.M = M.finish();
    sys.K = K.finish();
    sys.x0 = Vec::Zero(n);
    sys.expected_index = -1;  // open in the analysis; probe result is reported only

    add_current_sources(sys, model, 0);
    if (variant_a) {
        if (!q) fail(ErrorCode::missing_charge, "darwin-a needs prescribed charge data");
        RhsTerm t;
        t.pattern = Vec::Zero(n);
        t.pattern.segment(nE, nN) = q->pattern;
        t.signal = q->signal;
        sys.rhs_terms.push_back(std::move(t));
    }
    return sys;
}

}  // namespace

DaeSystem darwin_a(const Model& model, const std::optional<ChargeSource>& q) {
    return darwin_system(model, true, q, false, ScalingMode::diagonal);
}

DaeSystem darwin_b(const Model& model, bool graddiv_gauge, ScalingMode mode) {
    return darwin_system(model, false, std::nullopt, graddiv_gauge, mode);
}

double continuity_residual(const Model& model, const Vec& j_s, const Vec& q, const Vec& q_dot,
                           const Vec& a_dot) {
    Pieces p = make_pieces(model);
    Eigen::SimplicialLDLT<SpMat> leps(p.Leps.ff);
    if (leps.info() != Eigen::Success)
        fail(ErrorCode::singular_laplacian, "continuity residual needs an invertible L_eps");
    Vec t1 = p.Stp * j_s;
    Vec t2 = p.Lsig.ff * leps.solve(q);
    Vec u = p.Stp * p.sigma.cwiseProduct(a_dot);
    Vec v = p.Lsig.ff * leps.solve(Vec(p.Stp * p.eps.cwiseProduct(a_dot)));
    Vec res = t1 + t2 + q_dot - (u - v);
    double scale = std::max({t1.norm(), t2.norm(), q_dot.norm(), u.norm(), v.norm(), 1e-300});
    return res.norm() / scale;
}

DaeSystem assemble_formulation(const Model& model, const std::string& tag) {
    if (tag == "fullwave-eh") return fullwave_eh(model);
    if (tag == "aphi-lorenz") return aphi_lorenz(model);
    if (tag == "aphi-coulomb") return aphi_coulomb(model);
    if (tag == "wave-pair") return wave_pair(model);
    if (tag == "eqs") return eqs_phi(model);
    if (tag == "eqs-mixed") return eqs_mixed(model);
    if (tag == "mqs-astar") return mqs_astar(model, MqsGauge::graddiv);
    if (tag == "mqs-astar-ungauged") return mqs_astar(model, MqsGauge::none);
    if (tag == "mqs-tomega") return mqs_tomega(model);
    if (tag == "darwin-a") {
        // homogeneous charge data is the CLI default
        ChargeSource zero;
        zero.pattern = Vec::Zero(model.ops.n_free_nodes());
        zero.signal = Signal{};
        return darwin_a(model, zero);
    }
    if (tag == "darwin-b") return darwin_b(model);
    fail(ErrorCode::invalid_spec, "unknown formulation '" + tag + "'");
}

const std::vector<std::string>& formulation_tags() {
    static const std::vector<std::string> tags = {
        "fullwave-eh", "aphi-lorenz", "aphi-coulomb", "wave-pair", "eqs",
        "eqs-mixed",   "mqs-astar",   "mqs-tomega",   "darwin-a",  "darwin-b"};
    return tags;
}

}  // namespace fitsim
