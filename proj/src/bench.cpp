#include "fitsim/bench.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <memory>

#include "fitsim/daekit.hpp"
#include "fitsim/errors.hpp"

namespace fitsim {

using nlohmann::json;

std::string data_dir() {
    if (const char* env = std::getenv("FITSIM_DATA_DIR")) return env;
#ifdef FITSIM_DATA_DIR
    return FITSIM_DATA_DIR;
#else
    return "data";
#endif
}

namespace {

struct BenchmarkInfo {
    const char* scene_file;
    const char* formulation;
    MqsGauge gauge = MqsGauge::graddiv;
};

const std::map<std::string, BenchmarkInfo>& benchmark_table() {
    static const std::map<std::string, BenchmarkInfo> table = {
        {"copper-bar", {"copper-bar.json", "aphi-lorenz"}},
        {"inductor-core-a", {"inductor-core.json", "mqs-astar", MqsGauge::none}},
        {"inductor-core-t", {"inductor-core.json", "mqs-tomega"}},
        {"eqs-layered", {"eqs-layered.json", "eqs"}},
        {"spiral-mini", {"spiral-mini.json", "fullwave-eh"}},
        {"reference-3x3", {"reference-3x3.json", "aphi-lorenz"}},
    };
    return table;
}

SceneDoc load_fixture(const char* file) {
    namespace fs = std::filesystem;
    fs::path p = fs::path(data_dir()) / "scenes" / file;
    if (!fs::exists(p)) fail(ErrorCode::scene_not_found, "scene fixture missing: " + p.string());
    return load_scene_file(p.string());
}

}  // namespace

const std::vector<std::string>& benchmark_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& [id, info] : benchmark_table()) v.push_back(id);
        return v;
    }();
    return ids;
}

SceneDoc resolve_scene(const std::string& id_or_path) {
    auto it = benchmark_table().find(id_or_path);
    if (it != benchmark_table().end()) return load_fixture(it->second.scene_file);
    if (std::filesystem::exists(id_or_path)) return load_scene_file(id_or_path);
    fail(ErrorCode::scene_not_found, "no builtin benchmark or scene file '" + id_or_path + "'");
}

SceneDoc scene_copper_bar() { return load_fixture("copper-bar.json"); }
SceneDoc scene_inductor() { return load_fixture("inductor-core.json"); }
SceneDoc scene_eqs_layered() { return load_fixture("eqs-layered.json"); }

AphiFieldExtractor::AphiFieldExtractor(const Model& model, const DaeSystem& sys) : model_(&model) {
    off_phi_ = sys.block("phi").offset;
    off_pi_ = sys.block("pi").offset;
    nN_ = sys.block("phi").size;
    nE_ = sys.block("pi").size;
    Gp_ = SpMat(-model.ops.Stpd().transpose());
    SpMat St_c = slice(model.ops.St, model.ops.constrained_nodes, model.ops.free_edges).cast<double>();
    Gfc_ = SpMat(-St_c.transpose());
    for (const auto& [id, sig] : model.doc.drives) {
        Vec g = model.drive_node_pattern(id);
        if (g.size() > 0 && g.maxCoeff() > 0) lifts_.emplace_back(Gfc_ * g, sig);
    }
}

Vec AphiFieldExtractor::e_free(double t, const Vec& x) const {
    Vec e = -x.segment(off_pi_, nE_) - Gp_ * x.segment(off_phi_, nN_);
    for (const auto& [pattern, sig] : lifts_) e -= pattern * sig.value(t);
    return e;
}

PlaneCurrentProbe::PlaneCurrentProbe(const Model& model, Axis axis, double coord,
                                     const std::array<double, 4>& box) {
    const Grid& g = model.grid;
    int a = static_cast<int>(axis);
    int b = (a + 1) % 3, c = (a + 2) % 3;
    for (size_t fe = 0; fe < model.ops.free_edges.size(); ++fe) {
        int e = model.ops.free_edges[fe];
        long s = model.ops.edges[e];
        if (static_cast<int>(g.slot_axis(s)) != a) continue;
        auto ijk = g.decode_node(g.slot_node(s));
        double lo = g.coord(axis, ijk[a]);
        double hi = lo + g.edge_len(s);
        if (!(lo <= coord && coord < hi)) continue;
        double pb = g.coord(static_cast<Axis>(b), ijk[b]);
        double pc = g.coord(static_cast<Axis>(c), ijk[c]);
        double tol = 1e-12;
        if (pb < box[0] - tol || pb > box[1] + tol || pc < box[2] - tol || pc > box[3] + tol)
            continue;
        double cond = model.mats.sigma_edge[e];
        if (cond > 0) terms_.emplace_back(static_cast<int>(fe), cond);
    }
}

double PlaneCurrentProbe::eval(const Vec& e_free) const {
    double i = 0.0;
    for (const auto& [fe, cond] : terms_) i += cond * e_free[fe];
    return i;
}

namespace {

json series_extrema(const TimeSeries& ts) {
    json out;
    for (const auto& name : ts.scalar_names) {
        const auto& v = ts.scalars.at(name);
        double lo = v.empty() ? 0 : v[0], hi = lo;
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        out[name] = {{"min", lo}, {"max", hi}};
    }
    return out;
}

// scalar extractors per formulation family
void attach_extractors(const Model& model, const DaeSystem& sys, EulerOptions& opts,
                       std::shared_ptr<AphiFieldExtractor>& aphi) {
    if (sys.tag == "aphi-lorenz" || sys.tag == "aphi-coulomb") {
        aphi = std::make_shared<AphiFieldExtractor>(model, sys);
        Vec eps = model.eps_free;
        Vec nu = model.mats.nu_facet;
        SpMat Cp = model.ops.Cpd();
        int off_a = sys.block("a").offset, nE = sys.block("a").size;
        opts.extractors.emplace_back("E_elec", [aphi, eps](int, double t, const Vec& x) {
            Vec e = aphi->e_free(t, x);
            return 0.5 * e.dot(eps.cwiseProduct(e));
        });
        opts.extractors.emplace_back("E_mag", [Cp, nu, off_a, nE](int, double, const Vec& x) {
            Vec b = Cp * x.segment(off_a, nE);
            return 0.5 * b.dot(nu.cwiseProduct(b));
        });
        // conduction current through the mid plane of a region named "bar"
        for (const auto& r : model.doc.regions) {
            if (r.name != "bar") continue;
            double zc = 0.5 * (r.box[4] + r.box[5]);
            auto probe = std::make_shared<PlaneCurrentProbe>(
                model, Axis::z, zc, std::array<double, 4>{r.box[0], r.box[1], r.box[2], r.box[3]});
            opts.extractors.emplace_back("i_bar", [aphi, probe](int, double t, const Vec& x) {
                return probe->eval(aphi->e_free(t, x));
            });
        }
        for (const auto& [id, sig] : model.doc.drives) {
            Signal s = sig;
            opts.extractors.emplace_back("v_" + id,
                                         [s](int, double t, const Vec&) { return s.value(t); });
        }
    } else if (sys.tag == "mqs-astar") {
        Vec nu = model.mats.nu_facet;
        SpMat Cp = model.ops.Cpd();
        opts.extractors.emplace_back("E_mag", [Cp, nu](int, double, const Vec& x) {
            Vec b = Cp * x;
            return 0.5 * b.dot(nu.cwiseProduct(b));
        });
        // stranded voltage u = -X^T e with e = -da/dt (phi gauge-fixed to zero)
        auto prev = std::make_shared<Vec>();
        auto sources = model.edge_current_sources();
        if (!sources.empty()) {
            Vec X = sources[0].first;
            opts.extractors.emplace_back("u_coil", [X, prev](int step, double, const Vec& x) {
                double u = 0.0;
                if (step > 0 && prev->size() == x.size()) u = X.dot(x - *prev);
                *prev = x;
                return u;
            });
        }
        for (const auto& [wid, did] : model.doc.excitations) {
            Signal s = model.drive(did);
            opts.extractors.emplace_back("i_" + wid,
                                         [s](int, double t, const Vec&) { return s.value(t); });
        }
    } else if (sys.tag == "mqs-tomega") {
        // E_mag from H = h_s i(t) + P t + St_g^T psi
        // (the aux operators mirror the assembly in mqs_tomega)
    } else if (sys.tag == "eqs" || sys.tag == "eqs-mixed") {
        Vec eps = model.eps_free;
        SpMat Gp = SpMat(-model.ops.Stpd().transpose());
        SpMat St_c =
            slice(model.ops.St, model.ops.constrained_nodes, model.ops.free_edges).cast<double>();
        SpMat Gfc = SpMat(-St_c.transpose());
        std::vector<std::pair<Vec, Signal>> lifts;
        for (const auto& [id, sig] : model.doc.drives) {
            Vec g = model.drive_node_pattern(id);
            if (g.size() > 0 && g.maxCoeff() > 0) lifts.emplace_back(Gfc * g, sig);
        }
        int nN = sys.block("phi").size;
        opts.extractors.emplace_back("E_elec", [eps, Gp, lifts, nN](int, double t, const Vec& x) {
            Vec e = -(Gp * x.segment(0, nN));
            for (const auto& [pattern, sig] : lifts) e -= pattern * sig.value(t);
            return 0.5 * e.dot(eps.cwiseProduct(e));
        });
        for (const auto& [id, sig] : model.doc.drives) {
            Signal s = sig;
            opts.extractors.emplace_back("f_" + id,
                                         [s](int, double t, const Vec&) { return s.value(t); });
        }
    }
}

}  // namespace

RunResult run_benchmark(const std::string& id_or_path, const RunOverrides& overrides) {
    auto t_start = std::chrono::steady_clock::now();

    auto it = benchmark_table().find(id_or_path);
    SceneDoc doc = resolve_scene(id_or_path);
    Model model = build_model(doc);

    std::string tag = !overrides.formulation.empty() ? overrides.formulation
                      : it != benchmark_table().end() ? it->second.formulation
                                                      : doc.default_formulation;
    if (tag.empty()) fail(ErrorCode::invalid_spec, "no formulation selected");

    DaeSystem sys;
    if (tag == "mqs-astar" && it != benchmark_table().end())
        sys = mqs_astar(model, it->second.gauge);
    else
        sys = assemble_formulation(model, tag);

    double dt = overrides.dt > 0 ? overrides.dt : doc.default_dt;
    double t_end = overrides.t_end > 0 ? overrides.t_end : doc.default_t_end;
    TimeSeries series;
    if (tag == "fullwave-eh") {
        double dt_cfl = 0.95 * cfl_timestep(model.grid, model.sub);
        if (dt <= 0) dt = dt_cfl;
        if (t_end <= 0) t_end = 600 * dt;
        TimeGrid tg{0.0, t_end, dt};
        LeapfrogOptions lf;
        // port voltages u = -X^T e for every winding
        int nF = sys.block("h").size;
        for (const auto& [pattern, sig] : model.edge_current_sources()) {
            Vec X = pattern;
            lf.extractors.emplace_back("u_port", [X, nF](int, double, const Vec& x) {
                return -X.dot(x.segment(nF, X.size()));
            });
        }
        Vec e0 = Vec::Zero(sys.block("e").size);
        Vec h0 = Vec::Zero(sys.block("h").size);
        series = leapfrog(sys, tg, e0, h0, lf);
    } else {
        if (dt <= 0 || t_end <= 0)
            fail(ErrorCode::invalid_spec, "scene or overrides must set dt and t_end");
        TimeGrid tg{0.0, t_end, dt};
        EulerOptions opts;
        opts.store_state_every = overrides.store_state_every;
        std::shared_ptr<AphiFieldExtractor> aphi;
        attach_extractors(model, sys, opts, aphi);
        if (tag == "mqs-tomega") {
            // reconstruct H = h_s i(t) + P t + St_g^T psi on the real edges
            Vec mu = model.mats.mu_edge;
            Vec hs = Vec::Zero(model.ops.n_edges());
            Signal isig;
            if (!model.doc.excitations.empty()) {
                const Winding& w = model.winding(model.doc.excitations[0].first);
                hs = Vec(w.stream_edge);
                isig = model.drive(model.doc.excitations[0].second);
            }
            SpMat P = sys.aux.at("H_from_t");
            SpMat Gt = sys.aux.at("H_from_psi");
            int nT = sys.block("t").size;
            int nPsi = sys.block("psi").size;
            opts.extractors.emplace_back(
                "E_mag", [mu, hs, isig, P, Gt, nT, nPsi](int, double t, const Vec& x) {
                    Vec H = hs * isig.value(t) + P * x.segment(0, nT) +
                            Gt * x.segment(nT, nPsi);
                    return 0.5 * H.dot(mu.cwiseProduct(H));
                });
            for (const auto& [wid, did] : model.doc.excitations) {
                Signal s = model.drive(did);
                opts.extractors.emplace_back(
                    "i_" + wid, [s](int, double t, const Vec&) { return s.value(t); });
            }
        }
        series = implicit_euler(sys, tg, opts);
    }

    json summary;
    summary["scene"] = doc.name;
    summary["benchmark"] = it != benchmark_table().end() ? id_or_path : "";
    summary["formulation"] = tag;
    summary["cells"] = model.ops.n_cells();
    summary["grid_points"] = model.grid.n_nodes();
    json dofs;
    dofs["system"] = sys.n();
    dofs["free_edges"] = model.ops.n_free_edges();
    dofs["free_nodes"] = model.ops.n_free_nodes();
    for (const auto& b : sys.blocks) dofs["blocks"][b.name] = b.size;
    summary["dofs"] = dofs;
    if (sys.expected_index >= 0) summary["expected_index"] = sys.expected_index;
    if (overrides.probe_index && sys.n() <= 600) {
        PencilReport rep = index_probe(sys.M, sys.K);
        summary["index_probe"] = {{"index", rep.index_estimate},
                                  {"ranks", rep.rank_sequence},
                                  {"regular", rep.regular}};
    } else {
        summary["index_probe"] = "skipped";
    }
    summary["dt"] = dt;
    summary["t_end"] = t_end;
    summary["steps"] = static_cast<int>(series.t.size()) - 1;
    summary["series"] = series_extrema(series);
    if (doc.metadata.contains("published")) summary["published"] = doc.metadata["published"];
    summary["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(series), std::move(summary)};
}

}  // namespace fitsim
