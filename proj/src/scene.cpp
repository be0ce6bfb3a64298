#include "fitsim/scene.hpp"

#include <cmath>
#include <fstream>

#include "fitsim/constants.hpp"
#include "fitsim/errors.hpp"

namespace fitsim {

using nlohmann::json;

double Signal::value(double t) const {
    switch (kind) {
        case Kind::sin: return amplitude * std::sin(2.0 * kPi * frequency * t);
        case Kind::ramp: return t >= ramp_time ? amplitude : amplitude * t / ramp_time;
        case Kind::constant: return amplitude;
    }
    return 0.0;
}

double Signal::dot(double t) const {
    switch (kind) {
        case Kind::sin:
            return amplitude * 2.0 * kPi * frequency * std::cos(2.0 * kPi * frequency * t);
        case Kind::ramp: return t >= ramp_time ? 0.0 : amplitude / ramp_time;
        case Kind::constant: return 0.0;
    }
    return 0.0;
}

namespace {

std::vector<double> parse_axis(const json& j, const char* axis) {
    if (!j.contains(axis)) fail(ErrorCode::invalid_spec, std::string("grid missing axis ") + axis);
    const json& a = j.at(axis);
    if (a.is_array()) return a.get<std::vector<double>>();
    double lo = a.at("min").get<double>(), hi = a.at("max").get<double>();
    int cells = a.at("cells").get<int>();
    if (cells < 1) fail(ErrorCode::invalid_spec, "axis needs at least one cell");
    std::vector<double> out(cells + 1);
    for (int i = 0; i <= cells; ++i) out[i] = lo + (hi - lo) * i / cells;
    return out;
}

BoundaryClass parse_class(const std::string& s) {
    if (s == "ebc") return BoundaryClass::ebc;
    if (s == "mbc") return BoundaryClass::mbc;
    fail(ErrorCode::invalid_spec, "boundary class must be 'ebc' or 'mbc', got '" + s + "'");
}

Axis parse_axis_name(const std::string& s) {
    if (s == "x") return Axis::x;
    if (s == "y") return Axis::y;
    if (s == "z") return Axis::z;
    fail(ErrorCode::invalid_spec, "axis must be x, y or z");
}

Signal parse_signal(const json& j) {
    Signal s;
    std::string type = j.value("type", "const");
    s.amplitude = j.value("amplitude", 1.0);
    if (type == "sin") {
        s.kind = Signal::Kind::sin;
        s.frequency = j.at("frequency").get<double>();
    } else if (type == "ramp") {
        s.kind = Signal::Kind::ramp;
        s.ramp_time = j.at("ramp_time").get<double>();
    } else if (type == "const") {
        s.kind = Signal::Kind::constant;
    } else {
        fail(ErrorCode::invalid_spec, "unknown drive type '" + type + "'");
    }
    return s;
}

}  // namespace

SceneDoc parse_scene(const json& j) {
    SceneDoc doc;
    doc.name = j.value("name", "scene");
    const json& g = j.at("grid");
    doc.grid.coords[0] = parse_axis(g, "x");
    doc.grid.coords[1] = parse_axis(g, "y");
    doc.grid.coords[2] = parse_axis(g, "z");

    if (j.contains("boundary")) {
        const json& b = j.at("boundary");
        if (b.contains("faces"))
            for (auto& [face, cls] : b.at("faces").items())
                doc.boundary.face_class[face_from_name(face)] = parse_class(cls.get<std::string>());
        if (b.contains("patches"))
            for (const json& p : b.at("patches")) {
                BoundaryPatch patch;
                patch.face = face_from_name(p.at("face").get<std::string>());
                auto box = p.at("box").get<std::vector<double>>();
                if (box.size() != 4) fail(ErrorCode::invalid_spec, "patch box needs 4 entries");
                std::copy(box.begin(), box.end(), patch.box.begin());
                patch.cls = parse_class(p.value("class", "ebc"));
                patch.drive = p.value("drive", "");
                doc.boundary.patches.push_back(patch);
            }
    }

    if (j.contains("background")) {
        const json& bg = j.at("background");
        doc.bg_eps_r = bg.value("eps_r", 1.0);
        doc.bg_mu_r = bg.value("mu_r", 1.0);
        doc.bg_sigma = bg.value("sigma", 0.0);
    }

    if (j.contains("regions"))
        for (const json& r : j.at("regions")) {
            RegionDecl d;
            d.name = r.value("name", "region");
            auto box = r.at("box").get<std::vector<double>>();
            if (box.size() != 6) fail(ErrorCode::invalid_spec, "region box needs 6 entries");
            std::copy(box.begin(), box.end(), d.box.begin());
            if (r.contains("eps_r")) d.eps_r = r.at("eps_r").get<double>();
            if (r.contains("mu_r")) d.mu_r = r.at("mu_r").get<double>();
            if (r.contains("sigma")) d.sigma = r.at("sigma").get<double>();
            d.pec = r.value("pec", false);
            doc.regions.push_back(d);
        }

    if (j.contains("windings"))
        for (const json& w : j.at("windings")) {
            WindingDecl d;
            d.id = w.at("id").get<std::string>();
            d.type = w.at("type").get<std::string>();
            d.axis = parse_axis_name(w.value("axis", "z"));
            d.turns = w.value("turns", 1.0);
            if (d.type == "loop") {
                auto hole = w.at("hole").get<std::vector<double>>();
                auto span = w.at("span").get<std::vector<double>>();
                if (hole.size() != 4 || span.size() != 2)
                    fail(ErrorCode::invalid_spec, "loop winding needs hole[4] and span[2]");
                std::copy(hole.begin(), hole.end(), d.hole.begin());
                std::copy(span.begin(), span.end(), d.span.begin());
            } else {
                auto box = w.at("box").get<std::vector<double>>();
                if (box.size() != 6) fail(ErrorCode::invalid_spec, "box winding needs box[6]");
                std::copy(box.begin(), box.end(), d.box.begin());
            }
            doc.windings.push_back(d);
        }

    if (j.contains("drives"))
        for (auto& [id, sig] : j.at("drives").items()) doc.drives[id] = parse_signal(sig);

    if (j.contains("excitations"))
        for (const json& e : j.at("excitations"))
            doc.excitations.emplace_back(e.at("winding").get<std::string>(),
                                         e.at("drive").get<std::string>());

    if (j.contains("integration")) {
        const json& it = j.at("integration");
        doc.default_formulation = it.value("formulation", "");
        doc.default_dt = it.value("dt", 0.0);
        doc.default_t_end = it.value("t_end", 0.0);
    }
    doc.metadata = j.value("metadata", json::object());
    return doc;
}

json SceneDoc::to_json() const {
    json j;
    j["name"] = name;
    j["grid"] = {{"x", grid.coords[0]}, {"y", grid.coords[1]}, {"z", grid.coords[2]}};
    json faces;
    for (int f = 0; f < 6; ++f)
        faces[face_name(f)] = boundary.face_class[f] == BoundaryClass::ebc ? "ebc" : "mbc";
    j["boundary"]["faces"] = faces;
    for (const auto& p : boundary.patches) {
        json pj;
        pj["face"] = face_name(p.face);
        pj["box"] = std::vector<double>(p.box.begin(), p.box.end());
        pj["class"] = p.cls == BoundaryClass::ebc ? "ebc" : "mbc";
        if (!p.drive.empty()) pj["drive"] = p.drive;
        j["boundary"]["patches"].push_back(pj);
    }
    j["background"] = {{"eps_r", bg_eps_r}, {"mu_r", bg_mu_r}, {"sigma", bg_sigma}};
    for (const auto& r : regions) {
        json rj;
        rj["name"] = r.name;
        rj["box"] = std::vector<double>(r.box.begin(), r.box.end());
        if (r.eps_r) rj["eps_r"] = *r.eps_r;
        if (r.mu_r) rj["mu_r"] = *r.mu_r;
        if (r.sigma) rj["sigma"] = *r.sigma;
        if (r.pec) rj["pec"] = true;
        j["regions"].push_back(rj);
    }
    for (const auto& w : windings) {
        json wj;
        wj["id"] = w.id;
        wj["type"] = w.type;
        wj["axis"] = w.axis == Axis::x ? "x" : (w.axis == Axis::y ? "y" : "z");
        wj["turns"] = w.turns;
        if (w.type == "loop") {
            wj["hole"] = std::vector<double>(w.hole.begin(), w.hole.end());
            wj["span"] = std::vector<double>(w.span.begin(), w.span.end());
        } else {
            wj["box"] = std::vector<double>(w.box.begin(), w.box.end());
        }
        j["windings"].push_back(wj);
    }
    for (const auto& [id, s] : drives) {
        json sj;
        sj["amplitude"] = s.amplitude;
        switch (s.kind) {
            case Signal::Kind::sin:
                sj["type"] = "sin";
                sj["frequency"] = s.frequency;
                break;
            case Signal::Kind::ramp:
                sj["type"] = "ramp";
                sj["ramp_time"] = s.ramp_time;
                break;
            case Signal::Kind::constant: sj["type"] = "const"; break;
        }
        j["drives"][id] = sj;
    }
    for (const auto& [w, d] : excitations) j["excitations"].push_back({{"winding", w}, {"drive", d}});
    if (!default_formulation.empty() || default_dt > 0) {
        j["integration"] = {{"formulation", default_formulation},
                            {"dt", default_dt},
                            {"t_end", default_t_end}};
    }
    if (!metadata.empty()) j["metadata"] = metadata;
    return j;
}

SceneDoc load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::scene_not_found, "cannot open scene file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::invalid_spec, std::string("scene JSON parse error: ") + e.what());
    }
    return parse_scene(j);
}

namespace {

bool point_in_box(const double p[3], const std::array<double, 6>& box, double tol) {
    return p[0] >= box[0] - tol && p[0] <= box[1] + tol && p[1] >= box[2] - tol &&
           p[1] <= box[3] + tol && p[2] >= box[4] - tol && p[2] <= box[5] + tol;
}

}  // namespace

SubdomainMap label_subdomains(const Grid& grid, const TopoOps& ops, const SceneDoc& doc,
                              const std::vector<Winding>& windings) {
    const int nC = ops.n_cells();
    SubdomainMap sub;
    sub.eps = Vec::Constant(nC, doc.bg_eps_r * kEps0);
    sub.mu = Vec::Constant(nC, doc.bg_mu_r * kMu0);
    sub.sigma = Vec::Constant(nC, doc.bg_sigma);
    sub.label.assign(nC, CellLabel::air);
    sub.winding_of_cell.assign(nC, -1);
    sub.pec.assign(nC, 0);

    double tol = 1e-9 * std::max({grid.extent(Axis::x), grid.extent(Axis::y), grid.extent(Axis::z)});

    std::vector<int> hits(nC, 0);
    for (const auto& region : doc.regions) {
        double vol = 0.0;
        for (int c = 0; c < nC; ++c) {
            long slot = ops.cells[c];
            auto ijk = grid.decode_node(slot);
            double ctr[3] = {
                grid.coord(Axis::x, ijk[0]) + 0.5 * grid.spacing(Axis::x, ijk[0]),
                grid.coord(Axis::y, ijk[1]) + 0.5 * grid.spacing(Axis::y, ijk[1]),
                grid.coord(Axis::z, ijk[2]) + 0.5 * grid.spacing(Axis::z, ijk[2])};
            if (!point_in_box(ctr, region.box, tol)) continue;
            vol += grid.cell_vol(slot);
            hits[c]++;
            if (region.eps_r) sub.eps[c] = *region.eps_r * kEps0;
            if (region.mu_r) sub.mu[c] = *region.mu_r * kMu0;
            if (region.sigma) sub.sigma[c] = *region.sigma;
            if (region.pec) sub.pec[c] = 1;
            CellLabel lbl = CellLabel::air;
            if (region.pec) lbl = CellLabel::pec;
            else if (region.sigma && *region.sigma > 0) lbl = CellLabel::conductor;
            else if (region.eps_r && *region.eps_r != doc.bg_eps_r) lbl = CellLabel::dielectric;
            else if (region.mu_r && *region.mu_r != doc.bg_mu_r) lbl = CellLabel::magnetic;
            sub.label[c] = hits[c] > 1 ? CellLabel::composite : lbl;
        }
        sub.region_volumes[region.name] = vol;
    }

    for (size_t w = 0; w < windings.size(); ++w) {
        for (int c : windings[w].support_cells) {
            if (sub.sigma[c] > 0)
                fail(ErrorCode::disjointness_violation,
                     "winding '" + windings[w].id + "' overlaps a conducting cell");
            sub.winding_of_cell[c] = static_cast<int>(w);
            if (sub.label[c] == CellLabel::air) sub.label[c] = CellLabel::source;
        }
    }
    return sub;
}

Model build_model(const SceneDoc& doc) {
    Model m;
    m.doc = doc;
    m.grid = build_grid(doc.grid, doc.boundary);

    // interior perfect conductors constrain their edges like ebc
    std::vector<char> pec_edges;
    bool any_pec = false;
    for (const auto& r : doc.regions) any_pec = any_pec || r.pec;
    if (any_pec) {
        pec_edges.assign(m.grid.n_slots(), 0);
        double tol = 1e-9 * std::max({m.grid.extent(Axis::x), m.grid.extent(Axis::y),
                                      m.grid.extent(Axis::z)});
        const long N = m.grid.n_nodes();
        for (long s = 0; s < m.grid.n_slots(); ++s) {
            if (!m.grid.edge_real(s)) continue;
            int a = static_cast<int>(m.grid.slot_axis(s));
            auto ijk = m.grid.decode_node(m.grid.slot_node(s));
            double p0[3] = {m.grid.coord(Axis::x, ijk[0]), m.grid.coord(Axis::y, ijk[1]),
                            m.grid.coord(Axis::z, ijk[2])};
            double p1[3] = {p0[0], p0[1], p0[2]};
            p1[a] = m.grid.coord(static_cast<Axis>(a), ijk[a] + 1);
            for (const auto& r : doc.regions) {
                if (!r.pec) continue;
                if (point_in_box(p0, r.box, tol) && point_in_box(p1, r.box, tol)) {
                    pec_edges[s] = 1;
                    break;
                }
            }
        }
        (void)N;
    }

    m.ops = build_topology(m.grid, any_pec ? &pec_edges : nullptr);

    for (const auto& d : doc.windings) m.windings.push_back(discretise_winding(m.grid, m.ops, d));
    for (size_t i = 0; i < m.windings.size(); ++i)
        for (size_t j = i + 1; j < m.windings.size(); ++j)
            if (windings_intersect(m.windings[i], m.windings[j]))
                fail(ErrorCode::intersection_violation,
                     "windings '" + m.windings[i].id + "' and '" + m.windings[j].id + "' intersect");

    m.sub = label_subdomains(m.grid, m.ops, doc, m.windings);
    m.mats = assemble_materials(m.grid, m.ops, m.sub);
    m.eps_free = m.mats.free(m.mats.eps_edge, m.ops);
    m.sigma_free = m.mats.free(m.mats.sigma_edge, m.ops);
    return m;
}

const Winding& Model::winding(const std::string& id) const {
    for (const auto& w : windings)
        if (w.id == id) return w;
    fail(ErrorCode::invalid_spec, "unknown winding '" + id + "'");
}

const Signal& Model::drive(const std::string& id) const {
    auto it = doc.drives.find(id);
    if (it == doc.drives.end()) fail(ErrorCode::invalid_spec, "unknown drive '" + id + "'");
    return it->second;
}

Vec Model::drive_node_pattern(const std::string& id) const {
    Vec g = Vec::Zero(ops.constrained_nodes.size());
    for (size_t i = 0; i < ops.constrained_nodes.size(); ++i)
        if (grid.node_drive(ops.constrained_nodes[i]) == id) g[i] = 1.0;
    return g;
}

bool Model::has_driven_contacts() const {
    for (int n : ops.constrained_nodes)
        if (!grid.node_drive(n).empty()) return true;
    return false;
}

std::vector<std::pair<Vec, Signal>> Model::edge_current_sources() const {
    std::vector<std::pair<Vec, Signal>> out;
    for (const auto& [wid, did] : doc.excitations) {
        const Winding& w = winding(wid);
        Vec xf = Vec::Zero(ops.n_free_edges());
        for (Eigen::SparseVector<double>::InnerIterator it(w.X); it; ++it) {
            int fe = ops.free_edge_of[it.index()];
            if (fe >= 0) xf[fe] = it.value();
        }
        out.emplace_back(xf, drive(did));
    }
    return out;
}

}  // namespace fitsim
