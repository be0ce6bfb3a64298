#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fitsim/grid.hpp"
#include "fitsim/materials.hpp"

namespace fitsim {

/// Time signal with an analytic derivative (rhs assembly needs both).
struct Signal {
    enum class Kind { sin, ramp, constant };
    Kind kind = Kind::constant;
    double amplitude = 1.0;
    double frequency = 0.0;  // Hz, sin only
    double ramp_time = 0.0;  // s, ramp only

    double value(double t) const;
    double dot(double t) const;
};

struct RegionDecl {
    std::string name;
    std::array<double, 6> box{};  // x0,x1,y0,y1,z0,z1
    std::optional<double> eps_r, mu_r, sigma;
    bool pec = false;
};

/// Parsed scene configuration document (the JSON external interface).
struct SceneDoc {
    std::string name;
    GridSpec grid;
    BoundarySpec boundary;
    double bg_eps_r = 1.0, bg_mu_r = 1.0, bg_sigma = 0.0;
    std::vector<RegionDecl> regions;
    std::vector<WindingDecl> windings;
    std::map<std::string, Signal> drives;
    std::vector<std::pair<std::string, std::string>> excitations;  // winding id -> drive id
    std::string default_formulation;
    double default_dt = 0.0, default_t_end = 0.0;
    nlohmann::json metadata;

    nlohmann::json to_json() const;
};

SceneDoc parse_scene(const nlohmann::json& j);
SceneDoc load_scene_file(const std::string& path);

/// Labels every real cell with its material values. Conductor and winding
/// support cells must be disjoint.
SubdomainMap label_subdomains(const Grid& grid, const TopoOps& ops, const SceneDoc& doc,
                              const std::vector<Winding>& windings);

/// A scene realised on its grid: operators, materials and windings assembled,
/// immutable afterwards and shareable across integrations.
struct Model {
    SceneDoc doc;
    Grid grid;
    TopoOps ops;
    SubdomainMap sub;
    MaterialSet mats;
    std::vector<Winding> windings;

    Vec eps_free, sigma_free;  // hodge diagonals restricted to free edges

    const Winding& winding(const std::string& id) const;
    const Signal& drive(const std::string& id) const;

    /// Indicator over ops.constrained_nodes for nodes held at the given drive.
    Vec drive_node_pattern(const std::string& id) const;
    bool has_driven_contacts() const;

    /// j_s contributions over free edges, one (pattern, signal) pair per
    /// excited winding.
    std::vector<std::pair<Vec, Signal>> edge_current_sources() const;
};

Model build_model(const SceneDoc& doc);

}  // namespace fitsim
