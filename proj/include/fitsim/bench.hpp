#pragma once

#include <json.hpp>

#include "fitsim/formulations.hpp"
#include "fitsim/timeint.hpp"

namespace fitsim {

/// Directory holding the scene fixtures; FITSIM_DATA_DIR env overrides the
/// compile-time default.
std::string data_dir();

/// Built-in benchmark ids: copper-bar, inductor-core-a, inductor-core-t,
/// eqs-layered, spiral-mini, reference-3x3.
const std::vector<std::string>& benchmark_ids();

/// Loads the scene fixture behind a benchmark id or a JSON file path.
SceneDoc resolve_scene(const std::string& id_or_path);

SceneDoc scene_copper_bar();
SceneDoc scene_inductor();  // one scene serves both the A* and T-Omega runs
SceneDoc scene_eqs_layered();

struct RunOverrides {
    std::string formulation;  // empty: benchmark/scene default
    double dt = 0.0;
    double t_end = 0.0;
    int store_state_every = 0;
    bool probe_index = true;  // skipped automatically above the dense limit
};

struct RunResult {
    TimeSeries series;
    nlohmann::json summary;
};

/// Runs one benchmark (or an arbitrary scene file) and collects the series and
/// summary. Deterministic: identical config produces identical output.
RunResult run_benchmark(const std::string& id_or_path, const RunOverrides& overrides = {});

/// Reconstructs the free-edge electric voltages from an A-Phi state, including
/// the driven Dirichlet lift.
class AphiFieldExtractor {
public:
    AphiFieldExtractor(const Model& model, const DaeSystem& sys);
    Vec e_free(double t, const Vec& x) const;

private:
    const Model* model_;
    int off_phi_, off_pi_, nN_, nE_;
    SpMat Gp_, Gfc_;
    std::vector<std::pair<Vec, Signal>> lifts_;  // Gfc*g patterns per drive
};

/// Conduction current through the axis-normal plane at `coord` inside a
/// transverse box: sum of M_sigma * e over the crossing free edges.
class PlaneCurrentProbe {
public:
    PlaneCurrentProbe(const Model& model, Axis axis, double coord,
                      const std::array<double, 4>& transverse_box);
    double eval(const Vec& e_free) const;

private:
    std::vector<std::pair<int, double>> terms_;  // free edge index, conductance
};

}  // namespace fitsim
