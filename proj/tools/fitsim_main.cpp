#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "fitsim/bench.hpp"
#include "fitsim/daekit.hpp"
#include "fitsim/errors.hpp"

using namespace fitsim;
using nlohmann::json;

namespace {

int report_error(const Error& e) {
    json err;
    err["error"] = to_string(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << std::endl;
    return 1;
}

int report_error(const std::exception& e) {
    json err;
    err["error"] = "InternalError";
    err["message"] = e.what();
    std::cerr << err.dump() << std::endl;
    return 2;
}

void write_states(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot open " + path);
    char buf[32];
    for (size_t i = 0; i < series.states.size(); ++i) {
        size_t step = i * std::max(series.state_stride, 1);
        std::snprintf(buf, sizeof(buf), "%.17g", series.t[std::min(step, series.t.size() - 1)]);
        out << buf;
        for (int k = 0; k < series.states[i].size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.states[i][k]);
            out << "," << buf;
        }
        out << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FIT electromagnetic field simulator and DAE index analyzer"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a benchmark or scene in time domain");
    std::string scene, formulation, output, summary_path, dump_file;
    double dt = 0.0, t_end = 0.0;
    int dump_every = 0;
    sim->add_option("--scene", scene, "benchmark id or scene JSON path")->required();
    sim->add_option("--formulation", formulation, "formulation tag override");
    sim->add_option("--dt", dt, "time step (s)");
    sim->add_option("--t-end", t_end, "end time (s)");
    sim->add_option("--output", output, "series CSV path");
    sim->add_option("--summary", summary_path, "summary JSON path (default: stdout)");
    sim->add_option("--dump-every", dump_every, "store the full state every N steps");
    sim->add_option("--dump-file", dump_file, "path for the state dump CSV");

    // analyze-index
    auto* ana = app.add_subcommand("analyze-index", "numerical DAE index of a formulation");
    std::string a_scene, a_form, a_gauge = "graddiv";
    double rank_tol = 100.0;
    ana->add_option("--scene", a_scene, "benchmark id or scene JSON path")->required();
    ana->add_option("--formulation", a_form, "formulation tag")->required();
    ana->add_option("--gauge", a_gauge, "mqs-astar gauge: graddiv|none")
        ->check(CLI::IsMember({"graddiv", "none"}));
    ana->add_option("--rank-tol-factor", rank_tol, "rank tolerance multiplier");

    // export-operators
    auto* exp = app.add_subcommand("export-operators", "write incidence operators to files");
    std::string e_scene, e_outdir, e_format = "matrixmarket";
    exp->add_option("--scene", e_scene, "benchmark id or scene JSON path")->required();
    exp->add_option("--outdir", e_outdir, "output directory")->required();
    exp->add_option("--format", e_format, "export format")->check(CLI::IsMember({"matrixmarket"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            RunOverrides ov;
            ov.formulation = formulation;
            ov.dt = dt;
            ov.t_end = t_end;
            ov.store_state_every = dump_every;
            RunResult result = run_benchmark(scene, ov);
            if (!output.empty()) result.series.write_csv(output);
            if (dump_every > 0 && !dump_file.empty()) write_states(result.series, dump_file);
            if (!summary_path.empty()) {
                std::ofstream sf(summary_path);
                if (!sf) fail(ErrorCode::io_error, "cannot open " + summary_path);
                sf << result.summary.dump(2) << "\n";
            } else {
                std::cout << result.summary.dump(2) << std::endl;
            }
        } else if (ana->parsed()) {
            SceneDoc doc = resolve_scene(a_scene);
            Model model = build_model(doc);
            DaeSystem sys = (a_form == "mqs-astar" && a_gauge == "none")
                                ? mqs_astar(model, MqsGauge::none)
                                : assemble_formulation(model, a_form);
            PencilReport rep = index_probe(sys.M, sys.K, rank_tol);
            json out;
            out["scene"] = doc.name;
            out["formulation"] = a_form;
            out["n"] = rep.n;
            out["index"] = rep.index_estimate;
            out["rank_sequence"] = rep.rank_sequence;
            out["regular"] = rep.regular;
            out["rank_tol_factor"] = rep.rank_tol_factor;
            if (sys.expected_index >= 0) out["expected_index"] = sys.expected_index;
            std::cout << out.dump(2) << std::endl;
        } else if (exp->parsed()) {
            SceneDoc doc = resolve_scene(e_scene);
            Model model = build_model(doc);
            export_operators(model.ops, e_outdir);
            json out;
            out["written"] = {"C.mtx", "S.mtx", "St.mtx", "G.mtx", "C_free.mtx", "St_free.mtx"};
            out["outdir"] = e_outdir;
            std::cout << out.dump(2) << std::endl;
        }
    } catch (const Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        return report_error(e);
    }
    return 0;
}
