#pragma once

#include <stdexcept>
#include <string>

namespace fitsim {

/// Machine-readable error codes. The CLI maps these to the "error" field of
/// the error JSON emitted on stderr.
enum class ErrorCode {
    invalid_spec,
    index_error,
    disjointness_violation,
    material_error,
    intersection_violation,
    source_inconsistent,
    formulation_misuse,
    missing_charge,
    singular_laplacian,
    gauge_insufficient,
    tree_error,
    degenerate_problem,
    size_limit,
    step_matrix_singular,
    solve_error,
    no_convergence,
    singular_system,
    irregular_pencil,
    resolution_error,
    scene_not_found,
    assembly_bug,
    io_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_spec: return "InvalidSpec";
        case ErrorCode::index_error: return "IndexError";
        case ErrorCode::disjointness_violation: return "DisjointnessViolation";
        case ErrorCode::material_error: return "MaterialError";
        case ErrorCode::intersection_violation: return "IntersectionViolation";
        case ErrorCode::source_inconsistent: return "SourceInconsistent";
        case ErrorCode::formulation_misuse: return "FormulationMisuse";
        case ErrorCode::missing_charge: return "MissingCharge";
        case ErrorCode::singular_laplacian: return "SingularLaplacian";
        case ErrorCode::gauge_insufficient: return "GaugeInsufficient";
        case ErrorCode::tree_error: return "TreeError";
        case ErrorCode::degenerate_problem: return "DegenerateProblem";
        case ErrorCode::size_limit: return "SizeLimit";
        case ErrorCode::step_matrix_singular: return "StepMatrixSingular";
        case ErrorCode::solve_error: return "SolveError";
        case ErrorCode::no_convergence: return "NoConvergence";
        case ErrorCode::singular_system: return "SingularSystem";
        case ErrorCode::irregular_pencil: return "IrregularPencil";
        case ErrorCode::resolution_error: return "ResolutionError";
        case ErrorCode::scene_not_found: return "SceneNotFound";
        case ErrorCode::assembly_bug: return "AssemblyBug";
        case ErrorCode::io_error: return "IoError";
    }
    return "UnknownError";
}

}  // namespace fitsim
