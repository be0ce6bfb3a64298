#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fitsim/scene.hpp"
#include "fitsim/sparse_util.hpp"

namespace fitsim {

struct Block {
    std::string name;
    int offset = 0;
    int size = 0;
};

/// Algebraic constraint a consistent initial value must satisfy. eval returns
/// (residual norm, scale); the value is consistent when residual <= tol*scale.
struct ConsistencyPredicate {
    std::string name;
    std::function<std::pair<double, double>(const Vec&)> eval;
};

enum class SolverHint { direct, cg_spsd };

/// r(t) = sum over terms of pattern * signal(t) (or its time derivative).
struct RhsTerm {
    Vec pattern;
    Signal signal;
    bool use_derivative = false;
};

/// Pieces the staggered leapfrog update needs beyond (M, K).
struct FullwaveParts {
    Vec m_eps;   // free-edge hodge diagonal
    Vec m_nu;    // facet hodge diagonal
    SpMat C;     // facets x free edges
    std::vector<RhsTerm> j_terms;  // source currents on free edges
};

/// Linear constant-coefficient system M dx/dt + K x = r(t); a DAE when M is
/// singular. Block layout names the state slices of the formulation.
struct DaeSystem {
    std::string tag;
    SpMat M, K;
    std::vector<RhsTerm> rhs_terms;
    Vec x0;
    std::vector<Block> blocks;
    int expected_index = -1;  // -1 when the formulation does not assert one
    std::vector<ConsistencyPredicate> predicates;
    SolverHint hint = SolverHint::direct;
    std::optional<FullwaveParts> fullwave;
    std::map<std::string, SpMat> aux;  // formulation-specific post-processing operators

    int n() const { return static_cast<int>(M.rows()); }
    Vec rhs(double t) const;
    const Block& block(const std::string& name) const;
    Eigen::VectorBlock<const Vec> part(const Vec& x, const std::string& name) const;
};

}  // namespace fitsim
