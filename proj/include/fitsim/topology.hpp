#pragma once

#include <vector>

#include "fitsim/grid.hpp"
#include "fitsim/sparse_util.hpp"

namespace fitsim {

/// Discrete incidence operators of the primal/dual grid pair over compressed
/// real entities, with entries in {-1,0,1}:
///   C  : facets x edges   (curl on primal-edge quantities)
///   S  : cells  x facets  (divergence on primal-facet quantities)
///   St : nodes  x edges   (dual divergence; dual facets are indexed by edges)
/// G is never assembled independently: G = -St^T, Gt = -S^T, Ct = C^T.
/// Free subsets remove ebc-constrained edges/nodes; phantom objects never
/// enter the compressed spaces at all.
struct TopoOps {
    // real entity lists (grid slots) and slot -> compressed id maps (-1 gaps)
    std::vector<long> edges, facets, cells;
    std::vector<int> edge_of_slot, facet_of_slot, cell_of_slot;

    SpMatI C;   // facets x edges
    SpMatI S;   // cells x facets
    SpMatI St;  // nodes x edges

    // ebc projection (selection indices into the compressed spaces)
    std::vector<int> free_edges, free_nodes, constrained_nodes;
    std::vector<int> free_edge_of, free_node_of;  // -1 where constrained

    SpMatI Cp;   // facets x free edges
    SpMatI Stp;  // free nodes x free edges

    int n_edges() const { return static_cast<int>(edges.size()); }
    int n_facets() const { return static_cast<int>(facets.size()); }
    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_nodes() const { return static_cast<int>(St.rows()); }
    int n_free_edges() const { return static_cast<int>(free_edges.size()); }
    int n_free_nodes() const { return static_cast<int>(free_nodes.size()); }

    SpMatI G() const { return SpMatI(-St.transpose()); }
    SpMatI Gp() const { return SpMatI(-Stp.transpose()); }

    // double-precision views used by assembly
    SpMat Cd() const { return C.cast<double>(); }
    SpMat Cpd() const { return Cp.cast<double>(); }
    SpMat Std() const { return St.cast<double>(); }
    SpMat Stpd() const { return Stp.cast<double>(); }
};

/// Assembles C, S, St over the real entities of the grid and applies the
/// boundary projection. `extra_constrained_edges` marks additional edge slots
/// to constrain (interior perfect-conductor regions); nodes whose every
/// incident edge is constrained are removed as well.
TopoOps build_topology(const Grid& grid,
                       const std::vector<char>* extra_constrained_edges = nullptr);

/// Re-applies the ebc projection and returns the free index lists for one
/// entity kind (edges or nodes). Throws DegenerateProblem on an empty set.
std::vector<int> project_free(const TopoOps& ops, const Grid& grid, EntityKind kind);

/// Writes C, S, St (and projected variants) in MatrixMarket format.
void export_operators(const TopoOps& ops, const std::string& outdir);

}  // namespace fitsim
