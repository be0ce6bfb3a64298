#pragma once

#include <map>
#include <string>
#include <vector>

#include "fitsim/grid.hpp"
#include "fitsim/topology.hpp"

namespace fitsim {

enum class CellLabel { air, conductor, source, dielectric, magnetic, composite, pec };

/// Per-cell material values over the compressed real cells.
struct SubdomainMap {
    Vec eps, sigma, mu;
    std::vector<CellLabel> label;
    std::vector<int> winding_of_cell;  // index into the scene winding list, -1 elsewhere
    std::vector<char> pec;
    std::map<std::string, double> region_volumes;

    bool has_conductor() const;
};

enum class HodgeProperty { eps, sigma, nu };

/// Edge-type hodge entry: area-fraction weighted average over the <=4 cells
/// around the edge times |dual facet| / |edge|.
Vec edge_hodge(const Grid& grid, const TopoOps& ops, const Vec& cell_values);

/// Facet-type hodge entry: series average along the dual edge crossing the
/// facet times |dual edge| / |facet|.
Vec facet_hodge(const Grid& grid, const TopoOps& ops, const Vec& cell_values);

/// Diagonal of M_eps / M_sigma (edge space) or M_nu (facet space).
Vec assemble_hodge(const Grid& grid, const TopoOps& ops, const SubdomainMap& sub,
                   HodgeProperty property);

/// All hodge diagonals of a scene. Conductivity in source regions is dropped
/// (stranded conductors carry no eddy currents); rho = 1/sigma where sigma > 0.
struct MaterialSet {
    Vec eps_edge, sigma_edge, mu_edge;  // over real edges
    Vec nu_facet, rho_facet;            // over real facets

    Vec free(const Vec& edge_vals, const TopoOps& ops) const;
};

MaterialSet assemble_materials(const Grid& grid, const TopoOps& ops, const SubdomainMap& sub);

/// Node Laplacian -St M G = St M St^T restricted to free edges, split into the
/// free-free block and the coupling block to ebc-constrained nodes (used for
/// Dirichlet lifting).
struct NodeOperator {
    SpMat ff;  // free nodes x free nodes
    SpMat fc;  // free nodes x constrained nodes (ops.constrained_nodes order)
};

NodeOperator node_laplacian(const TopoOps& ops, const Vec& edge_vals);

/// (L_eps, L_sigma) over free nodes; L_eps must pass Cholesky when ebc nodes
/// exist, otherwise assembly signals the defect.
std::pair<SpMat, SpMat> laplacians(const TopoOps& ops, const Vec& eps_edge, const Vec& sigma_edge);

enum class ScalingMode { paper, diagonal };

/// Scaling matrix fixing the units of the discrete Lorenz gauge. Node unit
/// carriers are incident-entity averages of the edge/facet hodge entries.
/// paper mode forms the full dense matrix (node count <= 2000), diagonal mode
/// keeps its exact diagonal and scales to any grid.
SpMat scaling_matrix(ScalingMode mode, const Grid& grid, const TopoOps& ops,
                     const MaterialSet& mats, const SpMat& L_eps);

struct WindingDecl {
    std::string id;
    std::string type;  // "loop" | "box"
    Axis axis = Axis::z;
    std::array<double, 4> hole{};  // loop: enclosed box in the transverse plane
    std::array<double, 2> span{};  // loop: extent along the axis
    std::array<double, 6> box{};   // box: (x0,x1,y0,y1,z0,z1)
    double turns = 1.0;
};

/// Discretised winding function of one stranded conductor. X maps the lumped
/// current (A) to dual-facet source currents and satisfies the partition of
/// unity over every cross-sectional cut. Loop windings are built from a
/// discrete stream function, which makes them exactly divergence free; the
/// mirror stream (edge-typed) doubles as a source magnetic field for the
/// dual-grid formulation.
struct Winding {
    std::string id;
    double turns = 1.0;
    double cross_area = 0.0;
    Eigen::SparseVector<double> X;             // over real edges
    bool loop = false;
    Eigen::SparseVector<double> stream_facet;  // loop only: X = C^T stream_facet
    Eigen::SparseVector<double> stream_edge;   // loop only: facet current = C stream_edge
    std::vector<int> support_cells;            // compressed cell ids next to the current
};

Winding discretise_winding(const Grid& grid, const TopoOps& ops, const WindingDecl& decl);

/// Entrywise product check for Assumption-style non-intersection.
bool windings_intersect(const Winding& a, const Winding& b);

/// Source magnetic field with C^T h_s = X (discrete curl H_s = J_s), computed
/// as the minimum-norm least-squares solution. Rejects sources with nonzero
/// discrete divergence.
Vec source_h_field(const TopoOps& ops, const Eigen::SparseVector<double>& X);

}  // namespace fitsim
