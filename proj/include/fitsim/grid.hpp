#pragma once

#include <array>
#include <string>
#include <vector>

#include "fitsim/sparse_util.hpp"

namespace fitsim {

enum class Axis : int { x = 0, y = 1, z = 2 };
enum class BoundaryClass { ebc, mbc };
enum class EntityKind { node, edge, facet, cell };

/// Domain boundary faces in fixed order.
enum Face : int { xmin = 0, xmax, ymin, ymax, zmin, zmax };

const char* face_name(int face);
int face_from_name(const std::string& name);

/// Tensor-product point coordinates. Counts are per axis; coordinates must be
/// strictly increasing with at least two points each.
struct GridSpec {
    std::array<std::vector<double>, 3> coords;

    int np(Axis a) const { return static_cast<int>(coords[static_cast<int>(a)].size()); }
    void validate() const;
};

/// Rectangular sub-region of a boundary face, used for contact patches. The
/// box is given in the two in-plane coordinates (x-face: (y,z), y-face: (x,z),
/// z-face: (x,y)). A nonempty drive id marks a driven Dirichlet contact.
struct BoundaryPatch {
    int face = 0;
    std::array<double, 4> box{};
    BoundaryClass cls = BoundaryClass::ebc;
    std::string drive;
};

struct BoundarySpec {
    std::array<BoundaryClass, 6> face_class{BoundaryClass::ebc, BoundaryClass::ebc,
                                            BoundaryClass::ebc, BoundaryClass::ebc,
                                            BoundaryClass::ebc, BoundaryClass::ebc};
    std::vector<BoundaryPatch> patches;
};

/// Structured primal hexahedral grid with the canonical consecutive numbering
/// and the implicit dual grid. Edge/facet slots are allocated for all 3N
/// index positions; slots whose defining span exits the domain are phantom.
/// Dual edges and facets are truncated at the boundary, so boundary measures
/// are half/quarter values. Immutable after construction.
class Grid {
public:
    Grid(GridSpec spec, BoundarySpec bc);

    const GridSpec& spec() const { return spec_; }
    const BoundarySpec& boundary() const { return bc_; }

    int np(Axis a) const { return n_[static_cast<int>(a)]; }
    long n_nodes() const { return N_; }
    long n_slots() const { return 3 * N_; }  // edge or facet slots, x/y/z blocks

    // -- numbering (0-based internally) --
    long node_id(int i, int j, int k) const { return i + static_cast<long>(j) * n_[0] + static_cast<long>(k) * n_[0] * n_[1]; }
    long slot(Axis a, int i, int j, int k) const { return static_cast<int>(a) * N_ + node_id(i, j, k); }
    std::array<int, 3> decode_node(long id) const;
    Axis slot_axis(long s) const { return static_cast<Axis>(s / N_); }
    long slot_node(long s) const { return s % N_; }

    // -- reality masks --
    bool edge_real(long slot) const { return edge_real_[slot] != 0; }
    bool facet_real(long slot) const { return facet_real_[slot] != 0; }
    bool cell_real(long node_slot) const { return cell_real_[node_slot] != 0; }
    const std::vector<char>& edge_mask() const { return edge_real_; }
    const std::vector<char>& facet_mask() const { return facet_real_; }

    // -- primal and dual measures (zero on phantom slots) --
    double edge_len(long slot) const { return edge_len_[slot]; }
    double facet_area(long slot) const { return facet_area_[slot]; }
    double cell_vol(long node_slot) const { return cell_vol_[node_slot]; }
    double dual_edge_len(long facet_slot) const { return dual_edge_len_[facet_slot]; }
    double dual_facet_area(long edge_slot) const { return dual_facet_area_[edge_slot]; }
    double dual_node_vol(long node_id) const { return dual_node_vol_[node_id]; }

    double spacing(Axis a, int cell_index) const;
    double coord(Axis a, int i) const { return spec_.coords[static_cast<int>(a)][i]; }
    double domain_volume() const;
    double extent(Axis a) const;

    // -- boundary classification --
    /// True when the edge is tangential to an ebc face/patch (constrained to 0,
    /// or to a driven value via the patch drive).
    bool edge_ebc_constrained(long edge_slot) const { return edge_ebc_[edge_slot] != 0; }
    /// True when the node lies on an ebc face/patch.
    bool node_ebc_constrained(long node_id) const { return node_ebc_[node_id] != 0; }
    /// Drive id for driven contact nodes, empty for grounded/uncontrolled ones.
    const std::string& node_drive(long node_id) const;

    /// Boundary faces a node lies on (empty for interior nodes).
    std::vector<int> node_faces(long node_id) const;

private:
    void compute_masks();
    void compute_measures();
    void classify_boundary();

    GridSpec spec_;
    BoundarySpec bc_;
    int n_[3];
    long N_;

    std::vector<char> edge_real_, facet_real_, cell_real_;
    Vec edge_len_, facet_area_, cell_vol_;
    Vec dual_edge_len_, dual_facet_area_, dual_node_vol_;

    std::vector<char> edge_ebc_, node_ebc_;
    std::vector<int> node_drive_idx_;  // -1 or index into drive_names_
    std::vector<std::string> drive_names_;
};

/// Validates the spec and builds the grid with all measures and masks.
Grid build_grid(GridSpec spec, BoundarySpec bc);

/// Linear index in the paper's 1-based convention. Blocks for edges/facets are
/// ordered x, y, z; volume indices use the same stride formula as points.
long entity_index(const Grid& grid, int i, int j, int k, Axis direction, EntityKind kind);

}  // namespace fitsim
