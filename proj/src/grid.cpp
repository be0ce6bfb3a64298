#include "fitsim/grid.hpp"

#include <algorithm>
#include <cmath>

#include "fitsim/errors.hpp"

namespace fitsim {

namespace {
const char* kFaceNames[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
}

const char* face_name(int face) { return kFaceNames[face]; }

int face_from_name(const std::string& name) {
    for (int f = 0; f < 6; ++f)
        if (name == kFaceNames[f]) return f;
    fail(ErrorCode::invalid_spec, "unknown boundary face '" + name + "'");
}

void GridSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        const auto& c = coords[a];
        if (c.size() < 2)
            fail(ErrorCode::invalid_spec, "axis needs at least 2 points");
        for (size_t i = 1; i < c.size(); ++i)
            if (!(c[i] > c[i - 1]))
                fail(ErrorCode::invalid_spec, "coordinates must be strictly increasing");
    }
}

Grid::Grid(GridSpec spec, BoundarySpec bc) : spec_(std::move(spec)), bc_(std::move(bc)) {
    spec_.validate();
    for (int a = 0; a < 3; ++a) n_[a] = spec_.np(static_cast<Axis>(a));
    N_ = static_cast<long>(n_[0]) * n_[1] * n_[2];
    compute_masks();
    compute_measures();
    classify_boundary();
}

std::array<int, 3> Grid::decode_node(long id) const {
    int i = static_cast<int>(id % n_[0]);
    int j = static_cast<int>((id / n_[0]) % n_[1]);
    int k = static_cast<int>(id / (static_cast<long>(n_[0]) * n_[1]));
    return {i, j, k};
}

double Grid::spacing(Axis a, int cell_index) const {
    const auto& c = spec_.coords[static_cast<int>(a)];
    return c[cell_index + 1] - c[cell_index];
}

double Grid::extent(Axis a) const {
    const auto& c = spec_.coords[static_cast<int>(a)];
    return c.back() - c.front();
}

double Grid::domain_volume() const {
    return extent(Axis::x) * extent(Axis::y) * extent(Axis::z);
}

void Grid::compute_masks() {
    edge_real_.assign(3 * N_, 0);
    facet_real_.assign(3 * N_, 0);
    cell_real_.assign(N_, 0);
    for (int k = 0; k < n_[2]; ++k)
        for (int j = 0; j < n_[1]; ++j)
            for (int i = 0; i < n_[0]; ++i) {
                long n = node_id(i, j, k);
                bool ix = i < n_[0] - 1, iy = j < n_[1] - 1, iz = k < n_[2] - 1;
                edge_real_[0 * N_ + n] = ix;
                edge_real_[1 * N_ + n] = iy;
                edge_real_[2 * N_ + n] = iz;
                facet_real_[0 * N_ + n] = iy && iz;
                facet_real_[1 * N_ + n] = ix && iz;
                facet_real_[2 * N_ + n] = ix && iy;
                cell_real_[n] = ix && iy && iz;
            }
}

void Grid::compute_measures() {
    edge_len_ = Vec::Zero(3 * N_);
    facet_area_ = Vec::Zero(3 * N_);
    cell_vol_ = Vec::Zero(N_);
    dual_edge_len_ = Vec::Zero(3 * N_);
    dual_facet_area_ = Vec::Zero(3 * N_);
    dual_node_vol_ = Vec::Zero(N_);

    // half extent of the dual cell around point index i along one axis
    auto half = [&](int a, int i, int side) -> double {
        // side 0: below (cell i-1), side 1: above (cell i)
        if (side == 0) return i > 0 ? 0.5 * spacing(static_cast<Axis>(a), i - 1) : 0.0;
        return i < n_[a] - 1 ? 0.5 * spacing(static_cast<Axis>(a), i) : 0.0;
    };

    for (int k = 0; k < n_[2]; ++k)
        for (int j = 0; j < n_[1]; ++j)
            for (int i = 0; i < n_[0]; ++i) {
                long n = node_id(i, j, k);
                int idx[3] = {i, j, k};
                double d[3] = {0, 0, 0};  // primal spacing ahead of the point, 0 at phantom
                for (int a = 0; a < 3; ++a)
                    if (idx[a] < n_[a] - 1) d[a] = spacing(static_cast<Axis>(a), idx[a]);
                double ext[3];  // dual extent around the point, truncated at the boundary
                for (int a = 0; a < 3; ++a) ext[a] = half(a, idx[a], 0) + half(a, idx[a], 1);

                for (int a = 0; a < 3; ++a) {
                    int b = (a + 1) % 3, c = (a + 2) % 3;
                    long s = a * N_ + n;
                    if (edge_real_[s]) {
                        edge_len_[s] = d[a];
                        dual_facet_area_[s] = ext[b] * ext[c];
                    }
                    if (facet_real_[s]) {
                        facet_area_[s] = d[b] * d[c];
                        dual_edge_len_[s] = ext[a];
                    }
                }
                if (cell_real_[n]) cell_vol_[n] = d[0] * d[1] * d[2];
                dual_node_vol_[n] = ext[0] * ext[1] * ext[2];
            }
}

namespace {

// In-plane axes of a boundary face: x-faces span (y,z), y-faces (x,z), z-faces (x,y).
void face_plane_axes(int face, int& u, int& v) {
    int a = face / 2;
    u = (a == 0) ? 1 : 0;
    v = (a == 2) ? 1 : 2;
}

bool on_face(int face, const int idx[3], const int n[3]) {
    int a = face / 2;
    return (face % 2 == 0) ? idx[a] == 0 : idx[a] == n[a] - 1;
}

}  // namespace

void Grid::classify_boundary() {
    edge_ebc_.assign(3 * N_, 0);
    node_ebc_.assign(N_, 0);
    node_drive_idx_.assign(N_, -1);
    drive_names_.clear();

    auto drive_index = [&](const std::string& name) {
        for (size_t i = 0; i < drive_names_.size(); ++i)
            if (drive_names_[i] == name) return static_cast<int>(i);
        drive_names_.push_back(name);
        return static_cast<int>(drive_names_.size() - 1);
    };

    double tol = 1e-9 * std::max({extent(Axis::x), extent(Axis::y), extent(Axis::z)});

    // Effective class at a point of a face: patches override the face class.
    auto point_class = [&](int face, double u, double v, const BoundaryPatch** patch) {
        BoundaryClass cls = bc_.face_class[face];
        *patch = nullptr;
        for (const auto& p : bc_.patches) {
            if (p.face != face) continue;
            if (u >= p.box[0] - tol && u <= p.box[1] + tol && v >= p.box[2] - tol &&
                v <= p.box[3] + tol) {
                cls = p.cls;
                *patch = &p;
            }
        }
        return cls;
    };

    for (int k = 0; k < n_[2]; ++k)
        for (int j = 0; j < n_[1]; ++j)
            for (int i = 0; i < n_[0]; ++i) {
                long n = node_id(i, j, k);
                int idx[3] = {i, j, k};
                double pos[3] = {coord(Axis::x, i), coord(Axis::y, j), coord(Axis::z, k)};

                for (int f = 0; f < 6; ++f) {
                    if (!on_face(f, idx, n_)) continue;
                    int u, v;
                    face_plane_axes(f, u, v);
                    const BoundaryPatch* patch = nullptr;
                    if (point_class(f, pos[u], pos[v], &patch) == BoundaryClass::ebc) {
                        node_ebc_[n] = 1;
                        if (patch && !patch->drive.empty()) {
                            int d = drive_index(patch->drive);
                            if (node_drive_idx_[n] >= 0 && node_drive_idx_[n] != d)
                                fail(ErrorCode::invalid_spec, "node on two driven patches");
                            node_drive_idx_[n] = d;
                        }
                    }
                }

                // tangential edges: an edge along a lies on a face iff the face
                // axis differs from a and the point sits on that face
                for (int a = 0; a < 3; ++a) {
                    long s = a * N_ + n;
                    if (!edge_real_[s]) continue;
                    double u0[3] = {pos[0], pos[1], pos[2]};
                    double u1[3] = {pos[0], pos[1], pos[2]};
                    u1[a] = coord(static_cast<Axis>(a), idx[a] + 1);
                    for (int f = 0; f < 6; ++f) {
                        if (f / 2 == a) continue;
                        if (!on_face(f, idx, n_)) continue;
                        int u, v;
                        face_plane_axes(f, u, v);
                        const BoundaryPatch *p0 = nullptr, *p1 = nullptr;
                        BoundaryClass c0 = point_class(f, u0[u], u0[v], &p0);
                        BoundaryClass c1 = point_class(f, u1[u], u1[v], &p1);
                        // constrained when the whole edge lies in ebc area held at
                        // one potential (an edge bridging contacts at different
                        // drives carries nonzero tangential voltage)
                        std::string d0 = p0 ? p0->drive : "";
                        std::string d1 = p1 ? p1->drive : "";
                        if (c0 == BoundaryClass::ebc && c1 == BoundaryClass::ebc && d0 == d1)
                            edge_ebc_[s] = 1;
                    }
                }
            }
}

const std::string& Grid::node_drive(long node_id) const {
    static const std::string empty;
    int d = node_drive_idx_[node_id];
    return d >= 0 ? drive_names_[d] : empty;
}

std::vector<int> Grid::node_faces(long id) const {
    auto ijk = decode_node(id);
    int idx[3] = {ijk[0], ijk[1], ijk[2]};
    std::vector<int> out;
    for (int f = 0; f < 6; ++f)
        if (on_face(f, idx, n_)) out.push_back(f);
    return out;
}

Grid build_grid(GridSpec spec, BoundarySpec bc) { return Grid(std::move(spec), std::move(bc)); }

long entity_index(const Grid& grid, int i, int j, int k, Axis direction, EntityKind kind) {
    int nx = grid.np(Axis::x), ny = grid.np(Axis::y), nz = grid.np(Axis::z);
    int hi[3] = {nx, ny, nz};
    if (kind == EntityKind::cell) {
        hi[0]--;
        hi[1]--;
        hi[2]--;
    }
    if (i < 1 || i > hi[0] || j < 1 || j > hi[1] || k < 1 || k > hi[2])
        fail(ErrorCode::index_error, "entity coordinates out of range");
    long n = i + static_cast<long>(j - 1) * nx + static_cast<long>(k - 1) * nx * ny;
    if (kind == EntityKind::edge || kind == EntityKind::facet)
        return static_cast<long>(direction) * grid.n_nodes() + n;
    return n;
}

}  // namespace fitsim
