// Triangle mesh container plus the template-cleanup operations: normals,
// growth-offset expansion, connected-component filtering and hole closing.
// Meshes are immutable value types once built; every operation returns a
// new mesh and may be called concurrently on shared inputs.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "warpfield/geom.hpp"

namespace warpfield {

// Faces below this area (squared mesh units) are treated as degenerate:
// they get zero normals and are skipped by closest-triangle queries.
inline constexpr double kEpsArea = 1e-12;

struct Tri {
    int a = 0, b = 0, c = 0;
    int operator[](int i) const { return i == 0 ? a : (i == 1 ? b : c); }
    int& operator[](int i) { return i == 0 ? a : (i == 1 ? b : c); }
    bool operator==(const Tri& o) const { return a == o.a && b == o.b && c == o.c; }
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Tri> faces;  // CCW winding defines outward normals

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }
    Aabb bounds() const;

    // Throws std::runtime_error if a face index is out of range or a face
    // repeats a vertex.
    void validate() const;
};

// Canonical and deformed template meshes with identical connectivity.
struct PosedPair {
    TriMesh canonical;
    TriMesh deformed;

    void validate() const;  // pair invariants on top of per-mesh ones
};

// For each coarse vertex, the original vertex indices that collapsed into it.
struct CorrespondenceMap {
    std::vector<std::vector<int>> coarse_to_fine;
};

struct DegeneracyEntry {
    int face_index = -1;   // or vertex index for vertex-level entries
    std::string reason;
};
using DegeneracyReport = std::vector<DegeneracyEntry>;

std::string degeneracy_report_json(const DegeneracyReport& report);

// Unit face normals by CCW winding; degenerate faces get a zero normal and an
// entry in `report` (if given).
std::vector<Vec3> face_normals(const TriMesh& mesh, DegeneracyReport* report = nullptr);

// Area-weighted average of incident face normals, normalized. Isolated
// vertices (or vertices with only degenerate faces) get a zero normal.
std::vector<Vec3> vertex_normals(const TriMesh& mesh, DegeneracyReport* report = nullptr);

// Moves every vertex by `g` along its vertex normal. Faces unchanged.
TriMesh expand(const TriMesh& mesh, double g);

struct ComponentInfo {
    int seed_vertex = -1;            // lowest vertex index in the component
    std::vector<int> vertex_indices;
    std::vector<int> face_indices;
};

std::vector<ComponentInfo> connected_components(const TriMesh& mesh);

// Keeps exactly the connected components accepted by `keep`; vertices are
// reindexed compactly. Isolated vertices are dropped.
TriMesh remove_components(const TriMesh& mesh,
                          const std::function<bool(const ComponentInfo&)>& keep);

// Triangulates every boundary loop: a single triangle for loops of length 3,
// a centroid fan otherwise. Throws on non-manifold boundary edges.
TriMesh close_holes(const TriMesh& mesh);

// Directed edge uses; boundary edge = used by exactly one face.
size_t count_boundary_edges(const TriMesh& mesh);

}  // namespace warpfield
