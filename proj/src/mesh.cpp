#include "warpfield/mesh.hpp"

#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace warpfield {

Aabb TriMesh::bounds() const {
    Aabb box;
    for (const Vec3& v : vertices) box.grow(v);
    return box;
}

void TriMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        const Tri& t = faces[f];
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= n)
                throw std::runtime_error("face " + std::to_string(f) + " references vertex " +
                                         std::to_string(t[k]) + " out of range");
        }
        if (t.a == t.b || t.b == t.c || t.a == t.c)
            throw std::runtime_error("face " + std::to_string(f) + " repeats a vertex");
    }
}

void PosedPair::validate() const {
    canonical.validate();
    deformed.validate();
    if (canonical.vertices.size() != deformed.vertices.size())
        throw std::runtime_error("posed pair: vertex counts differ");
    if (canonical.faces.size() != deformed.faces.size())
        throw std::runtime_error("posed pair: face counts differ");
    for (size_t f = 0; f < canonical.faces.size(); ++f)
        if (!(canonical.faces[f] == deformed.faces[f]))
            throw std::runtime_error("posed pair: face " + std::to_string(f) + " differs");
}

std::string degeneracy_report_json(const DegeneracyReport& report) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < report.size(); ++i) {
        if (i) os << ",";
        os << "{\"face_index\":" << report[i].face_index << ",\"reason\":\"" << report[i].reason
           << "\"}";
    }
    os << "]";
    return os.str();
}

std::vector<Vec3> face_normals(const TriMesh& mesh, DegeneracyReport* report) {
    std::vector<Vec3> normals(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const Tri& t = mesh.faces[f];
        Vec3 n = cross(mesh.vertices[t.b] - mesh.vertices[t.a],
                       mesh.vertices[t.c] - mesh.vertices[t.a]);
        double area = 0.5 * norm(n);
        if (area <= kEpsArea) {
            normals[f] = Vec3{};
            if (report) report->push_back({static_cast<int>(f), "degenerate face"});
        } else {
            normals[f] = n / (2.0 * area);
        }
    }
    return normals;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh, DegeneracyReport* report) {
    // Unnormalized cross products have magnitude 2*area, so summing them is
    // exactly the area weighting.
    std::vector<Vec3> accum(mesh.vertices.size());
    for (const Tri& t : mesh.faces) {
        Vec3 n = cross(mesh.vertices[t.b] - mesh.vertices[t.a],
                       mesh.vertices[t.c] - mesh.vertices[t.a]);
        if (0.5 * norm(n) <= kEpsArea) continue;
        accum[t.a] += n;
        accum[t.b] += n;
        accum[t.c] += n;
    }
    std::vector<Vec3> normals(mesh.vertices.size());
    for (size_t i = 0; i < accum.size(); ++i) {
        double len = norm(accum[i]);
        if (len > 0) {
            normals[i] = accum[i] / len;
        } else {
            normals[i] = Vec3{};
            if (report) report->push_back({static_cast<int>(i), "isolated vertex"});
        }
    }
    return normals;
}

TriMesh expand(const TriMesh& mesh, double g) {
    if (g == 0.0) return mesh;
    std::vector<Vec3> n = vertex_normals(mesh);
    TriMesh out = mesh;
    for (size_t i = 0; i < out.vertices.size(); ++i) out.vertices[i] += n[i] * g;
    return out;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<ComponentInfo> connected_components(const TriMesh& mesh) {
    UnionFind uf(mesh.vertices.size());
    for (const Tri& t : mesh.faces) {
        uf.unite(t.a, t.b);
        uf.unite(t.b, t.c);
    }
    std::map<int, ComponentInfo> by_root;  // ordered: components sorted by seed
    for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v) {
        int root = uf.find(v);
        ComponentInfo& ci = by_root[root];
        if (ci.seed_vertex < 0) ci.seed_vertex = root;
        ci.vertex_indices.push_back(v);
    }
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f)
        by_root[uf.find(mesh.faces[f].a)].face_indices.push_back(f);

    std::vector<ComponentInfo> out;
    out.reserve(by_root.size());
    for (auto& [root, ci] : by_root) out.push_back(std::move(ci));
    return out;
}

TriMesh remove_components(const TriMesh& mesh,
                          const std::function<bool(const ComponentInfo&)>& keep) {
    std::vector<int> remap(mesh.vertices.size(), -1);
    TriMesh out;
    for (const ComponentInfo& ci : connected_components(mesh)) {
        if (!keep(ci)) continue;
        for (int v : ci.vertex_indices) {
            remap[v] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(mesh.vertices[v]);
        }
        for (int f : ci.face_indices) {
            const Tri& t = mesh.faces[f];
            out.faces.push_back({remap[t.a], remap[t.b], remap[t.c]});
        }
    }
    return out;
}

size_t count_boundary_edges(const TriMesh& mesh) {
    std::map<std::pair<int, int>, int> uses;
    for (const Tri& t : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            uses[{std::min(a, b), std::max(a, b)}]++;
        }
    size_t n = 0;
    for (const auto& [e, c] : uses)
        if (c == 1) ++n;
    return n;
}

TriMesh close_holes(const TriMesh& mesh) {
    // Directed boundary edges: an edge (a,b) of a face with no opposing (b,a).
    std::map<std::pair<int, int>, int> dir_uses;
    for (const Tri& t : mesh.faces)
        for (int k = 0; k < 3; ++k) dir_uses[{t[k], t[(k + 1) % 3]}]++;

    // On an orientable manifold every directed edge appears at most once.
    for (const auto& [e, c] : dir_uses)
        if (c > 1)
            throw std::runtime_error("non-manifold edge (" + std::to_string(e.first) + "," +
                                     std::to_string(e.second) + ")");

    // next[a] = b means (a,b) is a boundary edge of the hole polygon. Holes
    // are traversed in face-winding direction; fill triangles reverse it.
    std::map<int, int> next;
    for (const auto& [e, c] : dir_uses) {
        if (dir_uses.count({e.second, e.first})) continue;  // interior edge
        if (next.count(e.first))
            throw std::runtime_error("non-manifold boundary at vertex " +
                                     std::to_string(e.first));
        next[e.first] = e.second;
    }

    TriMesh out = mesh;
    std::map<int, bool> visited;
    for (const auto& [start, unused] : next) {
        if (visited[start]) continue;
        std::vector<int> loop;
        int v = start;
        do {
            loop.push_back(v);
            visited[v] = true;
            auto it = next.find(v);
            if (it == next.end())
                throw std::runtime_error("open boundary chain at vertex " + std::to_string(v));
            v = it->second;
        } while (v != start);

        if (loop.size() == 3) {
            out.faces.push_back({loop[2], loop[1], loop[0]});
        } else {
            Vec3 centroid;
            for (int i : loop) centroid += mesh.vertices[i];
            centroid = centroid / static_cast<double>(loop.size());
            int ci = static_cast<int>(out.vertices.size());
            out.vertices.push_back(centroid);
            for (size_t k = 0; k < loop.size(); ++k) {
                int a = loop[k], b = loop[(k + 1) % loop.size()];
                out.faces.push_back({b, a, ci});
            }
        }
    }
    return out;
}

}  // namespace warpfield
