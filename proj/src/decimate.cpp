#include "warpfield/decimate.hpp"

#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

namespace warpfield {

namespace {

// Symmetric 4x4 plane-distance quadric, 10 unique coefficients.
struct Quadric {
    double q[10] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    // layout: [0]=xx [1]=xy [2]=xz [3]=xw [4]=yy [5]=yz [6]=yw [7]=zz [8]=zw [9]=ww

    void add_plane(const Vec3& n, double d, double weight) {
        const double a = n.x, b = n.y, c = n.z;
        q[0] += weight * a * a;
        q[1] += weight * a * b;
        q[2] += weight * a * c;
        q[3] += weight * a * d;
        q[4] += weight * b * b;
        q[5] += weight * b * c;
        q[6] += weight * b * d;
        q[7] += weight * c * c;
        q[8] += weight * c * d;
        q[9] += weight * d * d;
    }
    Quadric& operator+=(const Quadric& o) {
        for (int i = 0; i < 10; ++i) q[i] += o.q[i];
        return *this;
    }
    double eval(const Vec3& v) const {
        return q[0] * v.x * v.x + 2 * q[1] * v.x * v.y + 2 * q[2] * v.x * v.z +
               2 * q[3] * v.x + q[4] * v.y * v.y + 2 * q[5] * v.y * v.z + 2 * q[6] * v.y +
               q[7] * v.z * v.z + 2 * q[8] * v.z + q[9];
    }
    // Minimizer of eval, if the 3x3 system is well conditioned.
    bool optimal(Vec3& out) const {
        const double a00 = q[0], a01 = q[1], a02 = q[2];
        const double a11 = q[4], a12 = q[5], a22 = q[7];
        const double det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) +
                           a02 * (a01 * a12 - a11 * a02);
        const double scale = std::abs(a00) + std::abs(a11) + std::abs(a22);
        if (std::abs(det) <= 1e-12 * scale * scale * scale) return false;
        const double bx = -q[3], by = -q[6], bz = -q[8];
        const double inv = 1.0 / det;
        out.x = inv * (bx * (a11 * a22 - a12 * a12) - a01 * (by * a22 - a12 * bz) +
                       a02 * (by * a12 - a11 * bz));
        out.y = inv * (a00 * (by * a22 - a12 * bz) - bx * (a01 * a22 - a12 * a02) +
                       a02 * (a01 * bz - by * a02));
        out.z = inv * (a00 * (a11 * bz - by * a12) - a01 * (a01 * bz - by * a02) +
                       bx * (a01 * a12 - a11 * a02));
        return true;
    }
};

struct Candidate {
    double cost;
    int a, b;                  // collapse b into a
    long va_version, vb_version;
    Vec3 pos_canonical;
    Vec3 pos_deformed;
    bool operator>(const Candidate& o) const { return cost > o.cost; }
};

struct Decimator {
    std::vector<Vec3> can;   // canonical positions, mutated by collapses
    std::vector<Vec3> def;   // deformed positions
    std::vector<Tri> faces;
    std::vector<bool> face_alive;
    std::vector<bool> vert_alive;
    std::vector<std::set<int>> vert_faces;  // vertex -> alive face indices
    std::vector<Quadric> quadrics;
    std::vector<long> version;
    std::vector<std::vector<int>> merged;  // original indices carried by each vertex
    int alive_faces = 0;
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<Candidate>> heap;

    explicit Decimator(const PosedPair& pair)
        : can(pair.canonical.vertices),
          def(pair.deformed.vertices),
          faces(pair.canonical.faces),
          face_alive(faces.size(), true),
          vert_alive(can.size(), true),
          vert_faces(can.size()),
          quadrics(can.size()),
          version(can.size(), 0),
          merged(can.size()),
          alive_faces(static_cast<int>(faces.size())) {
        for (size_t i = 0; i < can.size(); ++i) merged[i] = {static_cast<int>(i)};
        for (int f = 0; f < static_cast<int>(faces.size()); ++f)
            for (int k = 0; k < 3; ++k) vert_faces[faces[f][k]].insert(f);
        for (const Tri& t : faces) {
            Vec3 n = cross(can[t.b] - can[t.a], can[t.c] - can[t.a]);
            double area = 0.5 * norm(n);
            if (area <= kEpsArea) continue;
            Vec3 un = n / (2.0 * area);
            Quadric plane;
            plane.add_plane(un, -dot(un, can[t.a]), area);
            quadrics[t.a] += plane;
            quadrics[t.b] += plane;
            quadrics[t.c] += plane;
        }
        std::set<std::pair<int, int>> edges;
        for (const Tri& t : faces)
            for (int k = 0; k < 3; ++k) {
                int a = t[k], b = t[(k + 1) % 3];
                edges.insert({std::min(a, b), std::max(a, b)});
            }
        for (const auto& [a, b] : edges) push_candidate(a, b);
    }

    void push_candidate(int a, int b) {
        Quadric q = quadrics[a];
        q += quadrics[b];
        Vec3 pos;
        if (!q.optimal(pos)) {
            Vec3 mid = (can[a] + can[b]) * 0.5;
            pos = mid;
            double best = q.eval(mid);
            if (q.eval(can[a]) < best) { best = q.eval(can[a]); pos = can[a]; }
            if (q.eval(can[b]) < best) { pos = can[b]; }
        }
        heap.push({q.eval(pos), a, b, version[a], version[b], pos,
                   (def[a] + def[b]) * 0.5});
    }

    std::set<int> vertex_neighbors(int v) const {
        std::set<int> nb;
        for (int f : vert_faces[v])
            for (int k = 0; k < 3; ++k)
                if (faces[f][k] != v) nb.insert(faces[f][k]);
        return nb;
    }

    // Shared faces of edge (a,b).
    std::vector<int> edge_faces(int a, int b) const {
        std::vector<int> out;
        for (int f : vert_faces[a]) {
            const Tri& t = faces[f];
            if (t.a == b || t.b == b || t.c == b) out.push_back(f);
        }
        return out;
    }

    // The collapse keeps the mesh 2-manifold iff the common neighbors of a
    // and b are exactly the vertices opposite the shared faces.
    bool link_ok(int a, int b, const std::vector<int>& shared) const {
        std::set<int> na = vertex_neighbors(a), nb = vertex_neighbors(b);
        std::set<int> common;
        for (int v : na)
            if (nb.count(v)) common.insert(v);
        std::set<int> opposite;
        for (int f : shared)
            for (int k = 0; k < 3; ++k)
                if (faces[f][k] != a && faces[f][k] != b) opposite.insert(faces[f][k]);
        return common == opposite;
    }

    // Reject collapses that flip or squash any surviving canonical face.
    bool geometry_ok(int a, int b, const Vec3& pos, const std::vector<int>& dying) const {
        for (int v : {a, b}) {
            for (int f : vert_faces[v]) {
                bool dies = false;
                for (int d : dying)
                    if (d == f) { dies = true; break; }
                if (dies) continue;
                Vec3 p[3], pnew[3];
                for (int k = 0; k < 3; ++k) {
                    int vi = faces[f][k];
                    p[k] = can[vi];
                    pnew[k] = (vi == a || vi == b) ? pos : can[vi];
                }
                Vec3 n_old = cross(p[1] - p[0], p[2] - p[0]);
                Vec3 n_new = cross(pnew[1] - pnew[0], pnew[2] - pnew[0]);
                if (0.5 * norm(n_new) <= kEpsArea) return false;
                if (dot(n_old, n_new) <= 0) return false;
            }
        }
        return true;
    }

    bool hit_floor = false;  // a collapse was blocked by the 4-face minimum

    // Returns false if the candidate was stale or rejected.
    bool try_collapse(const Candidate& c) {
        if (!vert_alive[c.a] || !vert_alive[c.b]) return false;
        if (version[c.a] != c.va_version || version[c.b] != c.vb_version) return false;
        std::vector<int> dying = edge_faces(c.a, c.b);
        if (dying.empty()) return false;  // edge no longer exists
        if (alive_faces - static_cast<int>(dying.size()) < 4) {
            hit_floor = true;
            return false;
        }
        if (!link_ok(c.a, c.b, dying)) return false;
        if (!geometry_ok(c.a, c.b, c.pos_canonical, dying)) return false;

        const int a = c.a, b = c.b;
        for (int f : dying) {
            face_alive[f] = false;
            --alive_faces;
            for (int k = 0; k < 3; ++k) vert_faces[faces[f][k]].erase(f);
        }
        // Rewire b's remaining faces to a.
        for (int f : std::vector<int>(vert_faces[b].begin(), vert_faces[b].end())) {
            for (int k = 0; k < 3; ++k)
                if (faces[f][k] == b) faces[f][k] = a;
            vert_faces[b].erase(f);
            vert_faces[a].insert(f);
        }
        can[a] = c.pos_canonical;
        def[a] = c.pos_deformed;
        quadrics[a] += quadrics[b];
        merged[a].insert(merged[a].end(), merged[b].begin(), merged[b].end());
        merged[b].clear();
        vert_alive[b] = false;
        ++version[a];
        ++version[b];
        for (int n : vertex_neighbors(a)) push_candidate(std::min(a, n), std::max(a, n));
        return true;
    }
};

}  // namespace

DecimateResult decimate_pair(const PosedPair& pair, int target_faces) {
    pair.validate();
    if (target_faces < 4) throw std::runtime_error("decimate_pair: target_faces must be >= 4");

    DecimateResult result;
    if (static_cast<int>(pair.canonical.faces.size()) <= target_faces) {
        result.pair = pair;
        result.correspondence.coarse_to_fine.resize(pair.canonical.vertices.size());
        for (size_t i = 0; i < pair.canonical.vertices.size(); ++i)
            result.correspondence.coarse_to_fine[i] = {static_cast<int>(i)};
        return result;
    }

    Decimator d(pair);
    while (d.alive_faces > target_faces) {
        if (d.heap.empty()) {
            if (d.hit_floor)
                throw std::runtime_error(
                    "decimate_pair: mesh would drop below 4 faces before reaching " +
                    std::to_string(target_faces));
            throw std::runtime_error("decimate_pair: no collapsible edge left at " +
                                     std::to_string(d.alive_faces) + " faces");
        }
        Candidate c = d.heap.top();
        d.heap.pop();
        d.try_collapse(c);
    }

    // Compact alive vertices; every original index lands in exactly one set.
    std::vector<int> remap(d.can.size(), -1);
    for (size_t v = 0; v < d.can.size(); ++v) {
        if (!d.vert_alive[v]) continue;
        remap[v] = static_cast<int>(result.pair.canonical.vertices.size());
        result.pair.canonical.vertices.push_back(d.can[v]);
        result.pair.deformed.vertices.push_back(d.def[v]);
        result.correspondence.coarse_to_fine.push_back(d.merged[v]);
    }
    for (size_t f = 0; f < d.faces.size(); ++f) {
        if (!d.face_alive[f]) continue;
        Tri t{remap[d.faces[f].a], remap[d.faces[f].b], remap[d.faces[f].c]};
        result.pair.canonical.faces.push_back(t);
        result.pair.deformed.faces.push_back(t);
    }
    result.pair.validate();
    return result;
}

}  // namespace warpfield
