// Bounding-volume hierarchy over mesh triangles: closest-point queries for
// the surface-field deformer and ray interval queries for the sampler.
// Binned-SAH build, leaves hold up to 4 triangles. Degenerate faces are
// excluded from the tree.
#pragma once

#include <cstdint>
#include <vector>

#include "warpfield/mesh.hpp"

namespace warpfield {

struct ClosestHit {
    int face = -1;       // index into the original face array
    Vec3 point;          // closest point on the surface
    double u = 0, v = 0, w = 0;  // clamped barycentric, u+v+w == 1
    double dist2 = 0;
};

struct RayInterval {
    double t_near = 0, t_far = 0;
    int hits = 0;        // number of triangle intersections with t > eps
    bool valid() const { return hits >= 2 && t_far - t_near > 1e-9; }
};

class Bvh {
public:
    Bvh() = default;
    explicit Bvh(const TriMesh& mesh);

    bool empty() const { return tris_.empty(); }
    size_t triangle_count() const { return tris_.size(); }

    // Exact nearest triangle; ties (identical squared distance) resolve to
    // the lowest face index, matching a brute-force scan.
    ClosestHit closest(const Vec3& p) const;

    // First/last intersection parameters along o + t*d for t > eps.
    RayInterval ray_interval(const Vec3& o, const Vec3& d, double eps = 1e-4) const;

private:
    struct Node {
        Vec3 lo, hi;
        int32_t left = -1;    // internal: child index; leaf: first triangle
        int32_t count = 0;    // 0 for internal nodes, >0 for leaves
    };
    struct PackedTri {
        Vec3 a, b, c;
        int32_t face = -1;
    };

    int build(std::vector<int>& order, int begin, int end,
              const std::vector<Aabb>& boxes, const std::vector<Vec3>& centers, int depth);

    std::vector<Node> nodes_;
    std::vector<PackedTri> tris_;
};

}  // namespace warpfield
