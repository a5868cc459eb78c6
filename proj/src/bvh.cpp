#include "warpfield/bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace warpfield {

namespace {
constexpr int kLeafSize = 4;
constexpr int kBins = 16;

inline double axis_of(const Vec3& v, int a) { return a == 0 ? v.x : (a == 1 ? v.y : v.z); }

inline double half_area(const Vec3& lo, const Vec3& hi) {
    Vec3 e = hi - lo;
    return e.x * e.y + e.y * e.z + e.z * e.x;
}
}  // namespace

Bvh::Bvh(const TriMesh& mesh) {
    std::vector<int> order;
    std::vector<Aabb> boxes;
    std::vector<Vec3> centers;
    order.reserve(mesh.faces.size());
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        const Tri& t = mesh.faces[f];
        const Vec3 &a = mesh.vertices[t.a], &b = mesh.vertices[t.b], &c = mesh.vertices[t.c];
        if (0.5 * norm(cross(b - a, c - a)) <= kEpsArea) continue;
        order.push_back(f);
        Aabb box;
        box.grow(a);
        box.grow(b);
        box.grow(c);
        boxes.push_back(box);
        centers.push_back((a + b + c) / 3.0);
    }
    if (order.empty()) return;

    // boxes/centers are indexed by position in `order`, so build works on a
    // permutation of [0, n) and we translate back at the end.
    std::vector<int> perm(order.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    nodes_.reserve(2 * order.size());
    build(perm, 0, static_cast<int>(perm.size()), boxes, centers, 0);

    tris_.reserve(perm.size());
    for (int idx : perm) {
        const Tri& t = mesh.faces[order[idx]];
        tris_.push_back({mesh.vertices[t.a], mesh.vertices[t.b], mesh.vertices[t.c],
                         order[idx]});
    }
}

int Bvh::build(std::vector<int>& order, int begin, int end, const std::vector<Aabb>& boxes,
               const std::vector<Vec3>& centers, int depth) {
    Aabb bounds, cbounds;
    for (int i = begin; i < end; ++i) {
        bounds.grow(boxes[order[i]]);
        cbounds.grow(centers[order[i]]);
    }
    const int node_index = static_cast<int>(nodes_.size());
    nodes_.push_back({bounds.lo, bounds.hi, begin, end - begin});
    if (end - begin <= kLeafSize || depth >= 60) return node_index;

    // Binned SAH over the widest centroid axis.
    Vec3 ext = cbounds.extent();
    int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
    double cmin = axis_of(cbounds.lo, axis), cext = axis_of(ext, axis);
    int mid = -1;
    if (cext > 1e-30) {
        struct Bin {
            Aabb box;
            int count = 0;
        };
        std::array<Bin, kBins> bins;
        auto bin_of = [&](int i) {
            int b = static_cast<int>((axis_of(centers[i], axis) - cmin) / cext * kBins);
            return std::clamp(b, 0, kBins - 1);
        };
        for (int i = begin; i < end; ++i) {
            Bin& b = bins[bin_of(order[i])];
            b.box.grow(boxes[order[i]]);
            b.count++;
        }
        std::array<double, kBins> right_cost{};
        Aabb acc;
        int n = 0;
        for (int b = kBins - 1; b > 0; --b) {
            acc.grow(bins[b].box);
            n += bins[b].count;
            right_cost[b] = n ? half_area(acc.lo, acc.hi) * n : 0.0;
        }
        acc = Aabb{};
        n = 0;
        double best = std::numeric_limits<double>::infinity();
        int best_split = -1;
        for (int b = 0; b < kBins - 1; ++b) {
            acc.grow(bins[b].box);
            n += bins[b].count;
            if (n == 0 || n == end - begin) continue;
            double cost = half_area(acc.lo, acc.hi) * n + right_cost[b + 1];
            if (cost < best) {
                best = cost;
                best_split = b;
            }
        }
        if (best_split >= 0) {
            auto it = std::stable_partition(order.begin() + begin, order.begin() + end,
                                            [&](int i) { return bin_of(i) <= best_split; });
            mid = static_cast<int>(it - order.begin());
        }
    }
    if (mid <= begin || mid >= end) {
        // Degenerate spread: median split keeps the tree balanced.
        mid = (begin + end) / 2;
        std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                         [&](int a, int b) {
                             return axis_of(centers[a], axis) < axis_of(centers[b], axis);
                         });
    }

    // Depth-first layout: the left child is always node_index+1, so only the
    // right child index needs to be stored.
    build(order, begin, mid, boxes, centers, depth + 1);
    int right = build(order, mid, end, boxes, centers, depth + 1);
    nodes_[node_index].left = right;
    nodes_[node_index].count = 0;
    return node_index;
}

ClosestHit Bvh::closest(const Vec3& p) const {
    ClosestHit best;
    best.dist2 = std::numeric_limits<double>::infinity();
    if (nodes_.empty()) return best;

    struct Entry {
        int node;
        double d2;
    };
    Entry stack[128];
    int top = 0;
    stack[top++] = {0, 0.0};
    while (top > 0) {
        Entry e = stack[--top];
        if (e.d2 > best.dist2) continue;
        const Node& n = nodes_[e.node];
        if (n.count > 0) {
            for (int i = n.left; i < n.left + n.count; ++i) {
                const PackedTri& t = tris_[i];
                TriClosest c = closest_point_on_triangle(p, t.a, t.b, t.c);
                double d2 = norm2(p - c.point);
                if (d2 < best.dist2 || (d2 == best.dist2 && t.face < best.face)) {
                    best = {t.face, c.point, c.u, c.v, c.w, d2};
                }
            }
        } else {
            const int child_l = e.node + 1;
            const int child_r = n.left;
            Aabb bl{nodes_[child_l].lo, nodes_[child_l].hi};
            Aabb br{nodes_[child_r].lo, nodes_[child_r].hi};
            double dl = bl.dist2(p), dr = br.dist2(p);
            // Push the farther child first so the nearer one is visited next.
            if (dl <= dr) {
                if (dr <= best.dist2) stack[top++] = {child_r, dr};
                if (dl <= best.dist2) stack[top++] = {child_l, dl};
            } else {
                if (dl <= best.dist2) stack[top++] = {child_l, dl};
                if (dr <= best.dist2) stack[top++] = {child_r, dr};
            }
        }
    }
    return best;
}

RayInterval Bvh::ray_interval(const Vec3& o, const Vec3& d, double eps) const {
    RayInterval out;
    out.t_near = std::numeric_limits<double>::infinity();
    out.t_far = -std::numeric_limits<double>::infinity();
    if (nodes_.empty()) return out;

    const Vec3 inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const int ni = stack[--top];
        const Node& n = nodes_[ni];
        // Slab test.
        double t0 = eps, t1 = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            double lo = (axis_of(n.lo, a) - axis_of(o, a)) * axis_of(inv, a);
            double hi = (axis_of(n.hi, a) - axis_of(o, a)) * axis_of(inv, a);
            if (lo > hi) std::swap(lo, hi);
            t0 = std::max(t0, lo);
            t1 = std::min(t1, hi);
        }
        if (t0 > t1) continue;
        if (n.count > 0) {
            for (int i = n.left; i < n.left + n.count; ++i) {
                const PackedTri& tri = tris_[i];
                // Moller-Trumbore.
                Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
                Vec3 pv = cross(d, e2);
                double det = dot(e1, pv);
                if (std::abs(det) < 1e-14) continue;
                double idet = 1.0 / det;
                Vec3 tv = o - tri.a;
                double u = dot(tv, pv) * idet;
                if (u < 0 || u > 1) continue;
                Vec3 qv = cross(tv, e1);
                double v = dot(d, qv) * idet;
                if (v < 0 || u + v > 1) continue;
                double t = dot(e2, qv) * idet;
                if (t <= eps) continue;
                out.hits++;
                out.t_near = std::min(out.t_near, t);
                out.t_far = std::max(out.t_far, t);
            }
        } else {
            stack[top++] = ni + 1;
            stack[top++] = n.left;
        }
    }
    return out;
}

}  // namespace warpfield
