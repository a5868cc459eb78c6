// Small 3D math types used across warpfield. Double precision throughout:
// the deformation and decimation paths accumulate error quickly in float.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace warpfield {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return n > 0.0 ? v / n : Vec3{};
}
inline Vec3 min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    // Rotation about an axis by angle (radians), Rodrigues form.
    static Mat3 axis_angle(const Vec3& axis, double angle) {
        Vec3 u = normalized(axis);
        double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
        Mat3 r;
        r.m = {c + u.x * u.x * t,      u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s,
               u.y * u.x * t + u.z * s, c + u.y * u.y * t,      u.y * u.z * t - u.x * s,
               u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t};
        return r;
    }
};

// Rigid transform y = R x + t.
struct Rigid {
    Mat3 rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
    Rigid inverse() const {
        Mat3 rt = rotation.transposed();
        return {rt, -(rt * translation)};
    }
};

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    void grow(const Vec3& p) { lo = min(lo, p); hi = max(hi, p); }
    void grow(const Aabb& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
    bool empty() const { return lo.x > hi.x; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
    double diagonal() const { return empty() ? 0.0 : norm(hi - lo); }

    // Squared distance from a point to the box (0 inside).
    double dist2(const Vec3& p) const {
        double d = 0;
        for (int i = 0; i < 3; ++i) {
            double lo_i = i == 0 ? lo.x : (i == 1 ? lo.y : lo.z);
            double hi_i = i == 0 ? hi.x : (i == 1 ? hi.y : hi.z);
            double v = i == 0 ? p.x : (i == 1 ? p.y : p.z);
            if (v < lo_i) d += (lo_i - v) * (lo_i - v);
            else if (v > hi_i) d += (v - hi_i) * (v - hi_i);
        }
        return d;
    }
};

// Maps scene geometry into the canonical cube: x' = (x - center) * scale.
struct SceneNormalization {
    Vec3 center;
    double scale = 1.0;

    Vec3 apply(const Vec3& x) const { return (x - center) * scale; }
};

// Normalization placing the union of the given boxes inside [-0.9, 0.9]^3.
inline SceneNormalization compute_normalization(const std::vector<Aabb>& boxes) {
    Aabb all;
    for (const Aabb& b : boxes) all.grow(b);
    if (all.empty()) return {};
    SceneNormalization norm;
    norm.center = all.center();
    Vec3 e = all.extent();
    double max_extent = std::max({e.x, e.y, e.z});
    norm.scale = max_extent > 0 ? 1.8 / max_extent : 1.0;
    return norm;
}

// Closest point on triangle (a,b,c) to p, with barycentric coordinates of the
// clamped point. Ericson, Real-Time Collision Detection, 5.1.5.
struct TriClosest {
    Vec3 point;
    double u = 0, v = 0, w = 0;  // point == u*a + v*b + w*c, all in [0,1]
};

inline TriClosest closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                            const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return {a, 1, 0, 0};

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return {b, 0, 1, 0};

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double t = d1 / (d1 - d3);
        return {a + ab * t, 1 - t, t, 0};
    }

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return {c, 0, 0, 1};

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        double t = d2 / (d2 - d6);
        return {a + ac * t, 1 - t, 0, t};
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {b + (c - b) * t, 0, 1 - t, t};
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return {a + ab * v + ac * w, 1 - v - w, v, w};
}

// Distance from point to segment [h, t].
inline double point_segment_dist2(const Vec3& p, const Vec3& h, const Vec3& t) {
    Vec3 d = t - h;
    double len2 = norm2(d);
    double s = len2 > 0 ? std::clamp(dot(p - h, d) / len2, 0.0, 1.0) : 0.0;
    return norm2(p - (h + d * s));
}

}  // namespace warpfield
