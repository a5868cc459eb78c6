#include "warpfield/deform.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "warpfield/obj_io.hpp"
#include "warpfield/threading.hpp"

namespace warpfield {

// ---------------------------------------------------------------------------
// Surface field

SurfaceFieldDeformer::SurfaceFieldDeformer(PosedPair p) : pair(std::move(p)) {
    pair.validate();
    bvh = Bvh(pair.deformed);
    canonical_face_normals = face_normals(pair.canonical);
    deformed_face_normals = face_normals(pair.deformed);
}

ClosestHit closest_triangle(const Vec3& x, const SurfaceFieldDeformer& deformer) {
    if (deformer.bvh.empty())
        throw std::runtime_error("closest_triangle: deformed mesh has no usable faces");
    return deformer.bvh.closest(x);
}

Vec3 sf_deform(const Vec3& x, const SurfaceFieldDeformer& deformer) {
    const ClosestHit hit = closest_triangle(x, deformer);
    const Tri& t = deformer.pair.canonical.faces[hit.face];
    const auto& vc = deformer.pair.canonical.vertices;
    const Vec3 canonical_point = vc[t.a] * hit.u + vc[t.b] * hit.v + vc[t.c] * hit.w;
    const double offset = dot(x - hit.point, deformer.deformed_face_normals[hit.face]);
    return canonical_point + deformer.canonical_face_normals[hit.face] * offset;
}

// ---------------------------------------------------------------------------
// Mean value coordinates (Ju, Schaefer, Warren 2005 evaluation)

std::vector<double> mvc_weights(const Vec3& x, const TriMesh& mesh) {
    const size_t n = mesh.vertices.size();
    std::vector<double> weights(n, 0.0);

    std::vector<double> dist(n);
    std::vector<Vec3> unit(n);
    for (size_t j = 0; j < n; ++j) {
        Vec3 r = mesh.vertices[j] - x;
        dist[j] = norm(r);
        if (dist[j] < 1e-12) {  // coincident with a vertex
            weights[j] = 1.0;
            return weights;
        }
        unit[j] = r / dist[j];
    }

    constexpr double eps = 1e-10;
    double total = 0.0;
    for (const Tri& t : mesh.faces) {
        const int idx[3] = {t.a, t.b, t.c};
        const Vec3 u[3] = {unit[t.a], unit[t.b], unit[t.c]};

        double theta[3], half = 0.0;
        for (int k = 0; k < 3; ++k) {
            double l = norm(u[(k + 1) % 3] - u[(k + 2) % 3]);
            theta[k] = 2.0 * std::asin(std::clamp(0.5 * l, -1.0, 1.0));
            half += 0.5 * theta[k];
        }
        if (M_PI - half < eps) {
            // x lies on this triangle: 2D barycentric weights, all others zero.
            std::fill(weights.begin(), weights.end(), 0.0);
            double s = 0.0;
            double w[3];
            for (int k = 0; k < 3; ++k) {
                w[k] = std::sin(theta[k]) * dist[idx[(k + 1) % 3]] * dist[idx[(k + 2) % 3]];
                s += w[k];
            }
            for (int k = 0; k < 3; ++k) weights[idx[k]] = w[k] / s;
            return weights;
        }

        double c[3], s[3];
        const double det = dot(u[0], cross(u[1], u[2]));
        const double sin_half = std::sin(half);
        bool on_plane = false;
        for (int k = 0; k < 3; ++k) {
            c[k] = 2.0 * sin_half * std::sin(half - theta[k]) /
                       (std::sin(theta[(k + 1) % 3]) * std::sin(theta[(k + 2) % 3])) -
                   1.0;
            double sq = 1.0 - c[k] * c[k];
            s[k] = (det >= 0 ? 1.0 : -1.0) * std::sqrt(std::max(0.0, sq));
            if (std::abs(s[k]) <= eps) on_plane = true;
        }
        if (on_plane) continue;  // x is coplanar with t but outside it

        for (int k = 0; k < 3; ++k) {
            double w = (theta[k] - c[(k + 1) % 3] * theta[(k + 2) % 3] -
                        c[(k + 2) % 3] * theta[(k + 1) % 3]) /
                       (dist[idx[k]] * std::sin(theta[(k + 1) % 3]) * s[(k + 2) % 3]);
            weights[idx[k]] += w;
            total += w;
        }
    }

    double abs_sum = 0.0;
    for (double w : weights) abs_sum += std::abs(w);
    if (!(std::abs(total) > 1e-12 * std::max(abs_sum, 1.0)))
        throw std::domain_error("mvc_weights: degenerate weight sum");
    for (double& w : weights) w /= total;
    return weights;
}

MvcDeformer::MvcDeformer(PosedPair p) : pair(std::move(p)) {
    pair.validate();
    bvh = Bvh(pair.deformed);
    deformed_face_normals = face_normals(pair.deformed);
}

Vec3 MvcDeformer::deform(const Vec3& x) const {
    Vec3 query = x;
    if (!bvh.empty()) {
        ClosestHit hit = bvh.closest(x);
        if (std::sqrt(hit.dist2) < 1e-9)
            query = hit.point + deformed_face_normals[hit.face] * 1e-7;
    }
    std::vector<double> w = mvc_weights(query, pair.deformed);
    Vec3 out;
    for (size_t j = 0; j < w.size(); ++j)
        if (w[j] != 0.0) out += pair.canonical.vertices[j] * w[j];
    return out;
}

Vec3 mvc_deform(const Vec3& x, const PosedPair& pair) {
    return MvcDeformer(pair).deform(x);
}

MvcGrid mvc_grid_build(const PosedPair& pair, int resolution) {
    if (resolution < 2) throw std::runtime_error("mvc_grid_build: resolution must be >= 2");
    MvcGrid grid;
    grid.resolution = resolution;
    Aabb box = pair.deformed.bounds();
    Vec3 c = box.center(), half = box.extent() * 0.5 * 1.1;
    grid.bounds.lo = c - half;
    grid.bounds.hi = c + half;

    MvcDeformer deformer(pair);
    const Vec3 step = grid.bounds.extent() / static_cast<double>(resolution - 1);
    grid.samples.resize(static_cast<size_t>(resolution) * resolution * resolution);
    const size_t slab = static_cast<size_t>(resolution) * resolution;
    parallel_chunks(resolution, 1, [&](size_t z0, size_t z1) {
        for (size_t iz = z0; iz < z1; ++iz)
            for (int iy = 0; iy < resolution; ++iy)
                for (int ix = 0; ix < resolution; ++ix) {
                    Vec3 node = grid.bounds.lo +
                                Vec3{step.x * ix, step.y * iy, step.z * static_cast<double>(iz)};
                    Vec3 mapped;
                    try {
                        mapped = deformer.deform(node);
                    } catch (const std::domain_error&) {
                        mapped = node;  // far-exterior node, keep it in place
                    }
                    grid.samples[iz * slab + static_cast<size_t>(iy) * resolution + ix] = mapped;
                }
    });
    return grid;
}

Vec3 mvc_grid_deform(const Vec3& x, const MvcGrid& grid) {
    const int res = grid.resolution;
    const Vec3 ext = grid.bounds.extent();
    auto cell = [&](double v, double lo, double e) {
        double s = e > 0 ? (v - lo) / e * (res - 1) : 0.0;
        s = std::clamp(s, 0.0, static_cast<double>(res - 1));
        int i = std::min(static_cast<int>(s), res - 2);
        return std::pair<int, double>{i, s - i};
    };
    auto [ix, fx] = cell(x.x, grid.bounds.lo.x, ext.x);
    auto [iy, fy] = cell(x.y, grid.bounds.lo.y, ext.y);
    auto [iz, fz] = cell(x.z, grid.bounds.lo.z, ext.z);

    Vec3 out;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
                out += grid.samples[grid.index(ix + dx, iy + dy, iz + dz)] * w;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Skinning

void Skeleton::validate() const {
    for (size_t i = 0; i < bones.size(); ++i) {
        const Bone& b = bones[i];
        if (norm2(b.tail - b.head) == 0.0)
            throw std::runtime_error("bone " + std::to_string(i) + ": head == tail");
        const Mat3& r = b.to_canonical.rotation;
        Mat3 prod = r.transposed() * r;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c)
                if (std::abs(prod(a, c) - (a == c ? 1.0 : 0.0)) > 1e-6)
                    throw std::runtime_error("bone " + std::to_string(i) +
                                             ": rotation not orthonormal");
        if (std::abs(r.det() - 1.0) > 1e-6)
            throw std::runtime_error("bone " + std::to_string(i) + ": det(R) != 1");
    }
}

int closest_bone(const Vec3& x, const Skeleton& skeleton) {
    if (skeleton.bones.empty()) throw std::runtime_error("closest_bone: empty skeleton");
    int best = 0;
    double best_d2 = point_segment_dist2(x, skeleton.bones[0].head, skeleton.bones[0].tail);
    for (size_t i = 1; i < skeleton.bones.size(); ++i) {
        double d2 = point_segment_dist2(x, skeleton.bones[i].head, skeleton.bones[i].tail);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Vec3 skin_deform(const Vec3& x, const Skeleton& skeleton) {
    return skeleton.bones[closest_bone(x, skeleton)].to_canonical.apply(x);
}

// ---------------------------------------------------------------------------
// Handle

DeformMethod deform_method_from_string(const std::string& name) {
    if (name == "sf") return DeformMethod::SurfaceField;
    if (name == "skin") return DeformMethod::Skinning;
    if (name == "mvc") return DeformMethod::MvcFull;
    if (name == "mvc-grid") return DeformMethod::MvcGrid;
    if (name == "identity") return DeformMethod::Identity;
    throw std::runtime_error("unknown deform method '" + name +
                             "' (expected sf|skin|mvc|mvc-grid|identity)");
}

std::string to_string(DeformMethod method) {
    switch (method) {
        case DeformMethod::SurfaceField: return "sf";
        case DeformMethod::Skinning: return "skin";
        case DeformMethod::MvcFull: return "mvc";
        case DeformMethod::MvcGrid: return "mvc-grid";
        case DeformMethod::Identity: return "identity";
    }
    return "?";
}

Deformer Deformer::surface_field(PosedPair pair) {
    Deformer d;
    d.method_ = DeformMethod::SurfaceField;
    d.sf_ = std::make_shared<SurfaceFieldDeformer>(std::move(pair));
    return d;
}

Deformer Deformer::skinning(Skeleton skeleton) {
    skeleton.validate();
    Deformer d;
    d.method_ = DeformMethod::Skinning;
    d.skeleton_ = std::make_shared<Skeleton>(std::move(skeleton));
    return d;
}

Deformer Deformer::mvc_full(PosedPair pair) {
    Deformer d;
    d.method_ = DeformMethod::MvcFull;
    d.mvc_ = std::make_shared<MvcDeformer>(std::move(pair));
    return d;
}

Deformer Deformer::mvc_grid(PosedPair pair, int resolution) {
    Deformer d;
    d.method_ = DeformMethod::MvcGrid;
    d.grid_ = std::make_shared<MvcGrid>(mvc_grid_build(pair, resolution));
    return d;
}

Deformer Deformer::identity() { return Deformer(); }

Vec3 Deformer::operator()(const Vec3& x) const {
    switch (method_) {
        case DeformMethod::SurfaceField: return sf_deform(x, *sf_);
        case DeformMethod::Skinning: return skin_deform(x, *skeleton_);
        case DeformMethod::MvcFull: return mvc_->deform(x);
        case DeformMethod::MvcGrid: return mvc_grid_deform(x, *grid_);
        case DeformMethod::Identity: return x;
    }
    return x;
}

std::vector<Vec3> deform_batch(const std::vector<Vec3>& points, const Deformer& deformer) {
    std::vector<Vec3> out(points.size());
    parallel_chunks(points.size(), 1024, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) out[i] = deformer(points[i]);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Pose file

PoseFile load_pose_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose file " + path);
    nlohmann::json j = nlohmann::json::parse(in);

    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    PoseFile pose;
    pose.pair.canonical = load_obj(resolve(j.at("canonical_obj").get<std::string>()));
    pose.pair.deformed = load_obj(resolve(j.at("deformed_obj").get<std::string>()));
    pose.pair.validate();

    if (j.contains("bones")) {
        Skeleton skel;
        for (const auto& jb : j.at("bones")) {
            Bone b;
            auto h = jb.at("head"), t = jb.at("tail"), tr = jb.at("translation");
            b.head = {h[0], h[1], h[2]};
            b.tail = {t[0], t[1], t[2]};
            auto r = jb.at("rotation");
            for (int k = 0; k < 9; ++k) b.to_canonical.rotation.m[k] = r[k];
            b.to_canonical.translation = {tr[0], tr[1], tr[2]};
            skel.bones.push_back(b);
        }
        skel.validate();
        pose.skeleton = std::move(skel);
    }
    return pose;
}

Deformer make_deformer(const PoseFile& pose, DeformMethod method, int grid_resolution) {
    switch (method) {
        case DeformMethod::SurfaceField: return Deformer::surface_field(pose.pair);
        case DeformMethod::Skinning:
            if (!pose.skeleton) throw std::runtime_error("pose file has no bones");
            return Deformer::skinning(*pose.skeleton);
        case DeformMethod::MvcFull: return Deformer::mvc_full(pose.pair);
        case DeformMethod::MvcGrid: return Deformer::mvc_grid(pose.pair, grid_resolution);
        case DeformMethod::Identity: return Deformer::identity();
    }
    throw std::runtime_error("unreachable");
}

}  // namespace warpfield
