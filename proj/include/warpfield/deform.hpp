// Volume deformation backends mapping target-space points to canonical
// space:
//   - SurfaceFieldDeformer: nearest-triangle transfer of the clamped
//     barycentric location plus the signed normal offset.
//   - mean value coordinates, full per-point and grid-approximated.
//   - closest-bone rigid skinning (no weight blending).
// All deformers are immutable after construction and safe to share across
// threads.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "warpfield/bvh.hpp"
#include "warpfield/mesh.hpp"

namespace warpfield {

// ---------------------------------------------------------------------------
// Surface field

struct SurfaceFieldDeformer {
    PosedPair pair;
    Bvh bvh;  // over the deformed mesh
    std::vector<Vec3> canonical_face_normals;
    std::vector<Vec3> deformed_face_normals;

    explicit SurfaceFieldDeformer(PosedPair p);
};

// Nearest triangle of the deformed mesh; ties break to the lowest face index
// and the result matches a brute-force scan exactly.
ClosestHit closest_triangle(const Vec3& x, const SurfaceFieldDeformer& deformer);

Vec3 sf_deform(const Vec3& x, const SurfaceFieldDeformer& deformer);

// ---------------------------------------------------------------------------
// Mean value coordinates

// Normalized MVC weights of x w.r.t. all mesh vertices. Points coincident
// with a vertex get that vertex's indicator; points on a triangle get its
// barycentric weights. Throws std::domain_error when the weight sum
// degenerates (can happen well outside the mesh).
std::vector<double> mvc_weights(const Vec3& x, const TriMesh& mesh);

struct MvcDeformer {
    PosedPair pair;
    Bvh bvh;  // deformed mesh, for the near-surface nudge
    std::vector<Vec3> deformed_face_normals;

    explicit MvcDeformer(PosedPair p);

    // Points within 1e-9 of the deformed surface are nudged 1e-7 along the
    // closest face's outward normal before weight evaluation.
    Vec3 deform(const Vec3& x) const;
};

Vec3 mvc_deform(const Vec3& x, const PosedPair& pair);

struct MvcGrid {
    int resolution = 16;
    Aabb bounds;               // deformed-mesh bbox inflated by 10%
    std::vector<Vec3> samples;  // resolution^3 canonical positions

    size_t index(int ix, int iy, int iz) const {
        return (static_cast<size_t>(iz) * resolution + iy) * resolution + ix;
    }
};

MvcGrid mvc_grid_build(const PosedPair& pair, int resolution = 16);

// Trilinear interpolation of the 8 surrounding nodes; queries outside the
// bounds are clamped.
Vec3 mvc_grid_deform(const Vec3& x, const MvcGrid& grid);

// ---------------------------------------------------------------------------
// Skinning

struct Bone {
    Vec3 head, tail;     // segment in target space
    Rigid to_canonical;
};

struct Skeleton {
    std::vector<Bone> bones;

    void validate() const;  // head != tail, rotations orthonormal with det +1
};

// Index minimizing point-to-segment distance; ties break to the lowest index.
int closest_bone(const Vec3& x, const Skeleton& skeleton);

Vec3 skin_deform(const Vec3& x, const Skeleton& skeleton);

// ---------------------------------------------------------------------------
// Uniform handle

enum class DeformMethod { SurfaceField, Skinning, MvcFull, MvcGrid, Identity };

DeformMethod deform_method_from_string(const std::string& name);
std::string to_string(DeformMethod method);

class Deformer {
public:
    static Deformer surface_field(PosedPair pair);
    static Deformer skinning(Skeleton skeleton);
    static Deformer mvc_full(PosedPair pair);
    static Deformer mvc_grid(PosedPair pair, int resolution = 16);
    static Deformer identity();

    DeformMethod method() const { return method_; }
    Vec3 operator()(const Vec3& x) const;

    const SurfaceFieldDeformer* surface_field_backend() const { return sf_.get(); }

private:
    Deformer() = default;
    DeformMethod method_ = DeformMethod::Identity;
    std::shared_ptr<const SurfaceFieldDeformer> sf_;
    std::shared_ptr<const MvcDeformer> mvc_;
    std::shared_ptr<const MvcGrid> grid_;
    std::shared_ptr<const Skeleton> skeleton_;
};

// Elementwise scalar deformation, evaluated in parallel chunks; output is
// identical to sequential evaluation.
std::vector<Vec3> deform_batch(const std::vector<Vec3>& points, const Deformer& deformer);

// ---------------------------------------------------------------------------
// Pose file

// JSON: {canonical_obj, deformed_obj, bones?: [{head, tail, rotation (3x3
// row-major), translation}]}. Mesh paths resolve relative to the pose file.
struct PoseFile {
    PosedPair pair;
    std::optional<Skeleton> skeleton;
};

PoseFile load_pose_file(const std::string& path);

// Builds the requested backend from a pose file's contents.
Deformer make_deformer(const PoseFile& pose, DeformMethod method, int grid_resolution = 16);

}  // namespace warpfield
