// Deterministic test scenes: icosphere pairs, a bent two-segment arm with a
// skeleton, a 13,776-face sphere for the decimation path, and a toy radiance
// scene (ground-truth field + cameras) for self-supervised fitting.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "warpfield/deform.hpp"
#include "warpfield/fit.hpp"
#include "warpfield/mesh.hpp"

namespace warpfield {

TriMesh make_icosphere(int subdivisions, double radius);

// Closed UV sphere: `segments` around, `lat_rings` interior latitude circles.
// Face count is exactly 2 * segments * lat_rings.
TriMesh make_uv_sphere(int segments, int lat_rings, double radius);

// Closed cylinder along +z from 0 to `length`, caps filled with centroid
// fans. Face count is exactly 2 * segments * rows.
TriMesh make_capped_cylinder(int segments, int rows, double radius, double length);

// Rotates every vertex above joint_z about the x axis through (0,0,joint_z).
TriMesh bend_top(const TriMesh& mesh, double joint_z, double angle_rad);

// Bent-arm fixture: canonical = straight capped cylinder, deformed = same
// mesh bent by `angle_rad` at joint_z. Shares topology by construction.
PosedPair make_arm_pair(int segments, int rows, double radius, double length, double joint_z,
                        double angle_rad);

// Skeleton for the bent arm, in target (bent) space. bones_per_segment
// subdivides each of the two rigid segments into colinear bones that share
// the segment transform (used to scale skinning cost).
Skeleton make_arm_skeleton(double joint_z, double length, double angle_rad,
                           int bones_per_segment = 1);

// Icosphere pair at two radii (canonical 1.0, deformed `deformed_radius`).
PosedPair make_sphere_pair(int subdivisions, double deformed_radius);

// 13,776-face closed pair for the decimation criterion (UV sphere, deformed
// by an anisotropic scale).
PosedPair make_decimation_pair();

// ---------------------------------------------------------------------------
// Toy radiance scene

struct ToyScene {
    PosedPair pose_identity;         // deformed == canonical icosphere
    PosedPair pose_squashed;         // deformed = anisotropically scaled
    std::vector<Camera> train_cameras;
    Camera test_camera;
    TriPlane gt_planes;
    Decoder gt_decoder;
    SceneNormalization norm;         // shared across both poses
    SamplingConfig sampling;         // coarse-only, black background
};

// `image_size`^2 images, 4 training cameras on a ring plus one held-out.
// The ground-truth field uses smooth random plane features so a fresh field
// of the same shape can recover it.
ToyScene make_toy_scene(int image_size, uint64_t seed);

// Renders the ground-truth field for (camera, pair) in the scene's shared
// normalized frame.
RenderedImage render_toy_ground_truth(const ToyScene& scene, const Camera& camera,
                                      const PosedPair& pair, uint64_t seed);

// All train_cameras x both poses, targets rendered from the ground truth.
std::vector<TrainSample> make_toy_train_samples(const ToyScene& scene);

// Writes the complete fixture tree (OBJ/JSON/PNG/TPLF) under out_dir.
void write_fixtures(const std::string& out_dir, uint64_t seed);

}  // namespace warpfield
