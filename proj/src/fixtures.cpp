#include "warpfield/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "warpfield/decimate.hpp"
#include "warpfield/obj_io.hpp"
#include "warpfield/rng.hpp"

namespace warpfield {

TriMesh make_icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh mesh;
    mesh.vertices = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                     {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                     {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            int idx = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
            midpoint[key] = idx;
            return idx;
        };
        std::vector<Tri> faces;
        faces.reserve(mesh.faces.size() * 4);
        for (const Tri& f : mesh.faces) {
            int ab = mid(f.a, f.b), bc = mid(f.b, f.c), ca = mid(f.c, f.a);
            faces.push_back({f.a, ab, ca});
            faces.push_back({f.b, bc, ab});
            faces.push_back({f.c, ca, bc});
            faces.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(faces);
    }
    for (Vec3& v : mesh.vertices) v = normalized(v) * radius;
    return mesh;
}

TriMesh make_uv_sphere(int segments, int lat_rings, double radius) {
    TriMesh mesh;
    const int top = 0;
    mesh.vertices.push_back({0, 0, radius});
    for (int r = 1; r <= lat_rings; ++r) {
        double phi = M_PI * r / (lat_rings + 1);
        for (int s = 0; s < segments; ++s) {
            double theta = 2.0 * M_PI * s / segments;
            mesh.vertices.push_back({radius * std::sin(phi) * std::cos(theta),
                                     radius * std::sin(phi) * std::sin(theta),
                                     radius * std::cos(phi)});
        }
    }
    const int bottom = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0, 0, -radius});

    auto ring = [&](int r, int s) { return 1 + r * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) mesh.faces.push_back({top, ring(0, s), ring(0, s + 1)});
    for (int r = 0; r + 1 < lat_rings; ++r)
        for (int s = 0; s < segments; ++s) {
            mesh.faces.push_back({ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)});
            mesh.faces.push_back({ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)});
        }
    for (int s = 0; s < segments; ++s)
        mesh.faces.push_back({bottom, ring(lat_rings - 1, s + 1), ring(lat_rings - 1, s)});
    return mesh;
}

TriMesh make_capped_cylinder(int segments, int rows, double radius, double length) {
    TriMesh mesh;
    for (int r = 0; r < rows; ++r) {
        double z = length * r / (rows - 1);
        for (int s = 0; s < segments; ++s) {
            double theta = 2.0 * M_PI * s / segments;
            mesh.vertices.push_back({radius * std::cos(theta), radius * std::sin(theta), z});
        }
    }
    auto ring = [&](int r, int s) { return r * segments + (s % segments); };
    // Outward walls: CCW seen from outside.
    for (int r = 0; r + 1 < rows; ++r)
        for (int s = 0; s < segments; ++s) {
            mesh.faces.push_back({ring(r, s), ring(r, s + 1), ring(r + 1, s + 1)});
            mesh.faces.push_back({ring(r, s), ring(r + 1, s + 1), ring(r + 1, s)});
        }
    const int bottom_c = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0, 0, 0});
    const int top_c = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0, 0, length});
    for (int s = 0; s < segments; ++s) {
        mesh.faces.push_back({bottom_c, ring(0, s + 1), ring(0, s)});
        mesh.faces.push_back({top_c, ring(rows - 1, s), ring(rows - 1, s + 1)});
    }
    return mesh;
}

TriMesh bend_top(const TriMesh& mesh, double joint_z, double angle_rad) {
    const Mat3 rot = Mat3::axis_angle({1, 0, 0}, angle_rad);
    const Vec3 joint{0, 0, joint_z};
    TriMesh out = mesh;
    for (Vec3& v : out.vertices)
        if (v.z > joint_z) v = rot * (v - joint) + joint;
    return out;
}

PosedPair make_arm_pair(int segments, int rows, double radius, double length, double joint_z,
                        double angle_rad) {
    PosedPair pair;
    pair.canonical = make_capped_cylinder(segments, rows, radius, length);
    pair.deformed = bend_top(pair.canonical, joint_z, angle_rad);
    return pair;
}

Skeleton make_arm_skeleton(double joint_z, double length, double angle_rad,
                           int bones_per_segment) {
    const Mat3 rot = Mat3::axis_angle({1, 0, 0}, angle_rad);
    const Vec3 joint{0, 0, joint_z};
    const Rigid bend_inv = Rigid{rot, joint - rot * joint}.inverse();

    Skeleton skel;
    auto add_chain = [&](const Vec3& from, const Vec3& to, const Rigid& xf, int n) {
        for (int k = 0; k < n; ++k) {
            Bone b;
            b.head = from + (to - from) * (static_cast<double>(k) / n);
            b.tail = from + (to - from) * (static_cast<double>(k + 1) / n);
            b.to_canonical = xf;
            skel.bones.push_back(b);
        }
    };
    add_chain({0, 0, 0}, joint, Rigid{}, bones_per_segment);
    const Vec3 bent_tip = rot * (Vec3{0, 0, length} - joint) + joint;
    add_chain(joint, bent_tip, bend_inv, bones_per_segment);
    return skel;
}

PosedPair make_sphere_pair(int subdivisions, double deformed_radius) {
    PosedPair pair;
    pair.canonical = make_icosphere(subdivisions, 1.0);
    pair.deformed = pair.canonical;
    for (Vec3& v : pair.deformed.vertices) v *= deformed_radius;
    return pair;
}

PosedPair make_decimation_pair() {
    PosedPair pair;
    pair.canonical = make_uv_sphere(84, 82, 1.0);  // exactly 13,776 faces
    pair.deformed = pair.canonical;
    for (Vec3& v : pair.deformed.vertices) v = {v.x * 1.1, v.y * 0.85, v.z * 1.05};
    return pair;
}

// ---------------------------------------------------------------------------

namespace {

// Smooth random planes: coarse uniform noise bilinearly upsampled so a
// fitted field has a reachable, low-frequency target.
TriPlane smooth_random_planes(int n, int channels, int coarse, double amplitude,
                              uint64_t seed) {
    TriPlane tri = TriPlane::zeros(n, channels);
    for (int p = 0; p < 3; ++p) {
        Rng rng(seed, 0x636f61ULL, p);
        std::vector<double> grid(static_cast<size_t>(coarse) * coarse * channels);
        for (double& v : grid) v = rng.uniform(-amplitude, amplitude);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                double u = (i + 0.5) / n * (coarse - 1);
                double v = (j + 0.5) / n * (coarse - 1);
                int i0 = std::min(static_cast<int>(u), coarse - 2);
                int j0 = std::min(static_cast<int>(v), coarse - 2);
                double fu = u - i0, fv = v - j0;
                for (int c = 0; c < channels; ++c) {
                    auto g = [&](int ii, int jj) {
                        return grid[(static_cast<size_t>(jj) * coarse + ii) * channels + c];
                    };
                    double val = (1 - fu) * (1 - fv) * g(i0, j0) + fu * (1 - fv) * g(i0 + 1, j0) +
                                 (1 - fu) * fv * g(i0, j0 + 1) + fu * fv * g(i0 + 1, j0 + 1);
                    tri.planes[p][(static_cast<size_t>(j) * n + i) * channels + c] =
                        static_cast<float>(val);
                }
            }
    }
    return tri;
}

}  // namespace

ToyScene make_toy_scene(int image_size, uint64_t seed) {
    ToyScene scene;
    scene.pose_identity = make_sphere_pair(3, 1.0);
    scene.pose_squashed = scene.pose_identity;
    for (Vec3& v : scene.pose_squashed.deformed.vertices)
        v = {v.x * 1.15, v.y * 0.85, v.z * 1.05};

    scene.sampling.n_coarse = 128;
    scene.sampling.n_fine = 0;
    scene.sampling.jitter = false;
    scene.sampling.growth = 0.05;
    scene.sampling.background = {0, 0, 0};

    scene.norm = scene_normalization({&scene.pose_identity, &scene.pose_squashed},
                                     scene.sampling.growth);

    const double fl = 1.1 * image_size;
    const Vec3 up{0, 1, 0};
    for (int k = 0; k < 4; ++k) {
        double a = 2.0 * M_PI * k / 4 + 0.35;
        Vec3 pos{3.2 * std::cos(a), 0.9, 3.2 * std::sin(a)};
        scene.train_cameras.push_back(
            Camera::look_at(pos, {0, 0, 0}, up, fl, fl, image_size, image_size));
    }
    scene.test_camera = Camera::look_at({2.4, -1.6, 2.1}, {0, 0, 0}, up, fl, fl, image_size,
                                        image_size);

    // Ground-truth field: smooth features, density biased toward opaque.
    scene.gt_planes = smooth_random_planes(32, 8, 8, 1.0, seed);
    scene.gt_decoder = Decoder::init(8, 16, 8, hash_combine(seed, 0x67f1ULL));
    scene.gt_decoder.b2[0] += 1.5f;
    return scene;
}

RenderedImage render_toy_ground_truth(const ToyScene& scene, const Camera& camera,
                                      const PosedPair& pair, uint64_t seed) {
    const PosedPair norm_pair = normalized(pair, scene.norm);
    const Camera norm_cam = normalized(camera, scene.norm);
    const Deformer deformer = Deformer::surface_field(norm_pair);
    return render_image(scene.gt_planes, scene.gt_decoder, deformer, norm_pair, norm_cam,
                        scene.sampling, seed);
}

std::vector<TrainSample> make_toy_train_samples(const ToyScene& scene) {
    std::vector<TrainSample> samples;
    for (const Camera& cam : scene.train_cameras)
        for (const PosedPair* pair : {&scene.pose_identity, &scene.pose_squashed}) {
            TrainSample s;
            s.camera = cam;
            s.pair = *pair;
            RenderedImage img = render_toy_ground_truth(scene, cam, *pair, 0);
            s.image = ImageF::zeros(cam.width, cam.height, 3);
            for (int j = 0; j < cam.height; ++j)
                for (int i = 0; i < cam.width; ++i)
                    for (int c = 0; c < 3; ++c)
                        s.image.at(i, j, c) = static_cast<float>(img.rgb.at(i, j, c)) / 255.0f;
            samples.push_back(std::move(s));
        }
    return samples;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json bone_json(const Bone& b) {
    nlohmann::json j;
    j["head"] = {b.head.x, b.head.y, b.head.z};
    j["tail"] = {b.tail.x, b.tail.y, b.tail.z};
    j["rotation"] = b.to_canonical.rotation.m;
    j["translation"] = {b.to_canonical.translation.x, b.to_canonical.translation.y,
                        b.to_canonical.translation.z};
    return j;
}

void write_pose_file(const std::string& path, const std::string& canonical_obj,
                     const std::string& deformed_obj, const Skeleton* skeleton) {
    nlohmann::json j;
    j["canonical_obj"] = canonical_obj;
    j["deformed_obj"] = deformed_obj;
    if (skeleton) {
        j["bones"] = nlohmann::json::array();
        for (const Bone& b : skeleton->bones) j["bones"].push_back(bone_json(b));
    }
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

}  // namespace

void write_fixtures(const std::string& out_dir, uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        fs::path dir = fs::path(out_dir) / "sphere_pair";
        fs::create_directories(dir);
        PosedPair pair = make_sphere_pair(3, 1.25);
        save_obj(pair.canonical, (dir / "canonical.obj").string());
        save_obj(pair.deformed, (dir / "deformed.obj").string());
        write_pose_file((dir / "pose.json").string(), "canonical.obj", "deformed.obj", nullptr);
    }
    {
        fs::path dir = fs::path(out_dir) / "arm";
        fs::create_directories(dir);
        PosedPair pair = make_arm_pair(48, 72, 0.25, 2.0, 1.0, M_PI / 4);
        save_obj(pair.canonical, (dir / "canonical.obj").string());
        save_obj(pair.deformed, (dir / "deformed.obj").string());
        Skeleton two = make_arm_skeleton(1.0, 2.0, M_PI / 4, 1);
        write_pose_file((dir / "pose.json").string(), "canonical.obj", "deformed.obj", &two);

        DecimateResult dec = decimate_pair(pair, 1376);
        save_obj(dec.pair.canonical, (dir / "canonical_1376.obj").string());
        save_obj(dec.pair.deformed, (dir / "deformed_1376.obj").string());
        Skeleton many = make_arm_skeleton(1.0, 2.0, M_PI / 4, 13);
        write_pose_file((dir / "pose_1376.json").string(), "canonical_1376.obj",
                        "deformed_1376.obj", &many);
    }
    {
        fs::path dir = fs::path(out_dir) / "decimation_sphere";
        fs::create_directories(dir);
        PosedPair pair = make_decimation_pair();
        save_obj(pair.canonical, (dir / "canonical.obj").string());
        save_obj(pair.deformed, (dir / "deformed.obj").string());
        write_pose_file((dir / "pose.json").string(), "canonical.obj", "deformed.obj", nullptr);
    }
    {
        fs::path dir = fs::path(out_dir) / "toy_scene";
        fs::create_directories(dir);
        ToyScene scene = make_toy_scene(64, seed);
        save_field(scene.gt_planes, scene.gt_decoder, (dir / "ground_truth.tplf").string());
        save_obj(scene.pose_identity.canonical, (dir / "canonical.obj").string());
        save_obj(scene.pose_identity.deformed, (dir / "deformed_a.obj").string());
        save_obj(scene.pose_squashed.deformed, (dir / "deformed_b.obj").string());
        write_pose_file((dir / "pose_a.json").string(), "canonical.obj", "deformed_a.obj",
                        nullptr);
        write_pose_file((dir / "pose_b.json").string(), "canonical.obj", "deformed_b.obj",
                        nullptr);

        nlohmann::json manifest = nlohmann::json::array();
        for (size_t k = 0; k < scene.train_cameras.size(); ++k) {
            std::string cam_name = "cam" + std::to_string(k) + ".json";
            save_camera(scene.train_cameras[k], (dir / cam_name).string());
            for (int p = 0; p < 2; ++p) {
                const PosedPair& pair = p == 0 ? scene.pose_identity : scene.pose_squashed;
                std::string img_name =
                    "target_cam" + std::to_string(k) + (p == 0 ? "_a" : "_b") + ".png";
                RenderedImage img =
                    render_toy_ground_truth(scene, scene.train_cameras[k], pair, 0);
                save_png(img.rgb, (dir / img_name).string());
                manifest.push_back({{"camera", cam_name},
                                    {"image", img_name},
                                    {"pose", p == 0 ? "pose_a.json" : "pose_b.json"}});
            }
        }
        save_camera(scene.test_camera, (dir / "cam_test.json").string());
        std::ofstream mf(dir / "manifest.json");
        mf << manifest.dump(2) << "\n";
    }
}

}  // namespace warpfield
