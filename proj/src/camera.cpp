#include "warpfield/camera.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace warpfield {

void Camera::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::runtime_error("camera: fx, fy must be positive");
    if (width < 1 || height < 1) throw std::runtime_error("camera: empty image");
    const Mat3& r = world_from_camera.rotation;
    Mat3 prod = r.transposed() * r;
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c)
            if (std::abs(prod(a, c) - (a == c ? 1.0 : 0.0)) > 1e-6)
                throw std::runtime_error("camera: rotation not orthonormal");
}

Ray Camera::pixel_ray(double px, double py) const {
    Vec3 dir_cam{(px - cx) / fx, (py - cy) / fy, 1.0};
    return {world_from_camera.translation, normalized(world_from_camera.rotation * dir_cam)};
}

Camera Camera::look_at(const Vec3& position, const Vec3& target, const Vec3& up, double fx,
                       double fy, int width, int height) {
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.width = width;
    cam.height = height;

    Vec3 z = normalized(target - position);
    Vec3 x = normalized(cross(z, up));
    if (norm2(x) < 1e-12)
        throw std::runtime_error("look_at: view direction parallel to up vector");
    Vec3 y = cross(z, x);  // y points "down" for an up-ish hint
    Mat3 r;
    r.m = {x.x, y.x, z.x, x.y, y.y, z.y, x.z, y.z, z.z};  // columns are the axes
    cam.world_from_camera = {r, position};
    return cam;
}

std::vector<Ray> generate_rays(const Camera& cam) {
    cam.validate();
    std::vector<Ray> rays;
    rays.reserve(static_cast<size_t>(cam.width) * cam.height);
    for (int j = 0; j < cam.height; ++j)
        for (int i = 0; i < cam.width; ++i) rays.push_back(cam.pixel_ray(i + 0.5, j + 0.5));
    return rays;
}

Camera load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open camera file " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    Camera cam;
    cam.fx = j.at("fx");
    cam.fy = j.at("fy");
    cam.cx = j.at("cx");
    cam.cy = j.at("cy");
    cam.width = j.at("width");
    cam.height = j.at("height");
    auto r = j.at("rotation");
    for (int k = 0; k < 9; ++k) cam.world_from_camera.rotation.m[k] = r[k];
    auto t = j.at("translation");
    cam.world_from_camera.translation = {t[0], t[1], t[2]};
    cam.validate();
    return cam;
}

void save_camera(const Camera& cam, const std::string& path) {
    nlohmann::json j;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["rotation"] = cam.world_from_camera.rotation.m;
    j["translation"] = {cam.world_from_camera.translation.x, cam.world_from_camera.translation.y,
                        cam.world_from_camera.translation.z};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

Camera normalized(const Camera& cam, const SceneNormalization& norm) {
    Camera out = cam;
    out.world_from_camera.translation = norm.apply(cam.world_from_camera.translation);
    return out;
}

}  // namespace warpfield
