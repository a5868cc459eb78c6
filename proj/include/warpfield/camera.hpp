// Pinhole camera. Convention: +z forward, x right, y down in the camera
// frame; rays pass through pixel centers at half-integer coordinates.
#pragma once

#include <string>

#include "warpfield/geom.hpp"

namespace warpfield {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
};

struct Camera {
    double fx = 1, fy = 1, cx = 0.5, cy = 0.5;  // pixels
    int width = 1, height = 1;
    Rigid world_from_camera;

    void validate() const;

    // px/py are continuous pixel coordinates; pixel (i,j) center is
    // (i+0.5, j+0.5).
    Ray pixel_ray(double px, double py) const;

    Vec3 position() const { return world_from_camera.translation; }
    Vec3 forward() const { return world_from_camera.rotation * Vec3{0, 0, 1}; }

    // Camera at `position` with +z toward `target`; `up` is the world up hint.
    static Camera look_at(const Vec3& position, const Vec3& target, const Vec3& up, double fx,
                          double fy, int width, int height);
};

// Per-pixel rays through pixel centers, row-major.
std::vector<Ray> generate_rays(const Camera& cam);

// JSON: {fx, fy, cx, cy, width, height, rotation (3x3 row-major), translation}.
Camera load_camera(const std::string& path);
void save_camera(const Camera& cam, const std::string& path);

Camera normalized(const Camera& cam, const SceneNormalization& norm);

}  // namespace warpfield
