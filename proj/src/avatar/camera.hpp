#pragma once

#include <stdexcept>

#include "avatar/math.hpp"

namespace avatar {

// Pinhole camera, x right / y down / z forward; depth is camera-space z.
struct Camera {
    double fx = 1, fy = 1, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat4 world_to_camera = Mat4::Identity();
    double near_clip = 0.01, far_clip = 100.0;

    void validate() const {
        if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: fx, fy must be positive");
        if (width <= 0 || height <= 0) throw std::invalid_argument("camera: empty image size");
        if (!(0 < near_clip && near_clip < far_clip))
            throw std::invalid_argument("camera: require 0 < near < far");
    }

    Mat3 rotation() const { return world_to_camera.block<3, 3>(0, 0); }
    Vec3 translation() const { return world_to_camera.block<3, 1>(0, 3); }
    Vec3 position() const { return -rotation().transpose() * translation(); }

    Mat3 intrinsic_matrix() const {
        Mat3 k;
        k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
        return k;
    }

    Vec3 to_camera(const Vec3& p_world) const { return rotation() * p_world + translation(); }

    // Projects a camera-space point; caller checks z > 0.
    Vec2 project(const Vec3& p_cam) const {
        return Vec2(fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy);
    }

    // Camera-space point of pixel (x, y) at depth z; pixel centers at +0.5.
    Vec3 backproject(double px, double py, double z) const {
        return Vec3((px + 0.5 - cx) / fx * z, (py + 0.5 - cy) / fy * z, z);
    }
};

inline Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                             double focal, int width, int height) {
    Camera cam;
    cam.fx = cam.fy = focal;
    cam.width = width;
    cam.height = height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    const Vec3 fwd = (target - eye).normalized();
    Vec3 right = fwd.cross(up_hint).normalized();
    const Vec3 down = fwd.cross(right);  // y-down convention
    Mat3 r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = fwd.transpose();
    cam.world_to_camera = make_transform(r, -r * eye);
    return cam;
}

}  // namespace avatar
