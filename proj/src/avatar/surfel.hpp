#pragma once

#include <vector>

#include "avatar/math.hpp"
#include "avatar/sh.hpp"

namespace avatar {

// One 2D Gaussian surfel. Orientation is stored as an unnormalized
// quaternion, scales as log-scales and opacity as a logit so every stored
// parameter is unconstrained under gradient descent.
struct Surfel {
    Vec3 center = Vec3::Zero();
    Vec4 quat = Vec4(1, 0, 0, 0);  // (w,x,y,z), normalized on use
    Vec2 log_scale = Vec2::Zero();
    double opacity_logit = 0.0;
    std::vector<Vec3> sh_coeffs;   // (degree+1)^2 entries, RGB each

    // LBS frame transport fallback flag: set when the blended linear map was
    // degenerate and the canonical frame was kept.
    bool frame_degenerate = false;

    Mat3 rotation() const { return quat_to_rotation(quat); }
    Vec3 tangent_u() const { return rotation().col(0); }
    Vec3 tangent_v() const { return rotation().col(1); }
    Vec3 normal() const { return rotation().col(2); }
    Vec2 scale() const { return log_scale.array().exp(); }
    double opacity() const { return sigmoid(opacity_logit); }

    // Geometry matrix H: maps (u, v, 1) homogeneously to world space.
    Eigen::Matrix<double, 4, 3> geometry() const {
        const Mat3 r = rotation();
        const Vec2 s = scale();
        Eigen::Matrix<double, 4, 3> h;
        h.col(0) << s.x() * r.col(0), 0.0;
        h.col(1) << s.y() * r.col(1), 0.0;
        h.col(2) << center, 1.0;
        return h;
    }
};

// Point on the splat's tangent plane at local coordinates (u, v).
inline Vec3 surfel_point(const Surfel& s, double u, double v) {
    const Mat3 r = s.rotation();
    const Vec2 sc = s.scale();
    return s.center + sc.x() * r.col(0) * u + sc.y() * r.col(1) * v;
}

inline double gaussian_weight(double u, double v) {
    return std::exp(-0.5 * (u * u + v * v));
}

inline Vec3 surfel_normal(const Surfel& s) { return s.normal(); }

inline Surfel make_surfel(const Vec3& center, const Mat3& frame, const Vec2& scale,
                          double opacity, int sh_degree, const Vec3& dc_color) {
    Surfel s;
    s.center = center;
    s.quat = quat_from_rotation(frame);
    s.log_scale = scale.array().log();
    s.opacity_logit = logit(opacity);
    s.sh_coeffs.assign(sh_coeff_count(sh_degree), Vec3::Zero());
    // DC term reproduces dc_color under the 0.5-shifted decoding.
    s.sh_coeffs[0] = (dc_color.array() - 0.5) / 0.28209479177387814;
    return s;
}

}  // namespace avatar
