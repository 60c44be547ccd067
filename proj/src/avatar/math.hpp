#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace avatar {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Rotation from an unnormalized quaternion (w, x, y, z). The caller may
// store raw coefficients; normalization happens here.
inline Mat3 quat_to_rotation(const Vec4& q_raw) {
    const Vec4 q = q_raw / q_raw.norm();
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

// d(R)/d(q_hat) for a *normalized* quaternion, one 3x3 slice per component.
inline void rotation_jacobian_wrt_unit_quat(const Vec4& q, Mat3 dr[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    dr[0] <<  0, -2 * z,  2 * y,
              2 * z,  0, -2 * x,
             -2 * y,  2 * x,  0;
    dr[1] <<  0,  2 * y,  2 * z,
              2 * y, -4 * x, -2 * w,
              2 * z,  2 * w, -4 * x;
    dr[2] << -4 * y,  2 * x,  2 * w,
              2 * x,  0,  2 * z,
             -2 * w,  2 * z, -4 * y;
    dr[3] << -4 * z, -2 * w,  2 * x,
              2 * w, -4 * z,  2 * y,
              2 * x,  2 * y,  0;
}

// Pull a gradient w.r.t. the rotation matrix back to the raw (unnormalized)
// quaternion coefficients.
inline Vec4 quat_backward(const Vec4& q_raw, const Mat3& d_rot) {
    const double n = q_raw.norm();
    const Vec4 q = q_raw / n;
    Mat3 dr[4];
    rotation_jacobian_wrt_unit_quat(q, dr);
    Vec4 g_unit;
    for (int k = 0; k < 4; ++k) g_unit[k] = (dr[k].array() * d_rot.array()).sum();
    // d(q_hat)/d(q_raw) = (I - q_hat q_hat^T) / |q_raw|
    return (g_unit - q * q.dot(g_unit)) / n;
}

inline Vec4 quat_from_rotation(const Mat3& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    return Vec4(q.w(), q.x(), q.y(), q.z());
}

inline Mat3 axis_angle_to_rotation(const Vec3& aa) {
    const double angle = aa.norm();
    if (angle < 1e-12) return Mat3::Identity();
    return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

// Rigid 4x4 with bottom row (0,0,0,1).
inline Mat4 make_transform(const Mat3& r, const Vec3& t) {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = r;
    m.block<3, 1>(0, 3) = t;
    return m;
}

// Rotation factor of the polar decomposition of a 3x3 linear map.
// Returns false when the map is degenerate (|det| below tol).
inline bool polar_rotation(const Mat3& a, Mat3& rot, double det_tol = 1e-9) {
    if (std::abs(a.determinant()) <= det_tol) return false;
    Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 uvt = svd.matrixU() * svd.matrixV().transpose();
    if (uvt.determinant() < 0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1;
        uvt = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    rot = uvt;
    return true;
}

// Orthonormal frame with the z column along `normal`.
inline Mat3 frame_from_normal(const Vec3& normal) {
    const Vec3 w = normal.normalized();
    Vec3 seed = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = (seed - w * seed.dot(w)).normalized();
    const Vec3 v = w.cross(u);
    Mat3 f;
    f.col(0) = u;
    f.col(1) = v;
    f.col(2) = w;
    return f;
}

}  // namespace avatar
