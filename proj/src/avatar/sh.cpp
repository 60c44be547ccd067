#include "avatar/sh.hpp"

namespace avatar {

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

void check_degree(int degree) {
    if (degree < 0 || degree > kMaxShDegree)
        throw std::invalid_argument("sh degree must be in [0,3]");
}

}  // namespace

void sh_basis(int degree, const Vec3& dir, std::array<double, 16>& out) {
    check_degree(degree);
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out.fill(0.0);
    out[0] = kC0;
    if (degree < 1) return;
    out[1] = -kC1 * y;
    out[2] = kC1 * z;
    out[3] = -kC1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kC2[0] * x * y;
    out[5] = kC2[1] * y * z;
    out[6] = kC2[2] * (2 * zz - xx - yy);
    out[7] = kC2[3] * x * z;
    out[8] = kC2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kC3[0] * y * (3 * xx - yy);
    out[10] = kC3[1] * x * y * z;
    out[11] = kC3[2] * y * (4 * zz - xx - yy);
    out[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
    out[13] = kC3[4] * x * (4 * zz - xx - yy);
    out[14] = kC3[5] * z * (xx - yy);
    out[15] = kC3[6] * x * (xx - 3 * yy);
}

void sh_basis_gradient(int degree, const Vec3& dir, std::array<Vec3, 16>& out) {
    check_degree(degree);
    const double x = dir.x(), y = dir.y(), z = dir.z();
    for (auto& g : out) g.setZero();
    if (degree < 1) return;
    out[1] = Vec3(0, -kC1, 0);
    out[2] = Vec3(0, 0, kC1);
    out[3] = Vec3(-kC1, 0, 0);
    if (degree < 2) return;
    out[4] = kC2[0] * Vec3(y, x, 0);
    out[5] = kC2[1] * Vec3(0, z, y);
    out[6] = kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
    out[7] = kC2[3] * Vec3(z, 0, x);
    out[8] = kC2[4] * Vec3(2 * x, -2 * y, 0);
    if (degree < 3) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[9] = kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0);
    out[10] = kC3[1] * Vec3(y * z, x * z, x * y);
    out[11] = kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
    out[12] = kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
    out[13] = kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
    out[14] = kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy);
    out[15] = kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0);
}

ShColor sh_to_color(const std::vector<Vec3>& coeffs, int degree, const Vec3& view_dir) {
    check_degree(degree);
    const int n = sh_coeff_count(degree);
    if (static_cast<int>(coeffs.size()) < n)
        throw std::invalid_argument("sh coefficient vector too short for degree");
    std::array<double, 16> basis;
    sh_basis(degree, view_dir, basis);
    Vec3 raw = Vec3::Zero();
    for (int i = 0; i < n; ++i) raw += basis[i] * coeffs[i];
    raw.array() += 0.5;
    ShColor out;
    for (int c = 0; c < 3; ++c) {
        out.clamped_lo[c] = raw[c] < 0.0;
        out.clamped_hi[c] = raw[c] > 1.0;
        out.rgb[c] = std::min(1.0, std::max(0.0, raw[c]));
    }
    return out;
}

void sh_to_color_backward(const std::vector<Vec3>& coeffs, int degree, const Vec3& view_dir,
                          const ShColor& fwd, const Vec3& d_rgb,
                          std::vector<Vec3>& d_coeffs, Vec3& d_dir) {
    const int n = sh_coeff_count(degree);
    Vec3 d_raw = d_rgb;
    for (int c = 0; c < 3; ++c)
        if (fwd.clamped_lo[c] || fwd.clamped_hi[c]) d_raw[c] = 0.0;
    std::array<double, 16> basis;
    std::array<Vec3, 16> basis_grad;
    sh_basis(degree, view_dir, basis);
    sh_basis_gradient(degree, view_dir, basis_grad);
    if (static_cast<int>(d_coeffs.size()) < n) d_coeffs.resize(n, Vec3::Zero());
    d_dir.setZero();
    for (int i = 0; i < n; ++i) {
        d_coeffs[i] += basis[i] * d_raw;
        d_dir += basis_grad[i] * coeffs[i].dot(d_raw);
    }
}

}  // namespace avatar
