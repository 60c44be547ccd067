#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "avatar/math.hpp"

namespace avatar {

// Real spherical harmonics up to degree 3, splatting layout (16 basis
// functions, band-major). Colors are decoded as 0.5 + sum_i Y_i(dir) * c_i,
// clamped to [0, 1].

constexpr int kMaxShDegree = 3;

inline constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

void sh_basis(int degree, const Vec3& dir, std::array<double, 16>& out);

// dY_i/d(dir) for the unnormalized direction components; caller chains the
// normalization Jacobian.
void sh_basis_gradient(int degree, const Vec3& dir, std::array<Vec3, 16>& out);

struct ShColor {
    Vec3 rgb;                       // clamped to [0,1]
    std::array<bool, 3> clamped_lo; // per-channel: raw value was below 0
    std::array<bool, 3> clamped_hi; // per-channel: raw value was above 1
};

ShColor sh_to_color(const std::vector<Vec3>& coeffs, int degree, const Vec3& view_dir);

// Backward of sh_to_color for a *unit* view direction. d_rgb is the gradient
// at the clamped color; clamp masks zero the flow. d_dir is the gradient
// w.r.t. the unit direction (still needs the normalization Jacobian to reach
// the surfel center).
void sh_to_color_backward(const std::vector<Vec3>& coeffs, int degree, const Vec3& view_dir,
                          const ShColor& fwd, const Vec3& d_rgb,
                          std::vector<Vec3>& d_coeffs, Vec3& d_dir);

}  // namespace avatar
