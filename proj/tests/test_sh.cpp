#include <doctest.h>

#include <random>

#include "avatar/sh.hpp"

using namespace avatar;

namespace {
Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec3 v(g(rng), g(rng), g(rng));
    return v.normalized();
}
}  // namespace

TEST_CASE("degree-0 basis is the constant 1/(2 sqrt(pi))") {
    std::array<double, 16> b{};
    sh_basis(0, Vec3(0.3, -0.9, 0.1).normalized(), b);
    CHECK(b[0] == doctest::Approx(0.28209479177387814).epsilon(1e-12));
}

TEST_CASE("degree-1 basis at the coordinate axes") {
    std::array<double, 16> b{};
    const double c1 = 0.4886025119029199;
    sh_basis(1, Vec3::UnitZ(), b);
    CHECK(b[1] == doctest::Approx(0.0));
    CHECK(b[2] == doctest::Approx(c1));   // the z-aligned band-1 function
    CHECK(b[3] == doctest::Approx(0.0));
    sh_basis(1, Vec3::UnitY(), b);
    CHECK(std::abs(b[1]) == doctest::Approx(c1));
    CHECK(b[2] == doctest::Approx(0.0));
}

TEST_CASE("basis parity: odd bands flip with the direction") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const Vec3 d = random_unit(rng);
        std::array<double, 16> bp{}, bm{};
        sh_basis(3, d, bp);
        sh_basis(3, Vec3(-d), bm);
        for (int i = 1; i < 4; ++i) CHECK(bm[i] == doctest::Approx(-bp[i]));    // band 1
        for (int i = 4; i < 9; ++i) CHECK(bm[i] == doctest::Approx(bp[i]));     // band 2
        for (int i = 9; i < 16; ++i) CHECK(bm[i] == doctest::Approx(-bp[i]));   // band 3
    }
}

TEST_CASE("sh_basis_gradient matches finite differences") {
    std::mt19937_64 rng(11);
    const double eps = 1e-6;
    for (int trial = 0; trial < 4; ++trial) {
        const Vec3 d = random_unit(rng);
        std::array<Vec3, 16> grad{};
        sh_basis_gradient(3, d, grad);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 dp = d, dm = d;
            dp[axis] += eps;
            dm[axis] -= eps;
            std::array<double, 16> bp{}, bm{};
            // the gradient is w.r.t. the raw components (no renormalization)
            sh_basis(3, dp, bp);
            sh_basis(3, dm, bm);
            for (int i = 0; i < 16; ++i)
                CHECK(grad[i][axis] == doctest::Approx((bp[i] - bm[i]) / (2 * eps)).epsilon(1e-5));
        }
    }
}

TEST_CASE("sh_to_color applies the 0.5 shift and clamps") {
    std::vector<Vec3> coeffs(1, Vec3::Zero());
    const Vec3 dir = Vec3::UnitZ();
    CHECK((sh_to_color(coeffs, 0, dir).rgb - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);

    coeffs[0] = Vec3(10.0, -10.0, 0.0);
    const ShColor c = sh_to_color(coeffs, 0, dir);
    CHECK(c.rgb.x() == 1.0);
    CHECK(c.clamped_hi[0]);
    CHECK(c.rgb.y() == 0.0);
    CHECK(c.clamped_lo[1]);
    CHECK_FALSE(c.clamped_lo[2]);
    CHECK_FALSE(c.clamped_hi[2]);
}

TEST_CASE("sh_to_color rejects short coefficient vectors") {
    std::vector<Vec3> coeffs(4, Vec3::Zero());
    CHECK_THROWS_AS(sh_to_color(coeffs, 2, Vec3::UnitZ()), std::invalid_argument);
}

TEST_CASE("sh_to_color_backward matches finite differences") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    const Vec3 dir = random_unit(rng);
    std::vector<Vec3> coeffs(16);
    for (auto& c : coeffs) c = 0.1 * Vec3(g(rng), g(rng), g(rng));
    const Vec3 d_rgb(0.7, -0.4, 1.1);

    const ShColor fwd = sh_to_color(coeffs, 3, dir);
    std::vector<Vec3> d_coeffs(16, Vec3::Zero());
    Vec3 d_dir;
    sh_to_color_backward(coeffs, 3, dir, fwd, d_rgb, d_coeffs, d_dir);

    const double eps = 1e-6;
    auto loss = [&](const std::vector<Vec3>& cs, const Vec3& d) {
        return sh_to_color(cs, 3, d).rgb.dot(d_rgb);
    };
    for (int i = 0; i < 16; ++i)
        for (int ch = 0; ch < 3; ++ch) {
            auto cp = coeffs, cm = coeffs;
            cp[i][ch] += eps;
            cm[i][ch] -= eps;
            CHECK(d_coeffs[i][ch] ==
                  doctest::Approx((loss(cp, dir) - loss(cm, dir)) / (2 * eps)).epsilon(1e-5));
        }
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 dp = dir, dm = dir;
        dp[axis] += eps;
        dm[axis] -= eps;
        CHECK(d_dir[axis] ==
              doctest::Approx((loss(coeffs, dp) - loss(coeffs, dm)) / (2 * eps)).epsilon(1e-5));
    }
}

TEST_CASE("clamped channels carry zero gradient") {
    std::vector<Vec3> coeffs(1, Vec3(10.0, 0.0, -10.0));
    const ShColor fwd = sh_to_color(coeffs, 0, Vec3::UnitZ());
    std::vector<Vec3> d_coeffs(1, Vec3::Zero());
    Vec3 d_dir;
    sh_to_color_backward(coeffs, 0, Vec3::UnitZ(), fwd, Vec3(1, 1, 1), d_coeffs, d_dir);
    CHECK(d_coeffs[0].x() == 0.0);
    CHECK(d_coeffs[0].y() > 0.0);
    CHECK(d_coeffs[0].z() == 0.0);
}
