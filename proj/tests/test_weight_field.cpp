#include <doctest.h>

#include <filesystem>
#include <random>

#include "avatar/rig.hpp"
#include "avatar/weight_field.hpp"

using namespace avatar;

namespace {

const SkinnedTemplate& cylinder() {
    static SkinnedTemplate t = make_cylinder_template();
    return t;
}

const WeightField& cylinder_field() {
    static WeightField f = WeightField::build(cylinder(), 16, 40, 16, 30, 0.1);
    return f;
}

double weight_of(const WeightRow& row, int joint) {
    for (int i = 0; i < row.count; ++i)
        if (row.pairs[i].joint == joint) return row.pairs[i].weight;
    return 0.0;
}

}  // namespace

TEST_CASE("queries form a partition of unity everywhere") {
    const WeightField& f = cylinder_field();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int i = 0; i < 2000; ++i) {
        const WeightRow row = f.query(Vec3(u(rng), u(rng), u(rng)));
        REQUIRE(row.count > 0);
        CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("trilinear query reproduces voxel values at voxel centers") {
    const WeightField& f = cylinder_field();
    for (int iz = 2; iz < f.nz(); iz += 5)
        for (int iy = 3; iy < f.ny(); iy += 7)
            for (int ix = 2; ix < f.nx(); ix += 5) {
                const WeightRow stored = f.voxel(ix, iy, iz);
                const WeightRow q = f.query(f.voxel_center(ix, iy, iz));
                for (int i = 0; i < stored.count; ++i)
                    CHECK(weight_of(q, stored.pairs[i].joint) ==
                          doctest::Approx(stored.pairs[i].weight).epsilon(1e-9));
            }
}

TEST_CASE("midpoint query is the average of the two voxel rows") {
    const WeightField& f = cylinder_field();
    const int ix = f.nx() / 2, iz = f.nz() / 2;
    const int iy = f.ny() / 2;  // straddles the elbow ramp
    const Vec3 mid = 0.5 * (f.voxel_center(ix, iy, iz) + f.voxel_center(ix, iy + 1, iz));
    const WeightRow q = f.query(mid);
    for (int joint = 0; joint < 2; ++joint) {
        const double expect = 0.5 * (weight_of(f.voxel(ix, iy, iz), joint) +
                                     weight_of(f.voxel(ix, iy + 1, iz), joint));
        CHECK(weight_of(q, joint) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("queries clamp to the boundary voxel far outside the box") {
    const WeightField& f = cylinder_field();
    const WeightRow below = f.query(Vec3(0, -50.0, 0));
    CHECK(weight_of(below, 0) == doctest::Approx(1.0));  // root end of the cylinder
    const WeightRow above = f.query(Vec3(0, 50.0, 0));
    CHECK(weight_of(above, 1) == doctest::Approx(1.0));
}

TEST_CASE("surface queries track the template vertex weights") {
    const WeightField& f = cylinder_field();
    const SkinnedTemplate& t = cylinder();
    double worst = 0;
    for (size_t i = 0; i < t.rest_vertices.size(); i += 7) {
        const WeightRow q = f.query(t.rest_vertices[i]);
        for (int joint = 0; joint < 2; ++joint)
            worst = std::max(worst,
                             std::abs(weight_of(q, joint) - weight_of(t.vertex_weights[i], joint)));
    }
    CHECK(worst < 0.15);  // trilinear + shell pinning keeps the surface close
}

TEST_CASE("diffusion spreads a hard weight step away from the surface") {
    // binary weights: hard jump at the elbow plane
    SkinnedTemplate t = make_cylinder_template();
    for (size_t i = 0; i < t.rest_vertices.size(); ++i) {
        WeightRow r;
        r.add(t.rest_vertices[i].y() < 0.5 ? 0 : 1, 1.0);
        t.vertex_weights[i] = r;
    }
    auto max_step_outside = [](const WeightField& f) {
        // largest jump of w_0 between successive samples on a vertical line
        // outside the surface (where voxels are free, not shell-pinned)
        const double x = 0.5 * (0.12 + f.box_max().x());
        double max_step = 0, prev = -1;
        for (int k = 0; k < 100; ++k) {
            const double y = f.box_min().y() + (f.box_max().y() - f.box_min().y()) * k / 99.0;
            const WeightRow q = f.query(Vec3(x, y, 0));
            double w0 = 0;
            for (int i = 0; i < q.count; ++i)
                if (q.pairs[i].joint == 0) w0 = q.pairs[i].weight;
            if (prev >= 0) max_step = std::max(max_step, std::abs(w0 - prev));
            prev = w0;
        }
        return max_step;
    };
    const WeightField rough = WeightField::build(t, 12, 24, 12, 0, 0.3);
    const WeightField smooth = WeightField::build(t, 12, 24, 12, 40, 0.3);
    CHECK(max_step_outside(smooth) < 0.5 * max_step_outside(rough));
}

TEST_CASE("a single-joint field is perfectly smooth") {
    SkinnedTemplate t = make_cylinder_template();
    for (auto& w : t.vertex_weights) {
        WeightRow r;
        r.add(0, 1.0);
        w = r;
    }
    const WeightField f = WeightField::build(t, 8, 16, 8, 10, 0.1);
    CHECK(f.mean_neighbor_l1() == 0.0);
}

TEST_CASE("binary round trip compares equal") {
    const WeightField& f = cylinder_field();
    const std::string path = "/tmp/avatar_test_field.wfld";
    f.save(path);
    const WeightField g = WeightField::load(path);
    CHECK(f == g);
    std::filesystem::remove(path);
}

TEST_CASE("load reports the offending file") {
    CHECK_THROWS_WITH_AS(WeightField::load("/tmp/missing_field.wfld"),
                         doctest::Contains("/tmp/missing_field.wfld"), std::runtime_error);
}
