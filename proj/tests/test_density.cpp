#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "avatar/density.hpp"

using namespace avatar;

namespace {

Surfel sized_surfel(double su, double sv, double opacity = 0.8, const Vec3& center = Vec3::Zero()) {
    return make_surfel(center, Mat3::Identity(), Vec2(su, sv), opacity, 0, Vec3(0.5, 0.5, 0.5));
}

DensifyStats quiet_stats(size_t n) {
    DensifyStats s;
    s.resize(n);
    for (size_t i = 0; i < n; ++i) s.accumulate(i, 0.0);
    return s;
}

}  // namespace

TEST_CASE("eccentricity definitions") {
    const Surfel s = sized_surfel(0.06, 0.02);
    CHECK(eccentricity(s, EccentricityDefinition::AxisRatio) == doctest::Approx(3.0));
    CHECK(eccentricity(s, EccentricityDefinition::RatioModulus) ==
          doctest::Approx(std::sqrt(0.06 * 0.06 - 0.02 * 0.02) / 0.02));
    // symmetric in the two axes
    CHECK(eccentricity(sized_surfel(0.02, 0.06)) == doctest::Approx(3.0));
}

TEST_CASE("eccentricity filter prunes just above the threshold") {
    // ratios 9.1 and 8.9 against a threshold of 9
    std::vector<Surfel> surfels = {sized_surfel(0.0091, 0.001), sized_surfel(0.0089, 0.001)};
    DensifyConfig cfg;
    cfg.eccentricity_threshold = 9.0;
    const DensifyStats stats = quiet_stats(surfels.size());
    std::mt19937_64 rng(1);
    std::vector<int32_t> parents;
    const DensifyEvent ev =
        densify_and_prune(surfels, stats, {}, cfg, 100, 1.0, rng, &parents);
    CHECK(ev.prunes_eccentricity == 1);
    REQUIRE(surfels.size() == 1);
    CHECK(surfels[0].scale().x() == doctest::Approx(0.0089));
    CHECK(parents == std::vector<int32_t>{1});

    SUBCASE("disabling the filter keeps both") {
        std::vector<Surfel> again = {sized_surfel(0.0091, 0.001), sized_surfel(0.0089, 0.001)};
        cfg.eccentricity_filter = false;
        const DensifyEvent ev2 = densify_and_prune(again, stats, {}, cfg, 100, 1.0, rng);
        CHECK(ev2.prunes_eccentricity == 0);
        CHECK(again.size() == 2);
    }
}

TEST_CASE("quiet well-formed surfels are a fixed point") {
    std::vector<Surfel> surfels = {sized_surfel(0.01, 0.008), sized_surfel(0.006, 0.009),
                                   sized_surfel(0.012, 0.01)};
    const std::vector<Surfel> before = surfels;
    DensifyConfig cfg;
    const DensifyStats stats = quiet_stats(surfels.size());
    std::mt19937_64 rng(2);
    std::vector<int32_t> parents;
    const DensifyEvent ev = densify_and_prune(surfels, stats, {}, cfg, 200, 1.0, rng, &parents);
    CHECK(ev.clones == 0);
    CHECK(ev.splits == 0);
    CHECK(ev.prunes_opacity + ev.prunes_size + ev.prunes_eccentricity == 0);
    REQUIRE(surfels.size() == before.size());
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(surfels[i].center == before[i].center);
        CHECK(surfels[i].quat == before[i].quat);
        CHECK(surfels[i].log_scale == before[i].log_scale);
        CHECK(surfels[i].opacity_logit == before[i].opacity_logit);
        CHECK(parents[i] == static_cast<int32_t>(i));
    }
}

TEST_CASE("clone keeps the original and nudges the copy down the gradient") {
    const double extent = 2.0;
    DensifyConfig cfg;  // split threshold 0.01 * extent = 0.02
    std::vector<Surfel> surfels = {sized_surfel(0.01, 0.01)};  // below the split limit
    DensifyStats stats;
    stats.resize(1);
    stats.accumulate(0, 10 * cfg.grad_threshold);
    const Vec3 dir = Vec3(3, 0, 4);  // unnormalized on purpose
    std::mt19937_64 rng(3);
    std::vector<int32_t> parents;
    const DensifyEvent ev =
        densify_and_prune(surfels, stats, {dir}, cfg, 100, extent, rng, &parents);
    CHECK(ev.clones == 1);
    CHECK(ev.splits == 0);
    REQUIRE(surfels.size() == 2);
    CHECK(surfels[0].center == Vec3::Zero());
    const Vec3 expect = -0.01 * extent * dir.normalized();
    CHECK((surfels[1].center - expect).norm() < 1e-15);
    CHECK(surfels[1].log_scale == surfels[0].log_scale);
    CHECK(parents == std::vector<int32_t>({0, -1}));
}

TEST_CASE("split shrinks both children and samples inside the footprint") {
    const double extent = 1.0;
    DensifyConfig cfg;  // split limit 0.01, max size 0.1
    std::vector<Surfel> surfels = {sized_surfel(0.05, 0.03)};  // above the split limit
    DensifyStats stats;
    stats.resize(1);
    stats.accumulate(0, 10 * cfg.grad_threshold);
    std::mt19937_64 rng(4);
    std::vector<int32_t> parents;
    const Vec2 parent_log = surfels[0].log_scale;
    const DensifyEvent ev = densify_and_prune(surfels, stats, {Vec3::Zero()}, cfg, 100, extent,
                                              rng, &parents);
    CHECK(ev.splits == 1);
    CHECK(ev.clones == 0);
    REQUIRE(surfels.size() == 2);
    for (int c = 0; c < 2; ++c) {
        // scales divide by the shrink factor
        CHECK(surfels[c].scale().x() == doctest::Approx(0.05 / 1.6).epsilon(1e-12));
        CHECK(surfels[c].scale().y() == doctest::Approx(0.03 / 1.6).epsilon(1e-12));
        CHECK((surfels[c].log_scale - (parent_log.array() - std::log(1.6)).matrix()).norm() <
              1e-12);
        CHECK(parents[c] == -1);
        // children land within a few sigma of the parent footprint
        CHECK(surfels[c].center.norm() < 5 * 0.05);
        CHECK(surfels[c].center.z() == 0.0);  // in-plane offsets only
    }
    CHECK((surfels[0].center - surfels[1].center).norm() > 0.0);
}

TEST_CASE("pruning by opacity and by world size") {
    const double extent = 1.0;
    DensifyConfig cfg;  // opacity < 0.005 pruned, max scale > 0.1 pruned
    std::vector<Surfel> surfels = {
        sized_surfel(0.01, 0.01, 0.004),              // transparent, goes away
        sized_surfel(0.2, 0.15, 0.9),                 // oversized, goes away
        sized_surfel(0.01, 0.01, 0.9, Vec3(1, 0, 0))  // survivor
    };
    const DensifyStats stats = quiet_stats(surfels.size());
    std::mt19937_64 rng(5);
    std::vector<int32_t> parents;
    const DensifyEvent ev =
        densify_and_prune(surfels, stats, {}, cfg, 100, extent, rng, &parents);
    CHECK(ev.prunes_opacity == 1);
    CHECK(ev.prunes_size == 1);
    REQUIRE(surfels.size() == 1);
    CHECK(surfels[0].center == Vec3(1, 0, 0));
    CHECK(parents == std::vector<int32_t>{2});
    CHECK(ev.total_surfels == 1);
}

TEST_CASE("event counts reconcile with the population change") {
    std::mt19937_64 seeder(99);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Surfel> surfels;
    DensifyStats stats;
    DensifyConfig cfg;
    const double extent = 1.0;
    const int n = 60;
    stats.resize(n);
    for (int i = 0; i < n; ++i) {
        const double su = 0.002 + 0.05 * u(seeder);
        const double sv = 0.002 + 0.05 * u(seeder);
        const double op = u(seeder) < 0.15 ? 0.002 : 0.5;
        surfels.push_back(sized_surfel(su, sv, op, Vec3(u(seeder), u(seeder), u(seeder))));
        stats.accumulate(i, u(seeder) < 0.4 ? 1e-3 : 1e-5);
    }
    std::vector<Vec3> dirs(n, Vec3(1, 0, 0));
    std::mt19937_64 rng(6);
    std::vector<int32_t> parents;
    const size_t before = surfels.size();
    const DensifyEvent ev = densify_and_prune(surfels, stats, dirs, cfg, 500, extent, rng,
                                              &parents);
    const size_t pruned = ev.prunes_opacity + ev.prunes_size + ev.prunes_eccentricity;
    // each clone adds one, each split replaces one with two (net +1)
    CHECK(surfels.size() == before - pruned + ev.clones + ev.splits);
    CHECK(ev.total_surfels == surfels.size());
    CHECK(parents.size() == surfels.size());
    // every surviving original maps back to a valid source index
    for (int32_t p : parents) CHECK(p < static_cast<int32_t>(before));
    int kept = 0;
    for (int32_t p : parents)
        if (p >= 0) ++kept;
    CHECK(kept == static_cast<int>(before - pruned - ev.splits));
}

TEST_CASE("emptying the set throws") {
    std::vector<Surfel> surfels = {sized_surfel(0.01, 0.01, 0.001)};  // pruned away
    const DensifyStats stats = quiet_stats(1);
    std::mt19937_64 rng(7);
    DensifyConfig cfg;
    CHECK_THROWS_AS(densify_and_prune(surfels, stats, {}, cfg, 100, 1.0, rng),
                    std::runtime_error);
}

TEST_CASE("an infinite eccentricity threshold changes nothing") {
    std::mt19937_64 seeder(123);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Surfel> a, b;
    DensifyStats stats;
    const int n = 40;
    stats.resize(n);
    for (int i = 0; i < n; ++i) {
        a.push_back(sized_surfel(0.001 + 0.05 * u(seeder), 0.001 + 0.05 * u(seeder), 0.6,
                                 Vec3(u(seeder), u(seeder), u(seeder))));
        stats.accumulate(i, u(seeder) * 5e-4);
    }
    b = a;
    DensifyConfig base;
    base.eccentricity_filter = false;
    DensifyConfig inf = base;
    inf.eccentricity_filter = true;
    inf.eccentricity_threshold = std::numeric_limits<double>::infinity();
    std::vector<Vec3> dirs(n, Vec3(0, 1, 0));
    std::mt19937_64 rng_a(8), rng_b(8);
    densify_and_prune(a, stats, dirs, base, 100, 1.0, rng_a);
    densify_and_prune(b, stats, dirs, inf, 100, 1.0, rng_b);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].center == b[i].center);
        CHECK(a[i].log_scale == b[i].log_scale);
        CHECK(a[i].opacity_logit == b[i].opacity_logit);
    }
}
