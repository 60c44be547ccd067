#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "avatar/dataset.hpp"
#include "avatar/image_io.hpp"
#include "avatar/rig.hpp"
#include "avatar/trainer.hpp"

using namespace avatar;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

// Small self-contained dataset: cylinder template, coarse field, one flat
// training view. Enough to construct and step a trainer.
Dataset tiny_dataset() {
    Dataset ds;
    ds.skinned_template = make_cylinder_template();
    ds.weight_field = WeightField::build(ds.skinned_template, 10, 24, 10, 8, 0.1);
    FrameSample sample;
    sample.view = 0;
    sample.frame = 0;
    sample.camera = look_at_camera(Vec3(0, 0.5, 2.0), Vec3(0, 0.5, 0), Vec3(0, 1, 0), 40, 32, 32);
    sample.pose = PoseParams::identity(2);
    sample.rgb = ColorImage(32, 32, Vec3(0.3, 0.5, 0.7));
    sample.mask = MaskImage(32, 32, 1);
    sample.normal_map = NormalImage(32, 32, Vec3(0, 0, -1));
    ds.train_samples.push_back(std::move(sample));
    ds.train_views = {0};
    ds.frame_count = 1;
    return ds;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.iterations = 20;
    cfg.seed = 11;
    cfg.sh_degree = 1;
    cfg.sh_warmup_interval = 0;
    cfg.densify.interval = 1000;  // never fires in this test
    return cfg;
}

}  // namespace

TEST_CASE("color png round trip stays within quantization") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    ColorImage img(13, 9);
    for (auto& p : img.data()) p = Vec3(u(rng), u(rng), u(rng));
    const std::string path = temp_path("avatar_test_rt.png");
    save_png(img, path);
    const ColorImage back = load_png(path);
    REQUIRE(back.width() == img.width());
    REQUIRE(back.height() == img.height());
    for (size_t i = 0; i < img.size(); ++i)
        CHECK((back.data()[i] - img.data()[i]).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
    fs::remove(path);
}

TEST_CASE("mask png round trip is exact") {
    MaskImage mask(8, 6, 0);
    mask.at(1, 2) = 1;
    mask.at(7, 5) = 1;
    const std::string path = temp_path("avatar_test_mask.png");
    save_png(mask, path);
    const MaskImage back = load_mask_png(path);
    for (size_t i = 0; i < mask.size(); ++i) CHECK(back.data()[i] == mask.data()[i]);
    fs::remove(path);
}

TEST_CASE("normal png round trip re-unitizes and keeps the sentinel") {
    NormalImage normals(6, 5, Vec3::Zero());
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x)
            if ((x + y) % 3 != 0) normals.at(x, y) = Vec3(u(rng), u(rng), u(rng)).normalized();
    const std::string path = temp_path("avatar_test_normals.png");
    save_normal_png(normals, path);
    const NormalImage back = load_normal_png(path);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) {
            if (normals.at(x, y).isZero()) {
                CHECK(back.at(x, y).isZero());
            } else {
                CHECK(back.at(x, y).norm() == doctest::Approx(1.0).epsilon(1e-9));
                CHECK((back.at(x, y) - normals.at(x, y)).norm() < 0.02);
            }
        }
    fs::remove(path);
}

TEST_CASE("float plane round trip is exact at f32 precision") {
    ScalarImage img(7, 4);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 10);
    for (auto& v : img.data()) v = static_cast<float>(u(rng));  // f32-representable
    const std::string path = temp_path("avatar_test_plane.fpln");
    save_float_plane(img, path);
    const ScalarImage back = load_float_plane(path);
    REQUIRE(back.width() == 7);
    REQUIRE(back.height() == 4);
    for (size_t i = 0; i < img.size(); ++i) CHECK(back.data()[i] == img.data()[i]);

    SUBCASE("saving twice produces identical bytes") {
        const std::string path2 = temp_path("avatar_test_plane2.fpln");
        save_float_plane(back, path2);
        CHECK(file_bytes(path) == file_bytes(path2));
        fs::remove(path2);
    }
    SUBCASE("bad magic is rejected with the path in the message") {
        const std::string bad = temp_path("avatar_test_bad.fpln");
        std::ofstream(bad, std::ios::binary) << "NOPE1234";
        CHECK_THROWS_WITH_AS(load_float_plane(bad), doctest::Contains(bad.c_str()),
                             std::runtime_error);
        fs::remove(bad);
    }
    fs::remove(path);
}

TEST_CASE("camera json round trip") {
    Camera cam = look_at_camera(Vec3(1.2, 0.4, -2.0), Vec3(0, 0.5, 0), Vec3(0, 1, 0), 87.5, 64, 48);
    cam.near_clip = 0.25;
    cam.far_clip = 12.5;
    const std::string path = temp_path("avatar_test_camera.json");
    save_camera_json(cam, path);
    const Camera back = load_camera_json(path);
    CHECK(back.fx == cam.fx);
    CHECK(back.fy == cam.fy);
    CHECK(back.cx == cam.cx);
    CHECK(back.cy == cam.cy);
    CHECK(back.width == cam.width);
    CHECK(back.height == cam.height);
    CHECK(back.near_clip == cam.near_clip);
    CHECK(back.far_clip == cam.far_clip);
    CHECK(back.world_to_camera == cam.world_to_camera);
    fs::remove(path);
}

TEST_CASE("pose json round trip") {
    PoseParams pose = PoseParams::identity(3);
    pose.joint_rotations[0] = Vec3(0.1, -0.2, 0.3);
    pose.joint_rotations[2] = Vec3(0, 0, 1.1);
    pose.root_translation = Vec3(0.4, 0, -0.25);
    const std::string path = temp_path("avatar_test_pose.json");
    save_pose_json(pose, path);
    const PoseParams back = load_pose_json(path);
    REQUIRE(back.joint_rotations.size() == pose.joint_rotations.size());
    for (size_t j = 0; j < pose.joint_rotations.size(); ++j)
        CHECK(back.joint_rotations[j] == pose.joint_rotations[j]);
    CHECK(back.root_translation == pose.root_translation);
    fs::remove(path);
}

TEST_CASE("fnv1a hashes are stable") {
    // standard 64-bit FNV-1a test vector
    CHECK(fnv1a("abc", 3) == 0xe71fa2190541574bull);
    const std::string path = temp_path("avatar_test_hash.bin");
    std::ofstream(path, std::ios::binary) << "abc";
    CHECK(fnv1a_file(path) == fnv1a("abc", 3));
    fs::remove(path);
}

TEST_CASE("train config json round trip keeps the hash") {
    TrainConfig cfg = tiny_config();
    cfg.loss.normal = 0.07;
    cfg.lr.sh = 1.25e-3;
    cfg.densify.grad_threshold = 8e-4;
    cfg.densify.eccentricity_definition = EccentricityDefinition::RatioModulus;
    cfg.field.resolution = 48;
    const std::string path = temp_path("avatar_test_config.json");
    save_train_config(cfg, path);
    const TrainConfig back = load_train_config(path);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(back.loss.normal == cfg.loss.normal);
    CHECK(back.lr.sh == cfg.lr.sh);
    CHECK(back.densify.grad_threshold == cfg.densify.grad_threshold);
    CHECK(back.densify.eccentricity_definition == cfg.densify.eccentricity_definition);
    CHECK(back.field.resolution == cfg.field.resolution);
    CHECK(back.seed == cfg.seed);

    TrainConfig changed = cfg;
    changed.densify.grad_threshold = 9e-4;
    CHECK(config_hash(changed) != config_hash(cfg));
    fs::remove(path);
}

TEST_CASE("checkpoint round trip is byte exact") {
    const TrainConfig cfg = tiny_config();
    Trainer trainer(tiny_dataset(), cfg);
    for (int i = 0; i < 3; ++i) trainer.step(trainer.dataset().train_samples[0]);

    const std::string p1 = temp_path("avatar_test_ckpt1.avck");
    const std::string p2 = temp_path("avatar_test_ckpt2.avck");
    trainer.save_checkpoint(p1);

    Trainer other(tiny_dataset(), cfg);
    other.load_checkpoint(p1);
    CHECK(other.iteration() == trainer.iteration());
    REQUIRE(other.surfels().size() == trainer.surfels().size());
    other.save_checkpoint(p2);
    CHECK(file_bytes(p1) == file_bytes(p2));

    SUBCASE("a different configuration refuses the checkpoint") {
        TrainConfig wrong = cfg;
        wrong.lr.opacity *= 2;
        Trainer mismatched(tiny_dataset(), wrong);
        CHECK_THROWS_WITH_AS(mismatched.load_checkpoint(p1),
                             doctest::Contains("different configuration"), std::runtime_error);
    }
    SUBCASE("garbage magic is rejected") {
        const std::string bad = temp_path("avatar_test_ckpt_bad.avck");
        std::ofstream(bad, std::ios::binary) << "XXXXYYYYZZZZ";
        Trainer t(tiny_dataset(), cfg);
        CHECK_THROWS_WITH_AS(t.load_checkpoint(bad), doctest::Contains(bad.c_str()),
                             std::runtime_error);
        fs::remove(bad);
    }
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("dataset loader names the missing piece") {
    const std::string missing = temp_path("avatar_missing_dataset_xyz");
    CHECK_THROWS_WITH_AS(load_dataset(missing), doctest::Contains(missing.c_str()),
                         std::runtime_error);
    const std::string empty = temp_path("avatar_empty_dataset_xyz");
    fs::create_directories(empty);
    CHECK_THROWS_WITH_AS(load_dataset(empty), doctest::Contains("template.skel"),
                         std::runtime_error);
    fs::remove_all(empty);
}
