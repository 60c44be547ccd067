#include "avatar/rig.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "avatar/dataset.hpp"
#include "avatar/image_io.hpp"
#include "avatar/lbs.hpp"
#include "avatar/render.hpp"

namespace fs = std::filesystem;

namespace avatar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kElbowRamp = 0.3;  // world height of the weight transition

// Low-frequency surface texture, smooth in both coordinates.
Vec3 rig_texture(double theta, double y) {
    return Vec3(0.5 + 0.3 * std::sin(theta), 0.5 + 0.3 * std::cos(theta + 2.0 * y),
                0.45 + 0.3 * std::sin(2.0 * y));
}

std::string index_name(const char* prefix, int i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
    return buf;
}

}  // namespace

double rig_elbow_weight(double y, const RigConfig& config) {
    const double elbow = 0.5 * config.height;
    const double t =
        std::min(1.0, std::max(0.0, (y - (elbow - 0.5 * kElbowRamp)) / kElbowRamp));
    return t * t * (3.0 - 2.0 * t);  // smoothstep
}

SkinnedTemplate make_cylinder_template(const RigConfig& config) {
    SkinnedTemplate tmpl;
    const int seg = config.mesh_segments;
    const int stacks = config.mesh_stacks;

    for (int row = 0; row <= stacks; ++row) {
        const double y = config.height * row / stacks;
        for (int s = 0; s < seg; ++s) {
            const double theta = 2.0 * kPi * s / seg;
            tmpl.rest_vertices.emplace_back(config.radius * std::cos(theta), y,
                                            config.radius * std::sin(theta));
        }
    }
    const int32_t bottom_center = static_cast<int32_t>(tmpl.rest_vertices.size());
    tmpl.rest_vertices.emplace_back(0, 0, 0);
    const int32_t top_center = static_cast<int32_t>(tmpl.rest_vertices.size());
    tmpl.rest_vertices.emplace_back(0, config.height, 0);

    auto ring = [&](int row, int s) { return static_cast<int32_t>(row * seg + (s % seg)); };
    for (int row = 0; row < stacks; ++row)
        for (int s = 0; s < seg; ++s) {
            const int32_t a = ring(row, s), b = ring(row, s + 1);
            const int32_t c = ring(row + 1, s), d = ring(row + 1, s + 1);
            tmpl.faces.push_back({a, c, b});
            tmpl.faces.push_back({b, c, d});
        }
    for (int s = 0; s < seg; ++s) {
        tmpl.faces.push_back({bottom_center, ring(0, s), ring(0, s + 1)});
        tmpl.faces.push_back({top_center, ring(stacks, s + 1), ring(stacks, s)});
    }

    tmpl.joint_parents = {-1, 0};
    Mat4 rest0 = Mat4::Identity();
    Mat4 rest1 = Mat4::Identity();
    rest1(1, 3) = 0.5 * config.height;
    tmpl.rest_joint_transforms = {rest0, rest1};

    tmpl.vertex_weights.resize(tmpl.rest_vertices.size());
    for (size_t i = 0; i < tmpl.rest_vertices.size(); ++i) {
        const double w1 = rig_elbow_weight(tmpl.rest_vertices[i].y(), config);
        WeightRow row;
        if (w1 < 1.0) row.add(0, 1.0 - w1);
        if (w1 > 0.0) row.add(1, w1);
        row.normalize();
        tmpl.vertex_weights[i] = row;
    }
    tmpl.validate();
    return tmpl;
}

std::vector<Surfel> make_ground_truth_surfels(const RigConfig& config) {
    std::vector<Surfel> gt;
    const int seg = config.surfel_segments;
    const int rows = config.surfel_rows;
    const double spacing_theta = 2.0 * kPi * config.radius / seg;
    const double spacing_y = config.height / rows;
    const Vec2 wall_scale(0.55 * spacing_theta, 0.55 * spacing_y);

    for (int row = 0; row < rows; ++row) {
        const double y = config.height * (row + 0.5) / rows;
        for (int s = 0; s < seg; ++s) {
            const double theta = 2.0 * kPi * (s + 0.5 * (row % 2)) / seg;
            const Vec3 radial(std::cos(theta), 0, std::sin(theta));
            const Vec3 along = Vec3::UnitY().cross(radial);  // right-handed frame
            Mat3 frame;
            frame.col(0) = along;
            frame.col(1) = Vec3::UnitY();
            frame.col(2) = radial;
            gt.push_back(make_surfel(Vec3(config.radius * radial.x(), y,
                                          config.radius * radial.z()),
                                     frame, wall_scale, 0.98, 0, rig_texture(theta, y)));
        }
    }

    // concentric cap rings, normals along +-y
    const struct {
        double radius_frac;
        int count;
    } cap_rings[] = {{0.0, 1}, {0.33, 6}, {0.66, 12}, {0.92, 18}};
    for (int cap = 0; cap < 2; ++cap) {
        const double y = cap == 0 ? 0.0 : config.height;
        const double ny = cap == 0 ? -1.0 : 1.0;
        for (const auto& ring : cap_rings) {
            const double r = ring.radius_frac * config.radius;
            for (int s = 0; s < ring.count; ++s) {
                const double theta = 2.0 * kPi * s / ring.count;
                Mat3 frame;
                frame.col(0) = Vec3::UnitX();
                frame.col(1) = Vec3(0, 0, -ny);  // keeps the frame right-handed
                frame.col(2) = Vec3(0, ny, 0);
                const double cap_spacing = config.radius / 3.0;
                gt.push_back(make_surfel(
                    Vec3(r * std::cos(theta), y, r * std::sin(theta)), frame,
                    Vec2(0.5 * cap_spacing, 0.5 * cap_spacing), 0.98, 0,
                    rig_texture(theta, cap == 0 ? 0.0 : config.height)));
            }
        }
    }
    return gt;
}

std::vector<Surfel> pose_ground_truth(const std::vector<Surfel>& gt, const SkinnedTemplate& tmpl,
                                      const PoseParams& pose, const RigConfig& config) {
    const JointTransforms jt = pose_to_joint_transforms(tmpl, pose);
    std::vector<Surfel> posed;
    posed.reserve(gt.size());
    for (const Surfel& s : gt) {
        const double w1 = rig_elbow_weight(s.center.y(), config);
        WeightRow row;
        if (w1 < 1.0) row.add(0, 1.0 - w1);
        if (w1 > 0.0) row.add(1, w1);
        row.normalize();
        posed.push_back(skin_surfel(s, blend_transforms(row, jt)));
    }
    return posed;
}

PoseParams rig_pose(int frame, const RigConfig& config) {
    PoseParams pose = PoseParams::identity(2);
    const double t = config.frames > 1 ? static_cast<double>(frame) / (config.frames - 1) : 0.0;
    const double bend = config.max_bend_deg * kPi / 180.0 * t;
    pose.joint_rotations[0] = Vec3(0, 0.35 * std::sin(2.0 * kPi * t), 0);  // slow root yaw
    pose.joint_rotations[1] = Vec3(0, 0, bend);
    return pose;
}

Camera rig_camera(int view, const RigConfig& config) {
    const double az = 2.0 * kPi * view / config.views;
    const double eye_y = 0.5 * config.height + (view % 2 == 0 ? -0.1 : 0.35);
    const Vec3 eye(config.camera_radius * std::cos(az), eye_y,
                   config.camera_radius * std::sin(az));
    const Vec3 target(0, 0.45 * config.height, 0);
    Camera cam = look_at_camera(eye, target, Vec3::UnitY(), config.focal, config.image_size,
                                config.image_size);
    cam.near_clip = 0.1;
    cam.far_clip = 10.0;
    return cam;
}

void generate_rig_dataset(const std::string& out_dir, const RigConfig& config) {
    const fs::path root(out_dir);
    fs::create_directories(root / "cameras");
    fs::create_directories(root / "poses");
    fs::create_directories(root / "novel");

    const SkinnedTemplate tmpl = make_cylinder_template(config);
    save_template(tmpl, (root / "template.skel").string());

    const std::vector<Surfel> gt = make_ground_truth_surfels(config);

    RenderOptions ropts;
    ropts.sh_degree = 0;  // ground-truth surfels carry DC color only
    ropts.precision = Precision::F64;

    std::vector<Camera> cameras(config.views);
    for (int v = 0; v < config.views; ++v) {
        cameras[v] = rig_camera(v, config);
        save_camera_json(cameras[v],
                         (root / "cameras" / (index_name("view", v) + ".json")).string());
    }

    for (int f = 0; f < config.frames; ++f) {
        const PoseParams pose = rig_pose(f, config);
        save_pose_json(pose, (root / "poses" / (index_name("frame", f) + ".json")).string());
        const std::vector<Surfel> posed = pose_ground_truth(gt, tmpl, pose, config);
        for (int v = 0; v < config.views; ++v) {
            const RenderOutputs out = render_tiled(posed, cameras[v], ropts);
            MaskImage mask(out.alpha.width(), out.alpha.height());
            for (size_t i = 0; i < mask.data().size(); ++i)
                mask.data()[i] = out.alpha.data()[i] >= 0.5 ? 1 : 0;
            const std::string view_dir = index_name("view", v);
            const std::string frame_png = index_name("frame", f) + ".png";
            fs::create_directories(root / "frames" / view_dir);
            fs::create_directories(root / "masks" / view_dir);
            fs::create_directories(root / "normals" / view_dir);
            save_png(out.color, (root / "frames" / view_dir / frame_png).string());
            save_png(mask, (root / "masks" / view_dir / frame_png).string());
            save_normal_png(out.normal, (root / "normals" / view_dir / frame_png).string());
        }
    }

    // split: last view held out
    {
        std::vector<int> train, test;
        for (int v = 0; v + 1 < config.views; ++v) train.push_back(v);
        test.push_back(config.views - 1);
        nlohmann::json j;
        j["train_views"] = train;
        j["test_views"] = test;
        j["frame_count"] = config.frames;
        std::ofstream os((root / "split.json").string());
        os << j.dump(2) << '\n';
        if (!os) throw std::runtime_error("write failed: " + (root / "split.json").string());
    }

    // novel pose bundle: right-angle elbow bend, viewed side-on so the bent
    // arm stays in silhouette
    {
        PoseParams novel = PoseParams::identity(2);
        novel.joint_rotations[1] = Vec3(0, 0, config.novel_bend_deg * kPi / 180.0);
        save_pose_json(novel, (root / "novel" / "pose.json").string());
        const Camera& novel_cam = cameras[config.views / 4];
        save_camera_json(novel_cam, (root / "novel" / "camera.json").string());
        const RenderOutputs out =
            render_tiled(pose_ground_truth(gt, tmpl, novel, config), novel_cam, ropts);
        MaskImage mask(out.alpha.width(), out.alpha.height());
        for (size_t i = 0; i < mask.data().size(); ++i)
            mask.data()[i] = out.alpha.data()[i] >= 0.5 ? 1 : 0;
        save_png(mask, (root / "novel" / "mask.png").string());
        save_png(out.color, (root / "novel" / "rgb.png").string());
    }
}

}  // namespace avatar
