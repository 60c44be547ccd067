#include "avatar/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "avatar/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace avatar {

namespace {

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::string view_name(int view) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d", view);
    return buf;
}

std::string frame_name(int frame) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03d", frame);
    return buf;
}

}  // namespace

double Dataset::scene_extent() const {
    const Vec3 lo = skinned_template.bbox_min();
    const Vec3 hi = skinned_template.bbox_max();
    const Vec3 center = 0.5 * (lo + hi);
    double r2 = 0;
    for (const Vec3& v : skinned_template.rest_vertices)
        r2 = std::max(r2, (v - center).squaredNorm());
    return std::sqrt(r2);
}

Camera load_camera_json(const std::string& path) {
    const json j = load_json_file(path);
    Camera cam;
    try {
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        cam.near_clip = j.value("near", 0.01);
        cam.far_clip = j.value("far", 100.0);
        const auto m = j.at("world_to_camera").get<std::vector<double>>();
        if (m.size() != 16)
            throw std::runtime_error("world_to_camera must hold 16 row-major values");
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) cam.world_to_camera(r, c) = m[r * 4 + c];
    } catch (const json::exception& e) {
        throw std::runtime_error("bad camera file " + path + ": " + e.what());
    }
    try {
        cam.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("bad camera file " + path + ": " + e.what());
    }
    return cam;
}

void save_camera_json(const Camera& cam, const std::string& path) {
    json j;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["near"] = cam.near_clip;
    j["far"] = cam.far_clip;
    std::vector<double> m(16);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m[r * 4 + c] = cam.world_to_camera(r, c);
    j["world_to_camera"] = m;
    write_json_file(j, path);
}

PoseParams load_pose_json(const std::string& path) {
    const json j = load_json_file(path);
    PoseParams pose;
    try {
        for (const auto& rot : j.at("joint_rotations")) {
            const auto v = rot.get<std::vector<double>>();
            if (v.size() != 3) throw std::runtime_error("joint rotation must have 3 components");
            pose.joint_rotations.emplace_back(v[0], v[1], v[2]);
        }
        const auto t = j.at("root_translation").get<std::vector<double>>();
        if (t.size() != 3) throw std::runtime_error("root_translation must have 3 components");
        pose.root_translation = Vec3(t[0], t[1], t[2]);
    } catch (const json::exception& e) {
        throw std::runtime_error("bad pose file " + path + ": " + e.what());
    }
    return pose;
}

void save_pose_json(const PoseParams& pose, const std::string& path) {
    json j;
    json rots = json::array();
    for (const Vec3& r : pose.joint_rotations) rots.push_back({r.x(), r.y(), r.z()});
    j["joint_rotations"] = std::move(rots);
    j["root_translation"] = {pose.root_translation.x(), pose.root_translation.y(),
                             pose.root_translation.z()};
    write_json_file(j, path);
}

uint64_t fnv1a(const void* data, size_t len, uint64_t seed) {
    uint64_t h = seed;
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
        h = fnv1a(buf, static_cast<size_t>(is.gcount()), h);
    return h;
}

Dataset load_dataset(const std::string& path, const WeightFieldParams& params) {
    const fs::path root(path);
    if (!fs::is_directory(root))
        throw std::runtime_error("dataset directory not found: " + path);

    Dataset ds;
    const std::string template_path = (root / "template.skel").string();
    ds.skinned_template = load_template(template_path);

    // split file
    const std::string split_path = (root / "split.json").string();
    const json split = load_json_file(split_path);
    try {
        ds.train_views = split.at("train_views").get<std::vector<int>>();
        ds.test_views = split.at("test_views").get<std::vector<int>>();
        ds.frame_count = split.at("frame_count").get<int>();
    } catch (const json::exception& e) {
        throw std::runtime_error("bad split file " + split_path + ": " + e.what());
    }
    if (ds.train_views.empty())
        throw std::runtime_error("bad split file " + split_path + ": no training views");
    if (ds.frame_count <= 0)
        throw std::runtime_error("bad split file " + split_path + ": frame_count must be positive");

    // weight field, cached by template content + field parameters
    uint64_t key = fnv1a_file(template_path);
    key = fnv1a(&params.resolution, sizeof(params.resolution), key);
    key = fnv1a(&params.diffusion_iters, sizeof(params.diffusion_iters), key);
    key = fnv1a(&params.margin, sizeof(params.margin), key);
    char key_hex[32];
    std::snprintf(key_hex, sizeof(key_hex), "%016" PRIx64, key);
    const fs::path cache_dir = root / "cache";
    fs::create_directories(cache_dir);
    const fs::path cache_path = cache_dir / ("weight_field_" + std::string(key_hex) + ".wfld");
    ds.weight_field_cache_path = cache_path.string();
    if (fs::exists(cache_path)) {
        ds.weight_field = WeightField::load(cache_path.string());
    } else {
        // keep the voxel size near-isotropic: scale the per-axis counts by the
        // dilated bounding-box proportions
        const Vec3 lo = ds.skinned_template.bbox_min() - Vec3::Constant(params.margin);
        const Vec3 hi = ds.skinned_template.bbox_max() + Vec3::Constant(params.margin);
        const Vec3 size = hi - lo;
        const double longest = size.maxCoeff();
        auto axis_res = [&](double s) {
            return std::max(2, static_cast<int>(std::lround(params.resolution * s / longest)));
        };
        ds.weight_field =
            WeightField::build(ds.skinned_template, axis_res(size.x()), axis_res(size.y()),
                               axis_res(size.z()), params.diffusion_iters, params.margin);
        ds.weight_field.save(cache_path.string());
    }

    auto load_samples = [&](const std::vector<int>& views, std::vector<FrameSample>& out) {
        for (int view : views) {
            const Camera cam =
                load_camera_json((root / "cameras" / (view_name(view) + ".json")).string());
            for (int frame = 0; frame < ds.frame_count; ++frame) {
                FrameSample s;
                s.view = view;
                s.frame = frame;
                s.camera = cam;
                const std::string fname = frame_name(frame);
                s.pose = load_pose_json((root / "poses" / (fname + ".json")).string());
                if (static_cast<int>(s.pose.joint_rotations.size()) !=
                    ds.skinned_template.joint_count())
                    throw std::runtime_error("pose file poses/" + fname +
                                             ".json: joint count mismatch with template");
                s.rgb = load_png((root / "frames" / view_name(view) / (fname + ".png")).string());
                s.mask =
                    load_mask_png((root / "masks" / view_name(view) / (fname + ".png")).string());
                s.normal_map = load_normal_png(
                    (root / "normals" / view_name(view) / (fname + ".png")).string());
                if (s.rgb.width() != cam.width || s.rgb.height() != cam.height)
                    throw std::runtime_error("frame " + view_name(view) + "/" + fname +
                                             ".png: size does not match camera");
                if (s.mask.width() != s.rgb.width() || s.mask.height() != s.rgb.height() ||
                    s.normal_map.width() != s.rgb.width() ||
                    s.normal_map.height() != s.rgb.height())
                    throw std::runtime_error("frame " + view_name(view) + "/" + fname +
                                             ": mask/normal size does not match the frame");
                out.push_back(std::move(s));
            }
        }
    };
    load_samples(ds.train_views, ds.train_samples);
    load_samples(ds.test_views, ds.test_samples);
    return ds;
}

}  // namespace avatar
