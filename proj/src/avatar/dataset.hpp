#pragma once

#include <string>
#include <vector>

#include "avatar/camera.hpp"
#include "avatar/image.hpp"
#include "avatar/skeleton.hpp"
#include "avatar/weight_field.hpp"

namespace avatar {

// One training observation.
struct FrameSample {
    int view = 0;
    int frame = 0;
    ColorImage rgb;
    MaskImage mask;
    NormalImage normal_map;  // camera-space, zero-sentinel background
    Camera camera;
    PoseParams pose;
};

struct WeightFieldParams {
    int resolution = 64;       // voxels along the longest axis
    int diffusion_iters = 50;
    double margin = 0.10;      // bounding-box dilation, meters
};

struct Dataset {
    SkinnedTemplate skinned_template;
    WeightField weight_field;
    std::vector<FrameSample> train_samples;
    std::vector<FrameSample> test_samples;
    std::vector<int> train_views, test_views;
    int frame_count = 0;
    std::string weight_field_cache_path;

    double scene_extent() const;  // bounding-sphere radius of the rest mesh
};

// Directory layout (see docs/formats.md): template.skel, split.json,
// cameras/view_###.json, poses/frame_###.json and per-view frame/mask/normal
// PNG trees. The weight field is built once and cached next to the dataset,
// keyed by the template bytes and the field parameters.
Dataset load_dataset(const std::string& path, const WeightFieldParams& params = {});

Camera load_camera_json(const std::string& path);
void save_camera_json(const Camera& cam, const std::string& path);
PoseParams load_pose_json(const std::string& path);
void save_pose_json(const PoseParams& pose, const std::string& path);

uint64_t fnv1a(const void* data, size_t len, uint64_t seed = 14695981039346656037ull);
uint64_t fnv1a_file(const std::string& path);

}  // namespace avatar
