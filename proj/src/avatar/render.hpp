#pragma once

#include <optional>
#include <vector>

#include "avatar/camera.hpp"
#include "avatar/image.hpp"
#include "avatar/surfel.hpp"

namespace avatar {

enum class Precision { F32, F64 };

struct RenderOptions {
    int sh_degree = 3;
    int tile_size = 16;
    Precision precision = Precision::F64;
    bool keep_blend = false;       // record per-pixel blend lists for backward
    double t_min = 1e-4;           // transmittance early-out
    double cutoff = 3.0;           // gaussian truncation in sigma units
};

// One contribution along a pixel's ray, in blend order.
struct BlendEntry {
    int32_t surfel = -1;
    double gauss = 0;          // G_i
    double alpha = 0;          // alpha_i (post-sigmoid)
    double transmittance = 0;  // T_i before this entry
    double depth = 0;          // camera-space z of the intersection
    double u = 0, v = 0;       // local splat coordinates
};

struct BlendRecord {
    std::vector<BlendEntry> entries;
    int32_t selected = -1;  // entry index backing the depth map (last T > 0.5)
};

struct RenderOutputs {
    ColorImage color;
    ScalarImage depth;   // 0-sentinel background / low-alpha pixels
    ScalarImage alpha;
    NormalImage normal;  // from the depth map, zero-sentinel
    std::vector<BlendRecord> blend;  // row-major, only when keep_blend
    bool has_blend = false;

    const BlendRecord& blend_at(int x, int y, int width) const {
        return blend[static_cast<size_t>(y) * width + x];
    }
};

// Per-surfel projection state shared by both backends and the backward pass.
struct ProjectedSurfel {
    Mat3 cam_from_uv;     // camera point = C * (u, v, 1)
    Mat3 screen_from_uv;  // homogeneous screen point = K * C * (u, v, 1)
    double alpha = 0;
    double center_depth = 0;
    Vec3 view_dir;        // unit, camera position -> posed center
    double view_dist = 0;
    ShColor color;
};

ProjectedSurfel project_surfel(const Surfel& posed, const Camera& camera, int sh_degree);

struct SplatHit {
    double u, v, z, gauss;
};

// Exact ray-splat intersection for pixel (x, y); nullopt on miss (grazing
// plane, outside the near/far range, or beyond the sigma cutoff).
std::optional<SplatHit> ray_splat_intersect(const ProjectedSurfel& ps, const Camera& camera,
                                            int x, int y, const RenderOptions& opts = {});

// Reference backend: per pixel, intersects every surfel and sorts hits by
// intersection depth.
RenderOutputs render_bruteforce(const std::vector<Surfel>& surfels, const Camera& camera,
                                const RenderOptions& opts = {});

// Fast backend: screen-space binning into tiles, per-tile sort keyed on the
// splat-center camera depth, exact intersection per pixel.
RenderOutputs render_tiled(const std::vector<Surfel>& surfels, const Camera& camera,
                           const RenderOptions& opts = {});

// Eq.-style depth-to-normal: back-project the pixel and its right/down
// neighbors, normals point toward the camera (-z for a fronto-parallel
// plane). Zero-sentinel where any of the three depths is background.
NormalImage normals_from_depth(const ScalarImage& depth, const Camera& camera);

// Conservative 3-sigma screen bounding box (min radius 0.5 px). Returns
// false when the splat should be binned everywhere (ellipse crosses the
// camera plane).
bool splat_screen_bbox(const ProjectedSurfel& ps, double cutoff, double& x_min, double& x_max,
                       double& y_min, double& y_max);

}  // namespace avatar
