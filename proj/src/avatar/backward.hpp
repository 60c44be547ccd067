#pragma once

#include "avatar/camera.hpp"
#include "avatar/lbs.hpp"
#include "avatar/losses.hpp"
#include "avatar/render.hpp"

namespace avatar {

struct SurfelGrad {
    Vec3 center = Vec3::Zero();
    Vec4 quat = Vec4::Zero();
    Vec2 log_scale = Vec2::Zero();
    double opacity_logit = 0;
    std::vector<Vec3> sh_coeffs;
    // Heuristic view-space positional gradient magnitude in NDC units,
    // image-path only. Feeds the densification statistics.
    double screen_grad = 0;

    bool finite() const;
};

struct ParamGradients {
    std::vector<SurfelGrad> surfels;
    bool finite() const;
};

struct BackwardOptions {
    int sh_degree = 3;
    // Route normal-loss gradients into the selected blend depth
    // (straight-through over the T>0.5 selection).
    bool depth_backward = true;
};

// Reverse-mode gradients of the weighted total loss w.r.t. every canonical
// surfel parameter. The render outputs must carry blend records; skinning
// weights are treated as constants for the step.
ParamGradients backward(const std::vector<Surfel>& canonical, const SkinningContext& skin,
                        const Camera& camera, const RenderOutputs& out,
                        const ColorImage& target_rgb, const MaskImage& target_mask,
                        const NormalImage& target_normals, const LossWeights& weights,
                        const PerceptualProvider* perceptual = nullptr,
                        const BackwardOptions& opts = {});

// Adjoint of normals_from_depth: pulls a gradient on the unit normal map
// back to the depth map.
ScalarImage normals_from_depth_backward(const ScalarImage& depth, const Camera& camera,
                                        const NormalImage& d_normals);

}  // namespace avatar
