#pragma once

#include <memory>

#include "avatar/image.hpp"
#include "avatar/metrics.hpp"
#include "avatar/surfel.hpp"

namespace avatar {

struct LossWeights {
    double dssim = 0.2;
    double lpips = 0.0;
    double normal = 0.05;
    double self_supervised = 1.0;  // lambda_s, gates area + opacity below
    double area = 0.01;
    double opacity = 0.01;
    double mask = 0.1;
};

struct LossBreakdown {
    // unweighted per-term values
    double l1 = 0;
    double dssim = 0;
    double lpips = 0;
    double normal = 0;
    double area = 0;
    double opacity = 0;
    double mask = 0;
    double total = 0;
};

// Scalar perceptual distance plus its gradient w.r.t. the first image.
class PerceptualProvider {
public:
    virtual ~PerceptualProvider() = default;
    virtual double evaluate(const ColorImage& rendered, const ColorImage& target,
                            ColorImage* grad_rendered) const = 0;
};

// Built-in proxy: multi-scale L1 between smoothed image-gradient magnitudes.
class GradientMagnitudeProvider : public PerceptualProvider {
public:
    explicit GradientMagnitudeProvider(int levels = 3) : levels_(levels) {}
    double evaluate(const ColorImage& rendered, const ColorImage& target,
                    ColorImage* grad_rendered) const override;

private:
    int levels_;
};

double photometric_loss(const ColorImage& rendered, const ColorImage& target,
                        const LossWeights& weights,
                        const PerceptualProvider* perceptual = nullptr,
                        LossBreakdown* breakdown = nullptr);

// d(photometric)/d(rendered), all sub-terms included at their weights.
ColorImage photometric_grad(const ColorImage& rendered, const ColorImage& target,
                            const LossWeights& weights,
                            const PerceptualProvider* perceptual = nullptr);

// Mean (1 - n_hat . n) over pixels that are mask-foreground and carry a
// valid (nonzero) normal on both sides.
double normal_loss(const NormalImage& rendered, const NormalImage& target, const MaskImage& mask);
// d(normal_loss)/d(rendered unit normal), zero at invalid pixels.
NormalImage normal_grad(const NormalImage& rendered, const NormalImage& target,
                        const MaskImage& mask);

// Population variance of s_u * s_v over all surfels.
double area_loss(const std::vector<Surfel>& surfels);
// d(area_loss)/d(log_scale) per surfel.
std::vector<Vec2> area_grad(const std::vector<Surfel>& surfels);

// Mean of exp(-(alpha - 0.5)^2 / 0.05).
double opacity_loss(const std::vector<Surfel>& surfels);
// d(opacity_loss)/d(opacity_logit) per surfel.
std::vector<double> opacity_grad(const std::vector<Surfel>& surfels);

// Mean binary cross-entropy between the alpha map (clamped to
// [1e-6, 1-1e-6]) and the binary mask.
double mask_loss(const ScalarImage& alpha_map, const MaskImage& mask);
ScalarImage mask_grad(const ScalarImage& alpha_map, const MaskImage& mask);

struct RenderOutputs;  // avatar/render.hpp

LossBreakdown total_loss(const ColorImage& rendered, const ScalarImage& alpha_map,
                         const NormalImage& rendered_normals, const ColorImage& target_rgb,
                         const MaskImage& target_mask, const NormalImage& target_normals,
                         const std::vector<Surfel>& surfels, const LossWeights& weights,
                         const PerceptualProvider* perceptual = nullptr);

}  // namespace avatar
