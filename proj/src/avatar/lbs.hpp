#pragma once

#include "avatar/surfel.hpp"
#include "avatar/weight_field.hpp"

namespace avatar {

// Blended per-point LBS transform: p' = linear * p + translation.
struct BlendedTransform {
    Mat3 linear = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    Mat3 frame_rotation = Mat3::Identity();  // polar factor of `linear`
    bool degenerate = false;                 // |det(linear)| below tolerance

    Vec3 apply(const Vec3& p) const { return linear * p + translation; }
};

BlendedTransform blend_transforms(const WeightRow& weights, const JointTransforms& transforms);

inline Vec3 skin_point(const Vec3& p, const WeightRow& weights, const JointTransforms& transforms) {
    return blend_transforms(weights, transforms).apply(p);
}

// Center is skinned by the blended affine map; the tangent frame is rotated
// by the polar factor; scales, opacity, SH stay untouched. A degenerate
// blended map keeps the canonical frame and flags the surfel.
Surfel skin_surfel(const Surfel& s, const BlendedTransform& bt);

inline Surfel skin_surfel(const Surfel& s, const WeightField& field,
                          const JointTransforms& transforms) {
    return skin_surfel(s, blend_transforms(field.query(s.center), transforms));
}

// Per-surfel transforms for one frame; weights are re-queried from the
// current canonical centers and then held fixed for the step.
struct SkinningContext {
    std::vector<BlendedTransform> per_surfel;

    static SkinningContext build(const std::vector<Surfel>& surfels, const WeightField& field,
                                 const JointTransforms& transforms);
    static SkinningContext identity(size_t count);

    std::vector<Surfel> apply(const std::vector<Surfel>& canonical) const;
};

}  // namespace avatar
