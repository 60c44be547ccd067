#include "avatar/lbs.hpp"

namespace avatar {

BlendedTransform blend_transforms(const WeightRow& weights, const JointTransforms& transforms) {
    BlendedTransform bt;
    bt.linear.setZero();
    bt.translation.setZero();
    for (int i = 0; i < weights.count; ++i) {
        const Mat4& g = transforms.canonical_to_posed[weights.pairs[i].joint];
        const double w = weights.pairs[i].weight;
        bt.linear += w * g.block<3, 3>(0, 0);
        bt.translation += w * g.block<3, 1>(0, 3);
    }
    bt.degenerate = !polar_rotation(bt.linear, bt.frame_rotation);
    if (bt.degenerate) bt.frame_rotation = Mat3::Identity();
    return bt;
}

Surfel skin_surfel(const Surfel& s, const BlendedTransform& bt) {
    Surfel out = s;
    out.center = bt.apply(s.center);
    const Mat3 frame = bt.frame_rotation * s.rotation();
    out.quat = quat_from_rotation(frame);
    out.frame_degenerate = bt.degenerate;
    return out;
}

SkinningContext SkinningContext::build(const std::vector<Surfel>& surfels,
                                       const WeightField& field,
                                       const JointTransforms& transforms) {
    SkinningContext ctx;
    ctx.per_surfel.reserve(surfels.size());
    for (const auto& s : surfels)
        ctx.per_surfel.push_back(blend_transforms(field.query(s.center), transforms));
    return ctx;
}

SkinningContext SkinningContext::identity(size_t count) {
    SkinningContext ctx;
    ctx.per_surfel.assign(count, BlendedTransform{});
    return ctx;
}

std::vector<Surfel> SkinningContext::apply(const std::vector<Surfel>& canonical) const {
    std::vector<Surfel> posed;
    posed.reserve(canonical.size());
    for (size_t i = 0; i < canonical.size(); ++i)
        posed.push_back(skin_surfel(canonical[i], per_surfel[i]));
    return posed;
}

}  // namespace avatar
