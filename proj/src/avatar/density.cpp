#include "avatar/density.hpp"

#include <cmath>
#include <stdexcept>

namespace avatar {

double eccentricity(const Surfel& s, EccentricityDefinition def) {
    const Vec2 sc = s.scale();
    const double hi = std::max(sc.x(), sc.y());
    const double lo = std::min(sc.x(), sc.y());
    switch (def) {
        case EccentricityDefinition::RatioModulus:
            return std::sqrt(std::max(0.0, hi * hi - lo * lo)) / lo;
        case EccentricityDefinition::AxisRatio:
        default:
            return hi / lo;
    }
}

DensifyEvent densify_and_prune(std::vector<Surfel>& surfels, const DensifyStats& stats,
                               const std::vector<Vec3>& grad_dirs, const DensifyConfig& config,
                               int iteration, double scene_extent, std::mt19937_64& rng,
                               std::vector<int32_t>* parent_of) {
    DensifyEvent ev;
    ev.iteration = iteration;
    std::vector<Surfel> next;
    next.reserve(surfels.size() + surfels.size() / 4);
    std::vector<int32_t> parents;
    parents.reserve(next.capacity());
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double split_limit = config.split_scale_threshold * scene_extent;
    const double size_limit = config.max_world_size * scene_extent;
    const double shrink = std::log(config.split_scale_shrink);

    for (size_t i = 0; i < surfels.size(); ++i) {
        const Surfel& s = surfels[i];
        const double max_scale = s.scale().maxCoeff();
        if (s.opacity() < config.opacity_prune_threshold) {
            ev.prunes_opacity++;
            continue;
        }
        if (max_scale > size_limit) {
            ev.prunes_size++;
            continue;
        }
        if (config.eccentricity_filter &&
            eccentricity(s, config.eccentricity_definition) > config.eccentricity_threshold) {
            ev.prunes_eccentricity++;
            continue;
        }
        const double mean_grad = i < stats.grad_sum.size() ? stats.mean(i) : 0.0;
        if (mean_grad > config.grad_threshold) {
            if (max_scale < split_limit) {
                // clone: keep the original, nudge the copy down the gradient
                next.push_back(s);
                parents.push_back(static_cast<int32_t>(i));
                Surfel copy = s;
                if (i < grad_dirs.size() && grad_dirs[i].norm() > 1e-18)
                    copy.center -= 0.01 * scene_extent * grad_dirs[i].normalized();
                next.push_back(std::move(copy));
                parents.push_back(-1);
                ev.clones++;
            } else {
                // split into two shrunk children sampled from the footprint
                const Mat3 rot = s.rotation();
                const Vec2 sc = s.scale();
                for (int child = 0; child < 2; ++child) {
                    Surfel c = s;
                    const double u = gauss(rng);
                    const double v = gauss(rng);
                    c.center = s.center + sc.x() * rot.col(0) * u + sc.y() * rot.col(1) * v;
                    c.log_scale.array() -= shrink;
                    next.push_back(std::move(c));
                    parents.push_back(-1);
                }
                ev.splits++;
            }
        } else {
            next.push_back(s);
            parents.push_back(static_cast<int32_t>(i));
        }
    }

    if (next.empty()) throw std::runtime_error("densify_and_prune: surfel set became empty");
    surfels = std::move(next);
    if (parent_of) *parent_of = std::move(parents);
    ev.total_surfels = surfels.size();
    return ev;
}

}  // namespace avatar
