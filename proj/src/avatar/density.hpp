#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "avatar/surfel.hpp"

namespace avatar {

// Running view-space gradient statistics between densification events.
struct DensifyStats {
    std::vector<double> grad_sum;   // accumulated screen-space gradient norms
    std::vector<int32_t> counts;    // contributions since the last event

    void resize(size_t n) {
        grad_sum.assign(n, 0.0);
        counts.assign(n, 0);
    }
    void accumulate(size_t i, double grad_norm) {
        grad_sum[i] += grad_norm;
        counts[i] += 1;
    }
    double mean(size_t i) const { return counts[i] > 0 ? grad_sum[i] / counts[i] : 0.0; }
};

enum class EccentricityDefinition {
    AxisRatio,      // max(s)/min(s)
    RatioModulus,   // sqrt(max^2 - min^2)/min
};

struct DensifyConfig {
    double grad_threshold = 2e-4;          // normalized device units
    double split_scale_threshold = 0.01;   // fraction of scene extent
    double opacity_prune_threshold = 0.005;
    double max_world_size = 0.1;           // fraction of scene extent
    double eccentricity_threshold = 9.0;
    bool eccentricity_filter = true;
    EccentricityDefinition eccentricity_definition = EccentricityDefinition::AxisRatio;
    int interval = 100;
    int stop_iteration = 15000;
    double split_scale_shrink = 1.6;
};

struct DensifyEvent {
    int iteration = 0;
    int clones = 0;
    int splits = 0;
    int prunes_opacity = 0;
    int prunes_size = 0;
    int prunes_eccentricity = 0;
    size_t total_surfels = 0;
};

double eccentricity(const Surfel& s,
                    EccentricityDefinition def = EccentricityDefinition::AxisRatio);

// Clone/split high-gradient surfels, prune low-opacity / oversized /
// over-elongated ones. `grad_dirs` supplies the canonical-space positional
// gradient used to nudge clones. Optimizer bookkeeping for the surviving,
// cloned and split surfels is reported through `parent_of`.
// Throws std::runtime_error if the set would become empty.
DensifyEvent densify_and_prune(std::vector<Surfel>& surfels, const DensifyStats& stats,
                               const std::vector<Vec3>& grad_dirs, const DensifyConfig& config,
                               int iteration, double scene_extent, std::mt19937_64& rng,
                               std::vector<int32_t>* parent_of = nullptr);

}  // namespace avatar
