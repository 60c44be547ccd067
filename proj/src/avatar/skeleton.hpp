#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "avatar/math.hpp"

namespace avatar {

struct WeightPair {
    int32_t joint = 0;
    double weight = 0.0;
};

constexpr int kMaxWeightsPerRow = 8;

// Fixed-capacity normalized skinning weight row.
struct WeightRow {
    std::array<WeightPair, kMaxWeightsPerRow> pairs{};
    int count = 0;

    void add(int joint, double w) {
        if (count < kMaxWeightsPerRow) {
            pairs[count++] = {joint, w};
        } else {
            // replace the smallest entry if the new one is larger
            int smallest = 0;
            for (int i = 1; i < count; ++i)
                if (pairs[i].weight < pairs[smallest].weight) smallest = i;
            if (pairs[smallest].weight < w) pairs[smallest] = {joint, w};
        }
    }

    double sum() const {
        double s = 0;
        for (int i = 0; i < count; ++i) s += pairs[i].weight;
        return s;
    }

    void normalize() {
        const double s = sum();
        if (s > 0)
            for (int i = 0; i < count; ++i) pairs[i].weight /= s;
    }
};

struct SkinnedTemplate {
    std::vector<Vec3> rest_vertices;
    std::vector<std::array<int32_t, 3>> faces;
    std::vector<int32_t> joint_parents;       // root = -1
    std::vector<Mat4> rest_joint_transforms;  // joint-to-canonical at rest
    std::vector<WeightRow> vertex_weights;

    int joint_count() const { return static_cast<int>(joint_parents.size()); }
    int vertex_count() const { return static_cast<int>(rest_vertices.size()); }

    void validate() const;  // throws std::invalid_argument with a description
    Vec3 bbox_min() const;
    Vec3 bbox_max() const;

    // Area-weighted vertex normals from the face list.
    std::vector<Vec3> vertex_normals() const;
    // Mean incident edge length per vertex (surfel init scale source).
    std::vector<double> mean_edge_lengths() const;
};

struct PoseParams {
    std::vector<Vec3> joint_rotations;  // axis-angle per joint
    Vec3 root_translation = Vec3::Zero();

    static PoseParams identity(int joint_count) {
        PoseParams p;
        p.joint_rotations.assign(joint_count, Vec3::Zero());
        return p;
    }
};

struct JointTransforms {
    std::vector<Mat4> canonical_to_posed;  // G'_k per joint
};

// Forward kinematics along the parent chain; G'_k = world_k * rest_k^-1.
JointTransforms pose_to_joint_transforms(const SkinnedTemplate& tmpl, const PoseParams& pose);

// Binary .skel container (see docs/formats.md).
void save_template(const SkinnedTemplate& tmpl, const std::string& path);
SkinnedTemplate load_template(const std::string& path);

}  // namespace avatar
