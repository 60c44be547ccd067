#pragma once

#include <string>
#include <vector>

#include "avatar/camera.hpp"
#include "avatar/skeleton.hpp"
#include "avatar/surfel.hpp"

namespace avatar {

struct RigConfig {
    double radius = 0.12;
    double height = 1.0;
    int mesh_segments = 16;   // vertices per ring
    int mesh_stacks = 20;     // quads along the axis
    int surfel_segments = 26;
    int surfel_rows = 40;
    int views = 8;
    int frames = 30;
    int image_size = 64;
    double focal = 90.0;
    double camera_radius = 2.3;
    double max_bend_deg = 80.0;    // elbow sweep over the frame range
    double novel_bend_deg = 90.0;  // held-out pose
    uint64_t seed = 0;
};

// Two-bone cylinder: root joint at the base, elbow joint halfway up, skinning
// weights ramp smoothly across the elbow.
SkinnedTemplate make_cylinder_template(const RigConfig& config = {});

// Densely textured ground-truth surfels on the cylinder wall and end caps.
std::vector<Surfel> make_ground_truth_surfels(const RigConfig& config = {});

// Analytic elbow-ramp skinning weight at canonical height y.
double rig_elbow_weight(double y, const RigConfig& config = {});

// Skins the ground-truth surfels with the analytic ramp (no diffused field).
std::vector<Surfel> pose_ground_truth(const std::vector<Surfel>& gt, const SkinnedTemplate& tmpl,
                                      const PoseParams& pose, const RigConfig& config = {});

PoseParams rig_pose(int frame, const RigConfig& config = {});
Camera rig_camera(int view, const RigConfig& config = {});

// Writes the full dataset tree (template, cameras, poses, frames, masks,
// normal maps, split file and the novel-pose bundle) under `out_dir`.
void generate_rig_dataset(const std::string& out_dir, const RigConfig& config = {});

}  // namespace avatar
