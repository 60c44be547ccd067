#pragma once

#include <string>

#include "avatar/skeleton.hpp"

namespace avatar {

// Dense voxel grid of skinning weights over the canonical-space bounding box
// of the template, dilated by a margin. Weights are seeded from the nearest
// template vertex and smoothed by Jacobi iterations outside a thin surface
// shell.
class WeightField {
public:
    WeightField() = default;

    static WeightField build(const SkinnedTemplate& tmpl, int nx, int ny, int nz,
                             int diffusion_iters, double margin = 0.10);

    // Trilinear interpolation of the 8 surrounding voxel rows, renormalized.
    // Points outside the box clamp to the boundary voxel.
    WeightRow query(const Vec3& p) const;

    const WeightRow& voxel(int ix, int iy, int iz) const {
        return voxels_[index(ix, iy, iz)];
    }
    Vec3 voxel_center(int ix, int iy, int iz) const;

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    Vec3 box_min() const { return box_min_; }
    Vec3 box_max() const { return box_max_; }

    // Mean L1 weight difference between adjacent voxels (smoothness measure).
    double mean_neighbor_l1() const;

    void save(const std::string& path) const;
    static WeightField load(const std::string& path);
    bool operator==(const WeightField& other) const;

private:
    size_t index(int ix, int iy, int iz) const {
        return (static_cast<size_t>(iz) * ny_ + iy) * nx_ + ix;
    }

    int nx_ = 0, ny_ = 0, nz_ = 0;
    Vec3 box_min_ = Vec3::Zero();
    Vec3 box_max_ = Vec3::Zero();
    std::vector<WeightRow> voxels_;
    std::vector<uint8_t> shell_;  // 1 = fixed surface shell voxel
};

}  // namespace avatar
