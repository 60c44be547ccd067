#include "avatar/weight_field.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace avatar {

namespace {

// Minimal kd-tree over points for exact nearest-vertex lookup.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& points) : points_(points) {
        order_.resize(points.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()), 0);
    }

    int nearest(const Vec3& q) const {
        int best = -1;
        double best_d2 = std::numeric_limits<double>::max();
        search(root_, q, 0, best, best_d2);
        return best;
    }

private:
    struct Node {
        int point = -1;
        int left = -1, right = -1;
    };

    int build(int lo, int hi, int axis) {
        if (lo >= hi) return -1;
        const int mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
        Node n;
        n.point = order_[mid];
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(n);
        const int next = (axis + 1) % 3;
        nodes_[id].left = build(lo, mid, next);
        nodes_[id].right = build(mid + 1, hi, next);
        return id;
    }

    void search(int node, const Vec3& q, int axis, int& best, double& best_d2) const {
        if (node < 0) return;
        const Node& n = nodes_[node];
        const Vec3& p = points_[n.point];
        const double d2 = (p - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = n.point;
        }
        const double delta = q[axis] - p[axis];
        const int next = (axis + 1) % 3;
        search(delta < 0 ? n.left : n.right, q, next, best, best_d2);
        if (delta * delta < best_d2) search(delta < 0 ? n.right : n.left, q, next, best, best_d2);
    }

    const std::vector<Vec3>& points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

WeightRow top8_from_dense(const std::vector<double>& dense) {
    WeightRow row;
    for (size_t j = 0; j < dense.size(); ++j)
        if (dense[j] > 0) row.add(static_cast<int>(j), dense[j]);
    row.normalize();
    return row;
}

void scatter(const WeightRow& row, double factor, std::vector<double>& dense) {
    for (int i = 0; i < row.count; ++i) dense[row.pairs[i].joint] += factor * row.pairs[i].weight;
}

}  // namespace

Vec3 WeightField::voxel_center(int ix, int iy, int iz) const {
    const Vec3 ext = box_max_ - box_min_;
    return box_min_ + Vec3((ix + 0.5) / nx_ * ext.x(), (iy + 0.5) / ny_ * ext.y(),
                           (iz + 0.5) / nz_ * ext.z());
}

WeightField WeightField::build(const SkinnedTemplate& tmpl, int nx, int ny, int nz,
                               int diffusion_iters, double margin) {
    if (nx <= 0 || ny <= 0 || nz <= 0)
        throw std::invalid_argument("weight field: resolution must be positive");
    tmpl.validate();

    WeightField field;
    field.nx_ = nx;
    field.ny_ = ny;
    field.nz_ = nz;
    field.box_min_ = tmpl.bbox_min() - Vec3::Constant(margin);
    field.box_max_ = tmpl.bbox_max() + Vec3::Constant(margin);
    field.voxels_.resize(static_cast<size_t>(nx) * ny * nz);
    field.shell_.assign(field.voxels_.size(), 0);

    const KdTree tree(tmpl.rest_vertices);
    const Vec3 ext = field.box_max_ - field.box_min_;
    const double voxel_size =
        std::max({ext.x() / nx, ext.y() / ny, ext.z() / nz});
    const double shell_radius = 1.5 * voxel_size;

    // Seed every voxel from its nearest template vertex; voxels within the
    // shell radius of the surface are pinned during smoothing.
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const Vec3 c = field.voxel_center(ix, iy, iz);
                const int v = tree.nearest(c);
                const size_t idx = field.index(ix, iy, iz);
                field.voxels_[idx] = tmpl.vertex_weights[v];
                field.voxels_[idx].normalize();
                if ((tmpl.rest_vertices[v] - c).norm() <= shell_radius) field.shell_[idx] = 1;
            }

    const int k = tmpl.joint_count();
    std::vector<WeightRow> next(field.voxels_.size());
    std::vector<double> dense(k);
    for (int it = 0; it < diffusion_iters; ++it) {
        for (int iz = 0; iz < nz; ++iz)
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    const size_t idx = field.index(ix, iy, iz);
                    if (field.shell_[idx]) {
                        next[idx] = field.voxels_[idx];
                        continue;
                    }
                    std::fill(dense.begin(), dense.end(), 0.0);
                    int n = 0;
                    auto take = [&](int jx, int jy, int jz) {
                        if (jx < 0 || jx >= nx || jy < 0 || jy >= ny || jz < 0 || jz >= nz) return;
                        scatter(field.voxels_[field.index(jx, jy, jz)], 1.0, dense);
                        ++n;
                    };
                    take(ix - 1, iy, iz);
                    take(ix + 1, iy, iz);
                    take(ix, iy - 1, iz);
                    take(ix, iy + 1, iz);
                    take(ix, iy, iz - 1);
                    take(ix, iy, iz + 1);
                    if (n == 0) {
                        next[idx] = field.voxels_[idx];
                        continue;
                    }
                    next[idx] = top8_from_dense(dense);
                }
        field.voxels_.swap(next);
    }
    return field;
}

WeightRow WeightField::query(const Vec3& p) const {
    const Vec3 ext = box_max_ - box_min_;
    // continuous voxel coordinates, clamped so the 8-cell stencil is valid
    auto coord = [&](double v, double lo, double e, int n) {
        double c = (v - lo) / e * n - 0.5;
        return std::min(std::max(c, 0.0), static_cast<double>(n - 1));
    };
    const double fx = coord(p.x(), box_min_.x(), ext.x(), nx_);
    const double fy = coord(p.y(), box_min_.y(), ext.y(), ny_);
    const double fz = coord(p.z(), box_min_.z(), ext.z(), nz_);
    const int x0 = std::min(static_cast<int>(fx), nx_ - 1);
    const int y0 = std::min(static_cast<int>(fy), ny_ - 1);
    const int z0 = std::min(static_cast<int>(fz), nz_ - 1);
    const int x1 = std::min(x0 + 1, nx_ - 1);
    const int y1 = std::min(y0 + 1, ny_ - 1);
    const int z1 = std::min(z0 + 1, nz_ - 1);
    const double tx = fx - x0, ty = fy - y0, tz = fz - z0;

    int max_joint = 0;
    auto scan = [&](const WeightRow& r) {
        for (int i = 0; i < r.count; ++i) max_joint = std::max(max_joint, r.pairs[i].joint);
    };
    const int xs[2] = {x0, x1}, ys[2] = {y0, y1}, zs[2] = {z0, z1};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) scan(voxel(xs[a], ys[b], zs[c]));

    std::vector<double> dense(max_joint + 1, 0.0);
    const double wx[2] = {1 - tx, tx}, wy[2] = {1 - ty, ty}, wz[2] = {1 - tz, tz};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                const double w = wx[a] * wy[b] * wz[c];
                if (w > 0) scatter(voxel(xs[a], ys[b], zs[c]), w, dense);
            }
    return top8_from_dense(dense);
}

double WeightField::mean_neighbor_l1() const {
    int max_joint = 0;
    for (const auto& v : voxels_)
        for (int i = 0; i < v.count; ++i) max_joint = std::max(max_joint, v.pairs[i].joint);
    std::vector<double> a(max_joint + 1), b(max_joint + 1);
    auto densify = [&](const WeightRow& r, std::vector<double>& d) {
        std::fill(d.begin(), d.end(), 0.0);
        scatter(r, 1.0, d);
    };
    double total = 0;
    size_t pairs = 0;
    for (int iz = 0; iz < nz_; ++iz)
        for (int iy = 0; iy < ny_; ++iy)
            for (int ix = 0; ix < nx_; ++ix) {
                densify(voxel(ix, iy, iz), a);
                auto accum = [&](int jx, int jy, int jz) {
                    densify(voxel(jx, jy, jz), b);
                    double l1 = 0;
                    for (size_t j = 0; j < a.size(); ++j) l1 += std::abs(a[j] - b[j]);
                    total += l1;
                    ++pairs;
                };
                if (ix + 1 < nx_) accum(ix + 1, iy, iz);
                if (iy + 1 < ny_) accum(ix, iy + 1, iz);
                if (iz + 1 < nz_) accum(ix, iy, iz + 1);
            }
    return pairs ? total / pairs : 0.0;
}

namespace {
constexpr char kFieldMagic[8] = {'W', 'F', 'L', 'D', '0', '0', '0', '1'};
}

void WeightField::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kFieldMagic, 8);
    const int32_t dims[3] = {nx_, ny_, nz_};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    os.write(reinterpret_cast<const char*>(box_min_.data()), 3 * sizeof(double));
    os.write(reinterpret_cast<const char*>(box_max_.data()), 3 * sizeof(double));
    for (const auto& row : voxels_) {
        const int32_t count = row.count;
        os.write(reinterpret_cast<const char*>(&count), sizeof(count));
        for (int i = 0; i < row.count; ++i) {
            os.write(reinterpret_cast<const char*>(&row.pairs[i].joint), sizeof(int32_t));
            os.write(reinterpret_cast<const char*>(&row.pairs[i].weight), sizeof(double));
        }
    }
    os.write(reinterpret_cast<const char*>(shell_.data()), shell_.size());
    if (!os) throw std::runtime_error("write failed: " + path);
}

WeightField WeightField::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open weight field: " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kFieldMagic, 8) != 0)
        throw std::runtime_error("bad magic in weight field file: " + path);
    WeightField f;
    int32_t dims[3];
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    f.nx_ = dims[0];
    f.ny_ = dims[1];
    f.nz_ = dims[2];
    is.read(reinterpret_cast<char*>(f.box_min_.data()), 3 * sizeof(double));
    is.read(reinterpret_cast<char*>(f.box_max_.data()), 3 * sizeof(double));
    f.voxels_.resize(static_cast<size_t>(f.nx_) * f.ny_ * f.nz_);
    for (auto& row : f.voxels_) {
        int32_t count = 0;
        is.read(reinterpret_cast<char*>(&count), sizeof(count));
        if (count < 0 || count > kMaxWeightsPerRow)
            throw std::runtime_error("corrupt weight field file: " + path);
        row.count = count;
        for (int i = 0; i < count; ++i) {
            is.read(reinterpret_cast<char*>(&row.pairs[i].joint), sizeof(int32_t));
            is.read(reinterpret_cast<char*>(&row.pairs[i].weight), sizeof(double));
        }
    }
    f.shell_.resize(f.voxels_.size());
    is.read(reinterpret_cast<char*>(f.shell_.data()), f.shell_.size());
    if (!is) throw std::runtime_error("truncated weight field file: " + path);
    return f;
}

bool WeightField::operator==(const WeightField& other) const {
    if (nx_ != other.nx_ || ny_ != other.ny_ || nz_ != other.nz_) return false;
    if (box_min_ != other.box_min_ || box_max_ != other.box_max_) return false;
    if (shell_ != other.shell_) return false;
    if (voxels_.size() != other.voxels_.size()) return false;
    for (size_t i = 0; i < voxels_.size(); ++i) {
        if (voxels_[i].count != other.voxels_[i].count) return false;
        for (int j = 0; j < voxels_[i].count; ++j)
            if (voxels_[i].pairs[j].joint != other.voxels_[i].pairs[j].joint ||
                voxels_[i].pairs[j].weight != other.voxels_[i].pairs[j].weight)
                return false;
    }
    return true;
}

}  // namespace avatar
