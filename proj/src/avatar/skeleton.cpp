#include "avatar/skeleton.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace avatar {

void SkinnedTemplate::validate() const {
    if (rest_vertices.empty()) throw std::invalid_argument("template: no vertices");
    if (joint_parents.empty()) throw std::invalid_argument("template: no joints");
    if (rest_joint_transforms.size() != joint_parents.size())
        throw std::invalid_argument("template: joint transform count mismatch");
    if (vertex_weights.size() != rest_vertices.size())
        throw std::invalid_argument("template: weight row count mismatch");
    const int k = joint_count();
    for (size_t j = 0; j < joint_parents.size(); ++j) {
        if (joint_parents[j] >= static_cast<int32_t>(j))
            throw std::invalid_argument("template: joint parents must precede children");
        if (joint_parents[j] < -1 || joint_parents[j] >= k)
            throw std::invalid_argument("template: joint parent index out of range");
    }
    for (const auto& f : faces)
        for (int c : f)
            if (c < 0 || c >= vertex_count())
                throw std::invalid_argument("template: face index out of range");
    for (size_t v = 0; v < vertex_weights.size(); ++v) {
        const auto& row = vertex_weights[v];
        if (row.count == 0) throw std::invalid_argument("template: empty weight row");
        for (int i = 0; i < row.count; ++i) {
            if (row.pairs[i].weight < 0)
                throw std::invalid_argument("template: negative skinning weight");
            if (row.pairs[i].joint < 0 || row.pairs[i].joint >= k)
                throw std::invalid_argument("template: weight joint index out of range");
        }
        if (std::abs(row.sum() - 1.0) > 1e-6)
            throw std::invalid_argument("template: weight row does not sum to 1");
    }
}

Vec3 SkinnedTemplate::bbox_min() const {
    Vec3 m = Vec3::Constant(std::numeric_limits<double>::max());
    for (const auto& v : rest_vertices) m = m.cwiseMin(v);
    return m;
}

Vec3 SkinnedTemplate::bbox_max() const {
    Vec3 m = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& v : rest_vertices) m = m.cwiseMax(v);
    return m;
}

std::vector<Vec3> SkinnedTemplate::vertex_normals() const {
    std::vector<Vec3> normals(rest_vertices.size(), Vec3::Zero());
    for (const auto& f : faces) {
        const Vec3& a = rest_vertices[f[0]];
        const Vec3& b = rest_vertices[f[1]];
        const Vec3& c = rest_vertices[f[2]];
        const Vec3 n = (b - a).cross(c - a);  // area-weighted
        for (int i : f) normals[i] += n;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        n = len > 1e-12 ? Vec3(n / len) : Vec3::UnitZ();
    }
    return normals;
}

std::vector<double> SkinnedTemplate::mean_edge_lengths() const {
    std::vector<double> sum(rest_vertices.size(), 0.0);
    std::vector<int> cnt(rest_vertices.size(), 0);
    auto edge = [&](int a, int b) {
        const double d = (rest_vertices[a] - rest_vertices[b]).norm();
        sum[a] += d;
        sum[b] += d;
        cnt[a]++;
        cnt[b]++;
    };
    for (const auto& f : faces) {
        edge(f[0], f[1]);
        edge(f[1], f[2]);
        edge(f[2], f[0]);
    }
    std::vector<double> out(rest_vertices.size(), 0.01);
    for (size_t i = 0; i < out.size(); ++i)
        if (cnt[i] > 0) out[i] = sum[i] / cnt[i];
    return out;
}

JointTransforms pose_to_joint_transforms(const SkinnedTemplate& tmpl, const PoseParams& pose) {
    const int k = tmpl.joint_count();
    if (static_cast<int>(pose.joint_rotations.size()) != k)
        throw std::invalid_argument("pose: joint count mismatch with template");
    JointTransforms out;
    out.canonical_to_posed.resize(k);
    std::vector<Mat4> world(k);
    for (int j = 0; j < k; ++j) {
        // local joint transform in the parent's frame at rest
        const Mat4& rest = tmpl.rest_joint_transforms[j];
        const int parent = tmpl.joint_parents[j];
        const Mat4 rest_parent = parent < 0 ? Mat4::Identity() : tmpl.rest_joint_transforms[parent];
        const Mat4 local_rest = rest_parent.inverse() * rest;
        Mat4 local_rot = make_transform(axis_angle_to_rotation(pose.joint_rotations[j]), Vec3::Zero());
        const Mat4 local = local_rest * local_rot;
        world[j] = parent < 0 ? local : Mat4(world[parent] * local);
        if (parent < 0) {
            Mat4 root_t = make_transform(Mat3::Identity(), pose.root_translation);
            world[j] = root_t * world[j];
        }
        out.canonical_to_posed[j] = world[j] * rest.inverse();
    }
    return out;
}

namespace {

constexpr char kSkelMagic[8] = {'S', 'K', 'E', 'L', '0', '0', '0', '1'};

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_mat4(std::ofstream& os, const Mat4& m) {
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) write_raw(os, m(r, c));
}

Mat4 read_mat4(std::ifstream& is) {
    Mat4 m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) read_raw(is, m(r, c));
    return m;
}

}  // namespace

void save_template(const SkinnedTemplate& tmpl, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kSkelMagic, 8);
    write_raw(os, static_cast<uint64_t>(tmpl.rest_vertices.size()));
    write_raw(os, static_cast<uint64_t>(tmpl.faces.size()));
    write_raw(os, static_cast<uint64_t>(tmpl.joint_parents.size()));
    for (const auto& v : tmpl.rest_vertices)
        for (int i = 0; i < 3; ++i) write_raw(os, v[i]);
    for (const auto& f : tmpl.faces)
        for (int32_t i : f) write_raw(os, i);
    for (int32_t p : tmpl.joint_parents) write_raw(os, p);
    for (const auto& m : tmpl.rest_joint_transforms) write_mat4(os, m);
    for (const auto& row : tmpl.vertex_weights) {
        write_raw(os, static_cast<int32_t>(row.count));
        for (int i = 0; i < row.count; ++i) {
            write_raw(os, row.pairs[i].joint);
            write_raw(os, row.pairs[i].weight);
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

SkinnedTemplate load_template(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open template: " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kSkelMagic, 8) != 0)
        throw std::runtime_error("bad magic in template file: " + path);
    uint64_t nv = 0, nf = 0, nj = 0;
    read_raw(is, nv);
    read_raw(is, nf);
    read_raw(is, nj);
    SkinnedTemplate tmpl;
    tmpl.rest_vertices.resize(nv);
    for (auto& v : tmpl.rest_vertices)
        for (int i = 0; i < 3; ++i) read_raw(is, v[i]);
    tmpl.faces.resize(nf);
    for (auto& f : tmpl.faces)
        for (auto& i : f) read_raw(is, i);
    tmpl.joint_parents.resize(nj);
    for (auto& p : tmpl.joint_parents) read_raw(is, p);
    tmpl.rest_joint_transforms.resize(nj);
    for (auto& m : tmpl.rest_joint_transforms) m = read_mat4(is);
    tmpl.vertex_weights.resize(nv);
    for (auto& row : tmpl.vertex_weights) {
        int32_t count = 0;
        read_raw(is, count);
        if (count < 0 || count > kMaxWeightsPerRow)
            throw std::runtime_error("corrupt weight row in template file: " + path);
        row.count = count;
        for (int i = 0; i < count; ++i) {
            read_raw(is, row.pairs[i].joint);
            read_raw(is, row.pairs[i].weight);
        }
    }
    if (!is) throw std::runtime_error("truncated template file: " + path);
    tmpl.validate();
    return tmpl;
}

}  // namespace avatar
