#include "avatar/render.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace avatar {

namespace {

void parallel_rows(int rows, const std::function<void(int, int)>& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (hw == 1 || rows < 16) {
        fn(0, rows);
        return;
    }
    const int bands = static_cast<int>(std::min<unsigned>(hw, 8));
    std::vector<std::thread> pool;
    for (int b = 0; b < bands; ++b) {
        const int lo = rows * b / bands;
        const int hi = rows * (b + 1) / bands;
        pool.emplace_back(fn, lo, hi);
    }
    for (auto& t : pool) t.join();
}

template <typename S>
struct ProjT {
    Eigen::Matrix<S, 3, 3> screen;  // K * C
    Eigen::Matrix<S, 3, 3> cam;     // C
    S alpha;
    Eigen::Matrix<S, 3, 1> rgb;
};

template <typename S>
ProjT<S> cast_projected(const ProjectedSurfel& ps) {
    ProjT<S> p;
    p.screen = ps.screen_from_uv.template cast<S>();
    p.cam = ps.cam_from_uv.template cast<S>();
    p.alpha = static_cast<S>(ps.alpha);
    p.rgb = ps.color.rgb.template cast<S>();
    return p;
}

template <typename S>
bool intersect_kernel(const ProjT<S>& p, S px, S py, S near_clip, S far_clip, S cutoff2,
                      S& u, S& v, S& z, S& g) {
    const Eigen::Matrix<S, 3, 1> g1 =
        p.screen.row(0).transpose() - px * p.screen.row(2).transpose();
    const Eigen::Matrix<S, 3, 1> g2 =
        p.screen.row(1).transpose() - py * p.screen.row(2).transpose();
    const Eigen::Matrix<S, 3, 1> n = g1.cross(g2);
    u = n.x() / n.z();
    v = n.y() / n.z();
    const S r2 = u * u + v * v;
    if (!(r2 <= cutoff2)) return false;  // also rejects NaN from a grazing plane
    z = p.cam(2, 0) * u + p.cam(2, 1) * v + p.cam(2, 2);
    if (z < near_clip || z > far_clip) return false;
    g = std::exp(S(-0.5) * r2);
    return true;
}

struct RawHit {
    int surfel;
    double u, v, z, gauss;
};

// Front-to-back alpha blending over hits already in blend order.
template <typename S>
void blend_pixel(const std::vector<RawHit>& hits, const std::vector<ProjT<S>>& proj,
                 const RenderOptions& opts, Vec3& color_out, double& alpha_out,
                 double& depth_out, BlendRecord* rec) {
    S transmittance = 1;
    Eigen::Matrix<S, 3, 1> color = Eigen::Matrix<S, 3, 1>::Zero();
    S alpha_acc = 0;
    double depth_sel = 0;
    int sel = -1;
    int emitted = 0;
    for (const RawHit& h : hits) {
        const ProjT<S>& p = proj[h.surfel];
        // cap the per-sample opacity so 1 - a stays invertible in backward
        const S a = std::min(S(0.999), p.alpha * static_cast<S>(h.gauss));
        const S w = a * transmittance;
        color += w * p.rgb;
        alpha_acc += w;
        if (static_cast<double>(transmittance) > 0.5) {
            depth_sel = h.z;
            sel = emitted;
        }
        if (rec) {
            BlendEntry e;
            e.surfel = h.surfel;
            e.gauss = h.gauss;
            e.alpha = static_cast<double>(p.alpha);
            e.transmittance = static_cast<double>(transmittance);
            e.depth = h.z;
            e.u = h.u;
            e.v = h.v;
            rec->entries.push_back(e);
        }
        ++emitted;
        transmittance *= (S(1) - a);
        if (static_cast<double>(transmittance) < opts.t_min) break;
    }
    color_out = color.template cast<double>();
    alpha_out = static_cast<double>(alpha_acc);
    // Depth is reported only where the pixel is at least half covered.
    depth_out = (alpha_out >= 0.5) ? depth_sel : 0.0;
    if (rec) rec->selected = sel;
}

template <typename S>
RenderOutputs render_bruteforce_impl(const std::vector<Surfel>& surfels, const Camera& camera,
                                     const RenderOptions& opts,
                                     const std::vector<ProjectedSurfel>& projected) {
    const int w = camera.width, h = camera.height;
    const int n = static_cast<int>(surfels.size());
    RenderOutputs out;
    out.color = ColorImage(w, h, Vec3::Zero());
    out.depth = ScalarImage(w, h, 0.0);
    out.alpha = ScalarImage(w, h, 0.0);
    out.has_blend = opts.keep_blend;
    if (opts.keep_blend) out.blend.resize(static_cast<size_t>(w) * h);

    std::vector<ProjT<S>> proj(n);
    for (int i = 0; i < n; ++i) proj[i] = cast_projected<S>(projected[i]);

    const S cutoff2 = static_cast<S>(opts.cutoff * opts.cutoff);
    const S near_clip = static_cast<S>(camera.near_clip);
    const S far_clip = static_cast<S>(camera.far_clip);

    parallel_rows(h, [&](int y_lo, int y_hi) {
        std::vector<RawHit> hits;
        for (int y = y_lo; y < y_hi; ++y)
            for (int x = 0; x < w; ++x) {
                hits.clear();
                const S px = static_cast<S>(x + 0.5), py = static_cast<S>(y + 0.5);
                for (int i = 0; i < n; ++i) {
                    S u, v, z, g;
                    if (intersect_kernel(proj[i], px, py, near_clip, far_clip, cutoff2, u, v, z, g))
                        hits.push_back({i, static_cast<double>(u), static_cast<double>(v),
                                        static_cast<double>(z), static_cast<double>(g)});
                }
                std::sort(hits.begin(), hits.end(), [](const RawHit& a, const RawHit& b) {
                    return a.z != b.z ? a.z < b.z : a.surfel < b.surfel;
                });
                BlendRecord* rec =
                    opts.keep_blend ? &out.blend[static_cast<size_t>(y) * w + x] : nullptr;
                blend_pixel(hits, proj, opts, out.color.at(x, y), out.alpha.at(x, y),
                            out.depth.at(x, y), rec);
            }
    });
    out.normal = normals_from_depth(out.depth, camera);
    return out;
}

template <typename S>
RenderOutputs render_tiled_impl(const std::vector<Surfel>& surfels, const Camera& camera,
                                const RenderOptions& opts,
                                const std::vector<ProjectedSurfel>& projected) {
    const int w = camera.width, h = camera.height;
    const int n = static_cast<int>(surfels.size());
    const int ts = std::max(8, opts.tile_size);
    const int tiles_x = (w + ts - 1) / ts;
    const int tiles_y = (h + ts - 1) / ts;

    RenderOutputs out;
    out.color = ColorImage(w, h, Vec3::Zero());
    out.depth = ScalarImage(w, h, 0.0);
    out.alpha = ScalarImage(w, h, 0.0);
    out.has_blend = opts.keep_blend;
    if (opts.keep_blend) out.blend.resize(static_cast<size_t>(w) * h);

    std::vector<ProjT<S>> proj(n);
    for (int i = 0; i < n; ++i) proj[i] = cast_projected<S>(projected[i]);

    // Bin surfels into tiles by their 3-sigma screen footprint.
    std::vector<std::vector<int>> bins(static_cast<size_t>(tiles_x) * tiles_y);
    for (int i = 0; i < n; ++i) {
        double x_min, x_max, y_min, y_max;
        if (!splat_screen_bbox(projected[i], opts.cutoff, x_min, x_max, y_min, y_max)) {
            x_min = y_min = 0;
            x_max = w;
            y_max = h;
        }
        // pixel centers sit at +0.5
        const int px0 = std::max(0, static_cast<int>(std::floor(x_min - 0.5)));
        const int px1 = std::min(w - 1, static_cast<int>(std::ceil(x_max - 0.5)));
        const int py0 = std::max(0, static_cast<int>(std::floor(y_min - 0.5)));
        const int py1 = std::min(h - 1, static_cast<int>(std::ceil(y_max - 0.5)));
        if (px0 > px1 || py0 > py1) continue;
        for (int tyy = py0 / ts; tyy <= py1 / ts; ++tyy)
            for (int txx = px0 / ts; txx <= px1 / ts; ++txx)
                bins[static_cast<size_t>(tyy) * tiles_x + txx].push_back(i);
    }
    // Per-tile depth sort keyed on the splat-center camera depth.
    for (auto& bin : bins)
        std::sort(bin.begin(), bin.end(), [&](int a, int b) {
            return projected[a].center_depth != projected[b].center_depth
                       ? projected[a].center_depth < projected[b].center_depth
                       : a < b;
        });

    const S cutoff2 = static_cast<S>(opts.cutoff * opts.cutoff);
    const S near_clip = static_cast<S>(camera.near_clip);
    const S far_clip = static_cast<S>(camera.far_clip);

    parallel_rows(tiles_y, [&](int ty_lo, int ty_hi) {
        std::vector<RawHit> hits;
        for (int tyy = ty_lo; tyy < ty_hi; ++tyy)
            for (int txx = 0; txx < tiles_x; ++txx) {
                const auto& bin = bins[static_cast<size_t>(tyy) * tiles_x + txx];
                if (bin.empty()) continue;
                const int x_end = std::min(w, (txx + 1) * ts);
                const int y_end = std::min(h, (tyy + 1) * ts);
                for (int y = tyy * ts; y < y_end; ++y)
                    for (int x = txx * ts; x < x_end; ++x) {
                        hits.clear();
                        const S px = static_cast<S>(x + 0.5), py = static_cast<S>(y + 0.5);
                        for (int i : bin) {
                            S u, v, z, g;
                            if (intersect_kernel(proj[i], px, py, near_clip, far_clip, cutoff2,
                                                 u, v, z, g))
                                hits.push_back({i, static_cast<double>(u), static_cast<double>(v),
                                                static_cast<double>(z), static_cast<double>(g)});
                        }
                        BlendRecord* rec =
                            opts.keep_blend ? &out.blend[static_cast<size_t>(y) * w + x] : nullptr;
                        blend_pixel(hits, proj, opts, out.color.at(x, y), out.alpha.at(x, y),
                                    out.depth.at(x, y), rec);
                    }
            }
    });
    out.normal = normals_from_depth(out.depth, camera);
    return out;
}

}  // namespace

ProjectedSurfel project_surfel(const Surfel& posed, const Camera& camera, int sh_degree) {
    ProjectedSurfel ps;
    const Mat3 rot = posed.rotation();
    const Vec2 s = posed.scale();
    const Mat3 rc = camera.rotation();
    ps.cam_from_uv.col(0) = rc * (s.x() * rot.col(0));
    ps.cam_from_uv.col(1) = rc * (s.y() * rot.col(1));
    ps.cam_from_uv.col(2) = camera.to_camera(posed.center);
    ps.screen_from_uv = camera.intrinsic_matrix() * ps.cam_from_uv;
    ps.alpha = posed.opacity();
    ps.center_depth = ps.cam_from_uv(2, 2);
    const Vec3 to_center = posed.center - camera.position();
    ps.view_dist = to_center.norm();
    ps.view_dir = ps.view_dist > 1e-12 ? Vec3(to_center / ps.view_dist) : Vec3::UnitZ();
    ps.color = sh_to_color(posed.sh_coeffs, sh_degree, ps.view_dir);
    return ps;
}

std::optional<SplatHit> ray_splat_intersect(const ProjectedSurfel& ps, const Camera& camera,
                                            int x, int y, const RenderOptions& opts) {
    ProjT<double> p = cast_projected<double>(ps);
    double u, v, z, g;
    if (!intersect_kernel<double>(p, x + 0.5, y + 0.5, camera.near_clip, camera.far_clip,
                                  opts.cutoff * opts.cutoff, u, v, z, g))
        return std::nullopt;
    return SplatHit{u, v, z, g};
}

bool splat_screen_bbox(const ProjectedSurfel& ps, double cutoff, double& x_min, double& x_max,
                       double& y_min, double& y_max) {
    // Scale the uv chart by the cutoff so the unit circle is the footprint
    // boundary, then bound the projected conic per axis.
    Mat3 a = ps.screen_from_uv;
    a.col(0) *= cutoff;
    a.col(1) *= cutoff;
    const Vec3 dsign(1, 1, -1);
    auto quad = [&](const Vec3& p, const Vec3& q) {
        return p.x() * q.x() * dsign.x() + p.y() * q.y() * dsign.y() + p.z() * q.z() * dsign.z();
    };
    const Vec3 r0 = a.row(0).transpose(), r1 = a.row(1).transpose(), r2 = a.row(2).transpose();
    // Bounded screen footprint <=> the plane a2.w = 0 misses the scaled uv
    // unit disc, i.e. the signed form over row 2 stays negative.
    const double d = quad(r2, r2);
    if (d >= -1e-12) return false;  // footprint crosses the camera plane
    const double cx = quad(r0, r2) / d;
    const double cy = quad(r1, r2) / d;
    const double hx = std::sqrt(std::max(0.0, cx * cx - quad(r0, r0) / d));
    const double hy = std::sqrt(std::max(0.0, cy * cy - quad(r1, r1) / d));
    // low-pass safeguard: never let the footprint shrink below half a pixel
    const double ex = std::max(hx, 0.5) + 1e-6;
    const double ey = std::max(hy, 0.5) + 1e-6;
    x_min = cx - ex;
    x_max = cx + ex;
    y_min = cy - ey;
    y_max = cy + ey;
    return true;
}

RenderOutputs render_bruteforce(const std::vector<Surfel>& surfels, const Camera& camera,
                                const RenderOptions& opts) {
    camera.validate();
    std::vector<ProjectedSurfel> projected(surfels.size());
    for (size_t i = 0; i < surfels.size(); ++i)
        projected[i] = project_surfel(surfels[i], camera, opts.sh_degree);
    return opts.precision == Precision::F64
               ? render_bruteforce_impl<double>(surfels, camera, opts, projected)
               : render_bruteforce_impl<float>(surfels, camera, opts, projected);
}

RenderOutputs render_tiled(const std::vector<Surfel>& surfels, const Camera& camera,
                           const RenderOptions& opts) {
    camera.validate();
    std::vector<ProjectedSurfel> projected(surfels.size());
    for (size_t i = 0; i < surfels.size(); ++i)
        projected[i] = project_surfel(surfels[i], camera, opts.sh_degree);
    return opts.precision == Precision::F64
               ? render_tiled_impl<double>(surfels, camera, opts, projected)
               : render_tiled_impl<float>(surfels, camera, opts, projected);
}

NormalImage normals_from_depth(const ScalarImage& depth, const Camera& camera) {
    const int w = depth.width(), h = depth.height();
    NormalImage normals(w, h, Vec3::Zero());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + 1 >= w || y + 1 >= h) continue;
            const double d = depth.at(x, y);
            const double dr = depth.at(x + 1, y);
            const double dd = depth.at(x, y + 1);
            if (d <= 0 || dr <= 0 || dd <= 0) continue;
            const Vec3 p = camera.backproject(x, y, d);
            const Vec3 px = camera.backproject(x + 1, y, dr);
            const Vec3 py = camera.backproject(x, y + 1, dd);
            const Vec3 c = (p - py).cross(p - px);
            const double len = c.norm();
            if (len > 1e-15) normals.at(x, y) = c / len;
        }
    return normals;
}

}  // namespace avatar
