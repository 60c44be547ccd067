#include "avatar/backward.hpp"

#include <cmath>
#include <thread>

namespace avatar {

namespace {

bool all_finite(const Vec3& v) { return v.allFinite(); }

struct Accum {
    Mat3 d_screen_geom = Mat3::Zero();  // gradient w.r.t. C (camera-from-uv)
    Vec3 d_rgb = Vec3::Zero();
    double d_alpha = 0;
};

}  // namespace

bool SurfelGrad::finite() const {
    if (!all_finite(center) || !quat.allFinite() || !log_scale.allFinite()) return false;
    if (!std::isfinite(opacity_logit) || !std::isfinite(screen_grad)) return false;
    for (const auto& c : sh_coeffs)
        if (!all_finite(c)) return false;
    return true;
}

bool ParamGradients::finite() const {
    for (const auto& s : surfels)
        if (!s.finite()) return false;
    return true;
}

ScalarImage normals_from_depth_backward(const ScalarImage& depth, const Camera& camera,
                                        const NormalImage& d_normals) {
    const int w = depth.width(), h = depth.height();
    ScalarImage d_depth(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + 1 >= w || y + 1 >= h) continue;
            const Vec3& dn = d_normals.at(x, y);
            if (dn.isZero()) continue;
            const double d = depth.at(x, y);
            const double dr = depth.at(x + 1, y);
            const double dd = depth.at(x, y + 1);
            if (d <= 0 || dr <= 0 || dd <= 0) continue;
            const Vec3 p = camera.backproject(x, y, d);
            const Vec3 px = camera.backproject(x + 1, y, dr);
            const Vec3 py = camera.backproject(x, y + 1, dd);
            const Vec3 e1 = p - py;
            const Vec3 e2 = p - px;
            const Vec3 c = e1.cross(e2);
            const double len = c.norm();
            if (len <= 1e-15) continue;
            const Vec3 n = c / len;
            const Vec3 dc = (dn - n * n.dot(dn)) / len;
            const Vec3 de1 = e2.cross(dc);
            const Vec3 de2 = dc.cross(e1);
            const Vec3 dp = de1 + de2;
            const Vec3 dpx = -de2;
            const Vec3 dpy = -de1;
            // p = depth * dir(pixel)
            d_depth.at(x, y) += camera.backproject(x, y, 1.0).dot(dp);
            d_depth.at(x + 1, y) += camera.backproject(x + 1, y, 1.0).dot(dpx);
            d_depth.at(x, y + 1) += camera.backproject(x, y + 1, 1.0).dot(dpy);
        }
    return d_depth;
}

ParamGradients backward(const std::vector<Surfel>& canonical, const SkinningContext& skin,
                        const Camera& camera, const RenderOutputs& out,
                        const ColorImage& target_rgb, const MaskImage& target_mask,
                        const NormalImage& target_normals, const LossWeights& weights,
                        const PerceptualProvider* perceptual, const BackwardOptions& opts) {
    if (!out.has_blend)
        throw std::logic_error("backward: render outputs carry no blend records");
    const int w = camera.width, h = camera.height;
    const int n = static_cast<int>(canonical.size());
    const int n_coeffs = sh_coeff_count(opts.sh_degree);

    // Recreate the forward projection state (posed geometry, colors).
    std::vector<Surfel> posed = skin.apply(canonical);
    std::vector<ProjectedSurfel> projected(n);
    for (int i = 0; i < n; ++i) projected[i] = project_surfel(posed[i], camera, opts.sh_degree);

    // Image-space loss gradients.
    const ColorImage d_color = photometric_grad(out.color, target_rgb, weights, perceptual);
    ScalarImage d_alpha_map(w, h, 0.0);
    if (weights.mask != 0) {
        d_alpha_map = mask_grad(out.alpha, target_mask);
        for (auto& v : d_alpha_map.data()) v *= weights.mask;
    }
    ScalarImage d_depth(w, h, 0.0);
    if (weights.normal != 0 && opts.depth_backward) {
        NormalImage d_normals = normal_grad(out.normal, target_normals, target_mask);
        for (auto& v : d_normals.data()) v *= weights.normal;
        d_depth = normals_from_depth_backward(out.depth, camera, d_normals);
    }

    // Per-pixel blend replay, banded with privatized accumulators reduced in
    // fixed band order (deterministic regardless of thread availability).
    constexpr int kBands = 8;
    const Mat3 k_t = camera.intrinsic_matrix().transpose();
    std::vector<std::vector<Accum>> band_accum(kBands, std::vector<Accum>(n));

    auto run_band = [&](int band) {
        auto& acc = band_accum[band];
        const int y_lo = h * band / kBands;
        const int y_hi = h * (band + 1) / kBands;
        for (int y = y_lo; y < y_hi; ++y)
            for (int x = 0; x < w; ++x) {
                const BlendRecord& rec = out.blend[static_cast<size_t>(y) * w + x];
                if (rec.entries.empty()) continue;
                const Vec3 d_c = d_color.at(x, y);
                const double d_m = d_alpha_map.at(x, y);
                const bool depth_gated = out.alpha.at(x, y) >= 0.5 && rec.selected >= 0;
                const double d_z_pixel = depth_gated ? d_depth.at(x, y) : 0.0;
                const double px = x + 0.5, py = y + 0.5;

                Vec3 suffix_color = Vec3::Zero();
                double suffix_alpha = 0;
                for (int e = static_cast<int>(rec.entries.size()) - 1; e >= 0; --e) {
                    const BlendEntry& be = rec.entries[e];
                    const ProjectedSurfel& ps = projected[be.surfel];
                    const double a_raw = be.alpha * be.gauss;
                    const bool a_clamped = a_raw > 0.999;  // matches the forward cap
                    const double a_i = a_clamped ? 0.999 : a_raw;
                    const double w_i = a_i * be.transmittance;
                    const Vec3& c_i = ps.color.rgb;

                    const double d_a = be.transmittance * (c_i.dot(d_c) + d_m) -
                                       (suffix_color.dot(d_c) + suffix_alpha * d_m) / (1.0 - a_i);
                    Accum& s = acc[be.surfel];
                    s.d_alpha += a_clamped ? 0.0 : be.gauss * d_a;
                    s.d_rgb += w_i * d_c;
                    const double d_gauss = a_clamped ? 0.0 : be.alpha * d_a;

                    double du = d_gauss * (-be.u * be.gauss);
                    double dv = d_gauss * (-be.v * be.gauss);
                    const double dz = (e == rec.selected) ? d_z_pixel : 0.0;
                    if (dz != 0.0) {
                        du += dz * ps.cam_from_uv(2, 0);
                        dv += dz * ps.cam_from_uv(2, 1);
                        s.d_screen_geom.row(2) += dz * Eigen::RowVector3d(be.u, be.v, 1.0);
                    }
                    if (du != 0.0 || dv != 0.0) {
                        // intersection backward: u = n.x/n.z, v = n.y/n.z,
                        // n = g1 x g2 with g1/g2 the pixel's screen planes
                        const Mat3& a_mat = ps.screen_from_uv;
                        const Vec3 g1 = a_mat.row(0).transpose() - px * a_mat.row(2).transpose();
                        const Vec3 g2 = a_mat.row(1).transpose() - py * a_mat.row(2).transpose();
                        const Vec3 nrm = g1.cross(g2);
                        const Vec3 d_n = Vec3(du, dv, -(be.u * du + be.v * dv)) / nrm.z();
                        const Vec3 d_g1 = g2.cross(d_n);
                        const Vec3 d_g2 = d_n.cross(g1);
                        Mat3 d_a_mat = Mat3::Zero();
                        d_a_mat.row(0) = d_g1.transpose();
                        d_a_mat.row(1) = d_g2.transpose();
                        d_a_mat.row(2) = -px * d_g1.transpose() - py * d_g2.transpose();
                        s.d_screen_geom += k_t * d_a_mat;
                    }
                    suffix_color += w_i * c_i;
                    suffix_alpha += w_i;
                }
            }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (hw == 1) {
        for (int b = 0; b < kBands; ++b) run_band(b);
    } else {
        std::vector<std::thread> pool;
        for (int b = 0; b < kBands; ++b) pool.emplace_back(run_band, b);
        for (auto& t : pool) t.join();
    }

    // Reduce bands in fixed order.
    std::vector<Accum> acc(n);
    for (int b = 0; b < kBands; ++b)
        for (int i = 0; i < n; ++i) {
            acc[i].d_screen_geom += band_accum[b][i].d_screen_geom;
            acc[i].d_rgb += band_accum[b][i].d_rgb;
            acc[i].d_alpha += band_accum[b][i].d_alpha;
        }

    // Per-surfel finalize: camera -> posed world -> canonical parameters.
    ParamGradients grads;
    grads.surfels.resize(n);
    const Mat3 rc_t = camera.rotation().transpose();
    const Vec3 cam_pos = camera.position();
    const double ndc_scale = 0.25 * (camera.width + camera.height) / (0.5 * (camera.fx + camera.fy));
    for (int i = 0; i < n; ++i) {
        SurfelGrad& g = grads.surfels[i];
        g.sh_coeffs.assign(n_coeffs, Vec3::Zero());
        const Accum& a = acc[i];
        const bool touched = !a.d_screen_geom.isZero() || !a.d_rgb.isZero() || a.d_alpha != 0;
        Vec3 d_center_posed = Vec3::Zero();
        if (touched) {
            const Vec3 d_au_posed = rc_t * a.d_screen_geom.col(0);
            const Vec3 d_av_posed = rc_t * a.d_screen_geom.col(1);
            d_center_posed = rc_t * a.d_screen_geom.col(2);

            // SH color: coefficients plus the view-direction path.
            const ProjectedSurfel& ps = projected[i];
            if (!a.d_rgb.isZero()) {
                Vec3 d_dir_unit;
                std::vector<Vec3> d_coeffs(n_coeffs, Vec3::Zero());
                sh_to_color_backward(posed[i].sh_coeffs, opts.sh_degree, ps.view_dir, ps.color,
                                     a.d_rgb, d_coeffs, d_dir_unit);
                for (int c = 0; c < n_coeffs; ++c) g.sh_coeffs[c] += d_coeffs[c];
                d_center_posed +=
                    (d_dir_unit - ps.view_dir * ps.view_dir.dot(d_dir_unit)) / ps.view_dist;
            }

            // posed axes a_u' = s_u * (R_polar r_u)
            const BlendedTransform& bt = skin.per_surfel[i];
            const Mat3 rot_can = canonical[i].rotation();
            const Vec2 sc = canonical[i].scale();
            const Vec3 ru_posed = bt.frame_rotation * rot_can.col(0);
            const Vec3 rv_posed = bt.frame_rotation * rot_can.col(1);
            const double ds_u = ru_posed.dot(d_au_posed);
            const double ds_v = rv_posed.dot(d_av_posed);
            g.log_scale += Vec2(sc.x() * ds_u, sc.y() * ds_v);
            Mat3 d_rot = Mat3::Zero();
            d_rot.col(0) = sc.x() * bt.frame_rotation.transpose() * d_au_posed;
            d_rot.col(1) = sc.y() * bt.frame_rotation.transpose() * d_av_posed;
            g.quat += quat_backward(canonical[i].quat, d_rot);

            g.center += bt.linear.transpose() * d_center_posed;
            const double alpha = canonical[i].opacity();
            g.opacity_logit += a.d_alpha * alpha * (1.0 - alpha);
            g.screen_grad = d_center_posed.norm() * ps.center_depth * ndc_scale;
        }
        (void)cam_pos;
    }

    // Global parameter-space terms.
    if (weights.self_supervised != 0 && weights.area != 0) {
        const double lam = weights.self_supervised * weights.area;
        const auto ag = area_grad(canonical);
        for (int i = 0; i < n; ++i) grads.surfels[i].log_scale += lam * ag[i];
    }
    if (weights.self_supervised != 0 && weights.opacity != 0) {
        const double lam = weights.self_supervised * weights.opacity;
        const auto og = opacity_grad(canonical);
        for (int i = 0; i < n; ++i) grads.surfels[i].opacity_logit += lam * og[i];
    }
    return grads;
}

}  // namespace avatar
