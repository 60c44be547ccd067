#include "avatar/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace avatar {

namespace {

constexpr double kBceEps = 1e-6;
constexpr double kGradMagEps = 1e-8;

struct GrayLevel {
    int w = 0, h = 0;
    std::vector<double> pix;
};

GrayLevel to_gray(const ColorImage& img) {
    GrayLevel g;
    g.w = img.width();
    g.h = img.height();
    g.pix.resize(img.size());
    for (size_t i = 0; i < img.size(); ++i) g.pix[i] = img.data()[i].mean();
    return g;
}

GrayLevel downsample2(const GrayLevel& in) {
    GrayLevel out;
    out.w = in.w / 2;
    out.h = in.h / 2;
    out.pix.assign(static_cast<size_t>(out.w) * out.h, 0.0);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double s = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) s += in.pix[(2 * y + dy) * in.w + (2 * x + dx)];
            out.pix[y * out.w + x] = s / 4.0;
        }
    return out;
}

void downsample2_adjoint(const GrayLevel& coarse_grad, GrayLevel& fine_grad) {
    const int cw = coarse_grad.w, ch = coarse_grad.h;
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x) {
            const double g = coarse_grad.pix[y * cw + x] / 4.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    fine_grad.pix[(2 * y + dy) * fine_grad.w + (2 * x + dx)] += g;
        }
}

// L1 between smoothed gradient magnitudes at one pyramid level; grad w.r.t.
// the first image's gray values accumulates into `grad`.
double level_loss(const GrayLevel& a, const GrayLevel& b, GrayLevel* grad) {
    const int w = a.w, h = a.h;
    if (w < 2 || h < 2) return 0.0;
    const size_t nvalid = static_cast<size_t>(w - 1) * (h - 1);
    double acc = 0;
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            const double gax = a.pix[y * w + x + 1] - a.pix[y * w + x];
            const double gay = a.pix[(y + 1) * w + x] - a.pix[y * w + x];
            const double gbx = b.pix[y * w + x + 1] - b.pix[y * w + x];
            const double gby = b.pix[(y + 1) * w + x] - b.pix[y * w + x];
            const double ma = std::sqrt(gax * gax + gay * gay + kGradMagEps);
            const double mb = std::sqrt(gbx * gbx + gby * gby + kGradMagEps);
            acc += std::abs(ma - mb);
            if (grad) {
                const double sgn = (ma > mb) - (ma < mb);
                const double d_ma = sgn / static_cast<double>(nvalid);
                const double dgx = d_ma * gax / ma;
                const double dgy = d_ma * gay / ma;
                grad->pix[y * w + x + 1] += dgx;
                grad->pix[y * w + x] -= dgx + dgy;
                grad->pix[(y + 1) * w + x] += dgy;
            }
        }
    return acc / static_cast<double>(nvalid);
}

}  // namespace

double GradientMagnitudeProvider::evaluate(const ColorImage& rendered, const ColorImage& target,
                                           ColorImage* grad_rendered) const {
    require_same_size(rendered, target, "perceptual");
    std::vector<GrayLevel> pa, pb;
    pa.push_back(to_gray(rendered));
    pb.push_back(to_gray(target));
    for (int l = 1; l < levels_; ++l) {
        if (pa.back().w < 4 || pa.back().h < 4) break;
        pa.push_back(downsample2(pa.back()));
        pb.push_back(downsample2(pb.back()));
    }
    const int n = static_cast<int>(pa.size());
    std::vector<GrayLevel> grads;
    if (grad_rendered) {
        grads.resize(n);
        for (int l = 0; l < n; ++l) {
            grads[l].w = pa[l].w;
            grads[l].h = pa[l].h;
            grads[l].pix.assign(pa[l].pix.size(), 0.0);
        }
    }
    double total = 0;
    for (int l = 0; l < n; ++l)
        total += level_loss(pa[l], pb[l], grad_rendered ? &grads[l] : nullptr);
    total /= n;
    if (grad_rendered) {
        for (int l = n - 1; l > 0; --l) downsample2_adjoint(grads[l], grads[l - 1]);
        *grad_rendered = ColorImage(rendered.width(), rendered.height(), Vec3::Zero());
        for (size_t i = 0; i < grad_rendered->size(); ++i)
            grad_rendered->data()[i] = Vec3::Constant(grads[0].pix[i] / (3.0 * n));
    }
    return total;
}

double photometric_loss(const ColorImage& rendered, const ColorImage& target,
                        const LossWeights& weights, const PerceptualProvider* perceptual,
                        LossBreakdown* breakdown) {
    require_same_size(rendered, target, "photometric_loss");
    double l1 = 0;
    for (size_t i = 0; i < rendered.size(); ++i)
        l1 += (rendered.data()[i] - target.data()[i]).cwiseAbs().sum();
    l1 /= static_cast<double>(rendered.size()) * 3.0;
    const double dssim = weights.dssim != 0 ? 0.5 * (1.0 - ssim(rendered, target)) : 0.0;
    const double lp = (weights.lpips != 0 && perceptual)
                          ? perceptual->evaluate(rendered, target, nullptr)
                          : 0.0;
    if (breakdown) {
        breakdown->l1 = l1;
        breakdown->dssim = dssim;
        breakdown->lpips = lp;
    }
    return l1 + weights.dssim * dssim + weights.lpips * lp;
}

ColorImage photometric_grad(const ColorImage& rendered, const ColorImage& target,
                            const LossWeights& weights, const PerceptualProvider* perceptual) {
    require_same_size(rendered, target, "photometric_grad");
    const double inv_n = 1.0 / (static_cast<double>(rendered.size()) * 3.0);
    ColorImage grad(rendered.width(), rendered.height(), Vec3::Zero());
    for (size_t i = 0; i < rendered.size(); ++i) {
        const Vec3 d = rendered.data()[i] - target.data()[i];
        grad.data()[i] = inv_n * d.array().sign().matrix();
    }
    if (weights.dssim != 0) {
        // d(dssim)/d(rendered) = -0.5 d(ssim)/d(rendered)
        const ColorImage sg = ssim_backward(rendered, target, -0.5 * weights.dssim);
        for (size_t i = 0; i < grad.size(); ++i) grad.data()[i] += sg.data()[i];
    }
    if (weights.lpips != 0 && perceptual) {
        ColorImage pg;
        perceptual->evaluate(rendered, target, &pg);
        for (size_t i = 0; i < grad.size(); ++i) grad.data()[i] += weights.lpips * pg.data()[i];
    }
    return grad;
}

double normal_loss(const NormalImage& rendered, const NormalImage& target, const MaskImage& mask) {
    double acc = 0;
    size_t n = 0;
    for (size_t i = 0; i < rendered.size(); ++i) {
        if (!mask.data()[i]) continue;
        const Vec3& a = rendered.data()[i];
        const Vec3& b = target.data()[i];
        if (a.squaredNorm() < 0.25 || b.squaredNorm() < 0.25) continue;  // sentinel
        acc += 1.0 - a.dot(b);
        ++n;
    }
    return n ? acc / static_cast<double>(n) : 0.0;
}

NormalImage normal_grad(const NormalImage& rendered, const NormalImage& target,
                        const MaskImage& mask) {
    NormalImage grad(rendered.width(), rendered.height(), Vec3::Zero());
    size_t n = 0;
    for (size_t i = 0; i < rendered.size(); ++i) {
        if (!mask.data()[i]) continue;
        if (rendered.data()[i].squaredNorm() < 0.25 || target.data()[i].squaredNorm() < 0.25)
            continue;
        ++n;
    }
    if (n == 0) return grad;
    for (size_t i = 0; i < rendered.size(); ++i) {
        if (!mask.data()[i]) continue;
        if (rendered.data()[i].squaredNorm() < 0.25 || target.data()[i].squaredNorm() < 0.25)
            continue;
        grad.data()[i] = -target.data()[i] / static_cast<double>(n);
    }
    return grad;
}

double area_loss(const std::vector<Surfel>& surfels) {
    if (surfels.empty()) throw std::invalid_argument("area_loss: empty surfel set");
    const double n = static_cast<double>(surfels.size());
    double mean = 0;
    for (const auto& s : surfels) mean += s.scale().prod();
    mean /= n;
    double var = 0;
    for (const auto& s : surfels) {
        const double d = s.scale().prod() - mean;
        var += d * d;
    }
    return var / n;  // population variance
}

std::vector<Vec2> area_grad(const std::vector<Surfel>& surfels) {
    const double n = static_cast<double>(surfels.size());
    double mean = 0;
    for (const auto& s : surfels) mean += s.scale().prod();
    mean /= n;
    std::vector<Vec2> grad(surfels.size());
    for (size_t i = 0; i < surfels.size(); ++i) {
        const Vec2 sc = surfels[i].scale();
        const double prod = sc.prod();
        const double d_prod = 2.0 * (prod - mean) / n;
        // d(prod)/d(log s_u) = prod (and same for v)
        grad[i] = Vec2(d_prod * prod, d_prod * prod);
    }
    return grad;
}

double opacity_loss(const std::vector<Surfel>& surfels) {
    if (surfels.empty()) throw std::invalid_argument("opacity_loss: empty surfel set");
    double acc = 0;
    for (const auto& s : surfels) {
        const double a = s.opacity();
        acc += std::exp(-(a - 0.5) * (a - 0.5) / 0.05);
    }
    return acc / static_cast<double>(surfels.size());
}

std::vector<double> opacity_grad(const std::vector<Surfel>& surfels) {
    const double n = static_cast<double>(surfels.size());
    std::vector<double> grad(surfels.size());
    for (size_t i = 0; i < surfels.size(); ++i) {
        const double a = surfels[i].opacity();
        const double e = std::exp(-(a - 0.5) * (a - 0.5) / 0.05);
        const double d_alpha = e * (-2.0 * (a - 0.5) / 0.05) / n;
        grad[i] = d_alpha * a * (1.0 - a);  // sigmoid chain
    }
    return grad;
}

double mask_loss(const ScalarImage& alpha_map, const MaskImage& mask) {
    if (alpha_map.width() != mask.width() || alpha_map.height() != mask.height())
        throw std::invalid_argument("mask_loss: dimension mismatch");
    double acc = 0;
    for (size_t i = 0; i < alpha_map.size(); ++i) {
        const double a = std::min(1.0 - kBceEps, std::max(kBceEps, alpha_map.data()[i]));
        const double m = mask.data()[i] ? 1.0 : 0.0;
        acc += -(m * std::log(a) + (1.0 - m) * std::log(1.0 - a));
    }
    return acc / static_cast<double>(alpha_map.size());
}

ScalarImage mask_grad(const ScalarImage& alpha_map, const MaskImage& mask) {
    if (alpha_map.width() != mask.width() || alpha_map.height() != mask.height())
        throw std::invalid_argument("mask_grad: dimension mismatch");
    ScalarImage grad(alpha_map.width(), alpha_map.height(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(alpha_map.size());
    for (size_t i = 0; i < alpha_map.size(); ++i) {
        const double raw = alpha_map.data()[i];
        if (raw <= kBceEps || raw >= 1.0 - kBceEps) continue;  // clamp region, zero slope
        const double m = mask.data()[i] ? 1.0 : 0.0;
        grad.data()[i] = inv_n * (-m / raw + (1.0 - m) / (1.0 - raw));
    }
    return grad;
}

LossBreakdown total_loss(const ColorImage& rendered, const ScalarImage& alpha_map,
                         const NormalImage& rendered_normals, const ColorImage& target_rgb,
                         const MaskImage& target_mask, const NormalImage& target_normals,
                         const std::vector<Surfel>& surfels, const LossWeights& weights,
                         const PerceptualProvider* perceptual) {
    LossBreakdown b;
    const double lp = photometric_loss(rendered, target_rgb, weights, perceptual, &b);
    b.normal = weights.normal != 0 ? normal_loss(rendered_normals, target_normals, target_mask) : 0;
    const bool want_self = weights.self_supervised != 0;
    b.area = (want_self && weights.area != 0) ? area_loss(surfels) : 0;
    b.opacity = (want_self && weights.opacity != 0) ? opacity_loss(surfels) : 0;
    b.mask = weights.mask != 0 ? mask_loss(alpha_map, target_mask) : 0;
    b.total = lp + weights.normal * b.normal +
              weights.self_supervised * (weights.area * b.area + weights.opacity * b.opacity) +
              weights.mask * b.mask;
    return b;
}

}  // namespace avatar
