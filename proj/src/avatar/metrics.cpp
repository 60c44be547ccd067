#include "avatar/metrics.hpp"

#include <cmath>

namespace avatar {

namespace {

constexpr int kRadius = 5;  // 11-tap window
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 11>& window() {
    static const std::array<double, 11> w = [] {
        std::array<double, 11> k{};
        double sum = 0;
        for (int i = -kRadius; i <= kRadius; ++i) {
            k[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
            sum += k[i + kRadius];
        }
        for (auto& v : k) v /= sum;
        return k;
    }();
    return w;
}

inline int mirror(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

using Field = std::vector<double>;

// Separable reflect-padded correlation with the Gaussian window.
Field filter2d(const Field& in, int w, int h) {
    const auto& k = window();
    Field tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int t = -kRadius; t <= kRadius; ++t) acc += k[t + kRadius] * in[y * w + mirror(x + t, w)];
            tmp[y * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int t = -kRadius; t <= kRadius; ++t) acc += k[t + kRadius] * tmp[mirror(y + t, h) * w + x];
            out[y * w + x] = acc;
        }
    return out;
}

// Adjoint of filter2d (scatter through the same mirrored indexing).
Field filter2d_adjoint(const Field& grad_out, int w, int h) {
    const auto& k = window();
    Field tmp(grad_out.size(), 0.0), grad_in(grad_out.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double g = grad_out[y * w + x];
            if (g == 0) continue;
            for (int t = -kRadius; t <= kRadius; ++t) tmp[mirror(y + t, h) * w + x] += k[t + kRadius] * g;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double g = tmp[y * w + x];
            if (g == 0) continue;
            for (int t = -kRadius; t <= kRadius; ++t) grad_in[y * w + mirror(x + t, w)] += k[t + kRadius] * g;
        }
    return grad_in;
}

Field channel(const ColorImage& img, int c) {
    Field f(img.size());
    for (size_t i = 0; i < f.size(); ++i) f[i] = img.data()[i][c];
    return f;
}

struct SsimStats {
    Field mu_a, mu_b, a2f, b2f, abf;
    int w, h, x0, x1, y0, y1;  // crop window (x0..x1) exclusive
};

SsimStats ssim_stats(const Field& a, const Field& b, int w, int h) {
    SsimStats s;
    s.w = w;
    s.h = h;
    s.mu_a = filter2d(a, w, h);
    s.mu_b = filter2d(b, w, h);
    Field a2(a.size()), b2(a.size()), ab(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        a2[i] = a[i] * a[i];
        b2[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    s.a2f = filter2d(a2, w, h);
    s.b2f = filter2d(b2, w, h);
    s.abf = filter2d(ab, w, h);
    // crop the window radius when the image allows it
    if (w > 2 * kRadius && h > 2 * kRadius) {
        s.x0 = kRadius;
        s.x1 = w - kRadius;
        s.y0 = kRadius;
        s.y1 = h - kRadius;
    } else {
        s.x0 = s.y0 = 0;
        s.x1 = w;
        s.y1 = h;
    }
    return s;
}

inline double ssim_value_at(const SsimStats& s, size_t i) {
    const double mu_a = s.mu_a[i], mu_b = s.mu_b[i];
    const double var_a = s.a2f[i] - mu_a * mu_a;
    const double var_b = s.b2f[i] - mu_b * mu_b;
    const double cov = s.abf[i] - mu_a * mu_b;
    const double n1 = 2 * mu_a * mu_b + kC1;
    const double n2 = 2 * cov + kC2;
    const double d1 = mu_a * mu_a + mu_b * mu_b + kC1;
    const double d2 = var_a + var_b + kC2;
    return (n1 * n2) / (d1 * d2);
}

}  // namespace

double psnr(const ColorImage& a, const ColorImage& b) {
    require_same_size(a, b, "psnr");
    double mse = 0;
    for (size_t i = 0; i < a.size(); ++i) mse += (a.data()[i] - b.data()[i]).squaredNorm();
    mse /= static_cast<double>(a.size()) * 3.0;
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

double psnr_masked(const ColorImage& a, const ColorImage& b, const MaskImage& mask) {
    require_same_size(a, b, "psnr");
    double mse = 0;
    size_t n = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!mask.data()[i]) continue;
        mse += (a.data()[i] - b.data()[i]).squaredNorm();
        ++n;
    }
    if (n == 0) return 100.0;
    mse /= static_cast<double>(n) * 3.0;
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ColorImage& a, const ColorImage& b) {
    require_same_size(a, b, "ssim");
    const int w = a.width(), h = a.height();
    double total = 0;
    for (int c = 0; c < 3; ++c) {
        const SsimStats s = ssim_stats(channel(a, c), channel(b, c), w, h);
        double acc = 0;
        size_t n = 0;
        for (int y = s.y0; y < s.y1; ++y)
            for (int x = s.x0; x < s.x1; ++x) {
                acc += ssim_value_at(s, static_cast<size_t>(y) * w + x);
                ++n;
            }
        total += acc / static_cast<double>(n);
    }
    return total / 3.0;
}

double ssim_masked(const ColorImage& a, const ColorImage& b, const MaskImage& mask) {
    require_same_size(a, b, "ssim");
    const int w = a.width(), h = a.height();
    double total = 0;
    for (int c = 0; c < 3; ++c) {
        const SsimStats s = ssim_stats(channel(a, c), channel(b, c), w, h);
        double acc = 0;
        size_t n = 0;
        for (int y = s.y0; y < s.y1; ++y)
            for (int x = s.x0; x < s.x1; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                if (!mask.data()[i]) continue;
                acc += ssim_value_at(s, i);
                ++n;
            }
        if (n == 0) return ssim(a, b);
        total += acc / static_cast<double>(n);
    }
    return total / 3.0;
}

ColorImage ssim_backward(const ColorImage& a, const ColorImage& b, double d_loss) {
    require_same_size(a, b, "ssim");
    const int w = a.width(), h = a.height();
    ColorImage grad(w, h, Vec3::Zero());
    for (int c = 0; c < 3; ++c) {
        const Field fa = channel(a, c), fb = channel(b, c);
        const SsimStats s = ssim_stats(fa, fb, w, h);
        const size_t ncrop = static_cast<size_t>(s.x1 - s.x0) * (s.y1 - s.y0);
        const double scale = d_loss / (3.0 * static_cast<double>(ncrop));
        Field g_mu(fa.size(), 0.0), g_a2(fa.size(), 0.0), g_ab(fa.size(), 0.0);
        for (int y = s.y0; y < s.y1; ++y)
            for (int x = s.x0; x < s.x1; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                const double mu_a = s.mu_a[i], mu_b = s.mu_b[i];
                const double var_a = s.a2f[i] - mu_a * mu_a;
                const double var_b = s.b2f[i] - mu_b * mu_b;
                const double cov = s.abf[i] - mu_a * mu_b;
                const double n1 = 2 * mu_a * mu_b + kC1;
                const double n2 = 2 * cov + kC2;
                const double d1 = mu_a * mu_a + mu_b * mu_b + kC1;
                const double d2 = var_a + var_b + kC2;
                const double v = (n1 * n2) / (d1 * d2);
                const double d_sigma_a2 = -v / d2;           // ds/d(var_a)
                const double d_cov = 2 * n1 / (d1 * d2);     // ds/d(cov)
                const double d_mu =
                    2 * mu_b * n2 / (d1 * d2) - 2 * mu_a * v / d1  // direct mu_a path
                    + d_sigma_a2 * (-2 * mu_a)                     // var_a = a2f - mu_a^2
                    + d_cov * (-mu_b);                             // cov = abf - mu_a mu_b
                g_mu[i] = scale * d_mu;
                g_a2[i] = scale * d_sigma_a2;
                g_ab[i] = scale * d_cov;
            }
        const Field adj_mu = filter2d_adjoint(g_mu, w, h);
        const Field adj_a2 = filter2d_adjoint(g_a2, w, h);
        const Field adj_ab = filter2d_adjoint(g_ab, w, h);
        for (size_t i = 0; i < fa.size(); ++i)
            grad.data()[i][c] = adj_mu[i] + 2.0 * fa[i] * adj_a2[i] + fb[i] * adj_ab[i];
    }
    return grad;
}

double ssim_reference(const ColorImage& a, const ColorImage& b) {
    require_same_size(a, b, "ssim");
    const int w = a.width(), h = a.height();
    const auto& k1d = window();
    double total = 0;
    for (int c = 0; c < 3; ++c) {
        double acc = 0;
        size_t n = 0;
        const int x0 = (w > 2 * kRadius) ? kRadius : 0;
        const int x1 = (w > 2 * kRadius) ? w - kRadius : w;
        const int y0 = (h > 2 * kRadius) ? kRadius : 0;
        const int y1 = (h > 2 * kRadius) ? h - kRadius : h;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                double mu_a = 0, mu_b = 0, a2 = 0, b2 = 0, ab = 0;
                for (int dy = -kRadius; dy <= kRadius; ++dy)
                    for (int dx = -kRadius; dx <= kRadius; ++dx) {
                        const double kw = k1d[dx + kRadius] * k1d[dy + kRadius];
                        const double va = a.at(mirror(x + dx, w), mirror(y + dy, h))[c];
                        const double vb = b.at(mirror(x + dx, w), mirror(y + dy, h))[c];
                        mu_a += kw * va;
                        mu_b += kw * vb;
                        a2 += kw * va * va;
                        b2 += kw * vb * vb;
                        ab += kw * va * vb;
                    }
                const double var_a = a2 - mu_a * mu_a;
                const double var_b = b2 - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                acc += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                       ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
                ++n;
            }
        total += acc / static_cast<double>(n);
    }
    return total / 3.0;
}

}  // namespace avatar
