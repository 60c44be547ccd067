#pragma once

#include "avatar/image.hpp"

namespace avatar {

// PSNR over [0,1] images, capped at 100 dB for MSE below 1e-10.
double psnr(const ColorImage& a, const ColorImage& b);
// PSNR restricted to mask-foreground pixels.
double psnr_masked(const ColorImage& a, const ColorImage& b, const MaskImage& mask);

// SSIM with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
// reflect-padded filtering, mean taken over the window-radius-cropped
// interior, averaged over channels.
double ssim(const ColorImage& a, const ColorImage& b);
double ssim_masked(const ColorImage& a, const ColorImage& b, const MaskImage& mask);

// Gradient of ssim(a, b) w.r.t. `a`, scaled by d_loss.
ColorImage ssim_backward(const ColorImage& a, const ColorImage& b, double d_loss);

// Deliberately naive O(window^2) SSIM used as the independent test oracle.
double ssim_reference(const ColorImage& a, const ColorImage& b);

}  // namespace avatar
