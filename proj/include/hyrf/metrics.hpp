#pragma once

#include "hyrf/image.hpp"

namespace hyrf {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
};

/// Mean absolute error over all pixels and channels.
double l1_error(const Image& pred, const Image& gt);

/// Gaussian-windowed SSIM averaged over pixels and channels. The window is
/// truncated at the image border and renormalized there, so constant images
/// hit the closed form exactly. If `grad` is non-null it receives dSSIM/dpred.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {}, Image* grad = nullptr);

double mse(const Image& pred, const Image& gt);

/// 10 log10(1 / MSE) with peak 1; +infinity when MSE is zero.
double psnr_from_mse(double mse);
double psnr(const Image& pred, const Image& gt);

struct LossValue {
    double total = 0.0;
    double l1 = 0.0;
    double ssim = 0.0;
};

/// (1 - lambda) * L1 + lambda * (1 - SSIM). When `grad` is non-null it
/// receives d(total)/d(pred).
LossValue photometric_loss(const Image& pred, const Image& gt, double lambda,
                           const SsimOptions& opts = {}, Image* grad = nullptr);

}  // namespace hyrf
