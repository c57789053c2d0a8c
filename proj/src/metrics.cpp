#include "hyrf/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "hyrf/error.hpp"

namespace hyrf {

namespace {

void check_pair(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": image shapes differ");
    if (a.data.empty()) throw InvalidInput(std::string(what) + ": empty image");
}

// Row-normalized 1-D Gaussian window over an axis of length n:
// out[p] = sum_q k(p, q) in[q] with sum_q k(p, q) = 1.
struct Window1d {
    int n = 0;
    int radius = 0;
    std::vector<double> taps;   // g(d) for d in [-radius, radius]
    std::vector<double> inv_norm;

    Window1d(int n_, const SsimOptions& o) : n(n_), radius(o.window / 2) {
        for (int d = -radius; d <= radius; ++d) {
            taps.push_back(std::exp(-0.5 * d * d / (o.sigma * o.sigma)));
        }
        inv_norm.resize(n);
        for (int p = 0; p < n; ++p) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                if (p + d >= 0 && p + d < n) s += taps[d + radius];
            }
            inv_norm[p] = 1.0 / s;
        }
    }

    double k(int p, int q) const { return taps[q - p + radius] * inv_norm[p]; }
};

// Applies the separable window (or its transpose) to one plane of size w x h.
void filter(const std::vector<double>& in, std::vector<double>& out, const Window1d& wx,
            const Window1d& wy, bool transpose) {
    const int w = wx.n, h = wy.n;
    std::vector<double> tmp(in.size(), 0.0);
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int p = 0; p < w; ++p) {
            double s = 0.0;
            for (int q = std::max(0, p - wx.radius); q <= std::min(w - 1, p + wx.radius); ++q) {
                s += (transpose ? wx.k(q, p) : wx.k(p, q)) * in[y * w + q];
            }
            tmp[y * w + p] = s;
        }
    }
    for (int x = 0; x < w; ++x) {
        for (int p = 0; p < h; ++p) {
            double s = 0.0;
            for (int q = std::max(0, p - wy.radius); q <= std::min(h - 1, p + wy.radius); ++q) {
                s += (transpose ? wy.k(q, p) : wy.k(p, q)) * tmp[q * w + x];
            }
            out[p * w + x] = s;
        }
    }
}

}  // namespace

double l1_error(const Image& pred, const Image& gt) {
    check_pair(pred, gt, "l1_error");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) s += std::abs(pred.data[i] - gt.data[i]);
    return s / double(pred.data.size());
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts, Image* grad) {
    check_pair(a, b, "ssim");
    if (opts.window < 1 || opts.window % 2 == 0 || !(opts.sigma > 0.0)) {
        throw InvalidInput("ssim: window must be odd and positive, sigma positive");
    }
    const int w = a.width, h = a.height, nc = a.channels;
    const std::size_t np = a.pixel_count();
    const Window1d wx(w, opts), wy(h, opts);
    if (grad) *grad = Image(w, h, nc, 0.0);

    const double scale = 1.0 / double(np * nc);
    double total = 0.0;
    std::vector<double> x(np), y(np), xx(np), yy(np), xy(np);
    std::vector<double> mx, my, exx, eyy, exy;
    for (int c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < np; ++i) {
            x[i] = a.data[i * nc + c];
            y[i] = b.data[i * nc + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        filter(x, mx, wx, wy, false);
        filter(y, my, wx, wy, false);
        filter(xx, exx, wx, wy, false);
        filter(yy, eyy, wx, wy, false);
        filter(xy, exy, wx, wy, false);

        std::vector<double> ga, gb, gc;
        if (grad) {
            ga.resize(np);
            gb.resize(np);
            gc.resize(np);
        }
        for (std::size_t i = 0; i < np; ++i) {
            const double vx = exx[i] - mx[i] * mx[i];
            const double vy = eyy[i] - my[i] * my[i];
            const double cxy = exy[i] - mx[i] * my[i];
            const double a1 = 2.0 * mx[i] * my[i] + kSsimC1;
            const double a2 = 2.0 * cxy + kSsimC2;
            const double b1 = mx[i] * mx[i] + my[i] * my[i] + kSsimC1;
            const double b2 = vx + vy + kSsimC2;
            const double s = a1 * a2 / (b1 * b2);
            total += s;
            if (grad) {
                const double d_mu = 2.0 * my[i] * a2 / (b1 * b2) - s * 2.0 * mx[i] / b1;
                const double d_var = -s / b2;
                const double d_cov = 2.0 * a1 / (b1 * b2);
                ga[i] = scale * (d_mu - 2.0 * mx[i] * d_var - my[i] * d_cov);
                gb[i] = scale * d_var;
                gc[i] = scale * d_cov;
            }
        }
        if (grad) {
            std::vector<double> ta, tb, tc;
            filter(ga, ta, wx, wy, true);
            filter(gb, tb, wx, wy, true);
            filter(gc, tc, wx, wy, true);
            for (std::size_t i = 0; i < np; ++i) {
                grad->data[i * nc + c] = ta[i] + 2.0 * x[i] * tb[i] + y[i] * tc[i];
            }
        }
    }
    return total * scale;
}

double mse(const Image& pred, const Image& gt) {
    check_pair(pred, gt, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - gt.data[i];
        s += d * d;
    }
    return s / double(pred.data.size());
}

double psnr_from_mse(double m) {
    if (!(m >= 0.0)) throw InvalidInput("psnr: MSE must be non-negative");
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double psnr(const Image& pred, const Image& gt) { return psnr_from_mse(mse(pred, gt)); }

LossValue photometric_loss(const Image& pred, const Image& gt, double lambda,
                           const SsimOptions& opts, Image* grad) {
    check_pair(pred, gt, "photometric_loss");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("loss: lambda must lie in [0, 1]");
    LossValue v;
    v.l1 = l1_error(pred, gt);
    Image ssim_grad;
    const bool need_ssim = lambda > 0.0 || !grad;
    v.ssim = need_ssim ? ssim(pred, gt, opts, grad && lambda > 0.0 ? &ssim_grad : nullptr) : 1.0;
    v.total = (1.0 - lambda) * v.l1 + lambda * (1.0 - v.ssim);
    if (grad) {
        *grad = Image(pred.width, pred.height, pred.channels, 0.0);
        const double k = (1.0 - lambda) / double(pred.data.size());
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            const double d = pred.data[i] - gt.data[i];
            double g = d > 0.0 ? k : (d < 0.0 ? -k : 0.0);
            if (lambda > 0.0) g -= lambda * ssim_grad.data[i];
            grad->data[i] = g;
        }
    }
    return v;
}

}  // namespace hyrf
