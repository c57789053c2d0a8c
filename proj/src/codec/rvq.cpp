#include "hyrf/codec/rvq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hyrf/error.hpp"
#include "hyrf/precision.hpp"

namespace hyrf::codec {

namespace {

double dist2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double t = a[d] - b[d];
        s += t * t;
    }
    return s;
}

struct Assignment {
    std::vector<std::uint32_t> label;
    std::vector<double> d2;
};

// Nearest codeword, ties to the lower index.
void assign(const std::vector<double>& pts, const std::vector<double>& cents, int dim, int k,
            Assignment& a) {
    const std::size_t n = pts.size() / dim;
    a.label.resize(n);
    a.d2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (int c = 0; c < k; ++c) {
            const double d = dist2(&pts[i * dim], &cents[std::size_t(c) * dim], dim);
            if (d < best) {
                best = d;
                arg = static_cast<std::uint32_t>(c);
            }
        }
        a.label[i] = arg;
        a.d2[i] = best;
    }
}

double total(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

std::vector<double> seed_centroids(const std::vector<double>& pts, int dim, int k, std::mt19937_64& rng) {
    const std::size_t n = pts.size() / dim;
    std::vector<double> cents;
    cents.reserve(std::size_t(k) * dim);
    auto take = [&](std::size_t i) {
        for (int d = 0; d < dim; ++d) cents.push_back(to_f32(pts[i * dim + d]));
    };
    take(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(&pts[i * dim], cents.data(), dim);
    for (int c = 1; c < k; ++c) {
        const double sum = total(d2);
        std::size_t pick = 0;
        if (sum > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, sum)(rng);
            for (pick = 0; pick + 1 < n; ++pick) {
                if (u < d2[pick]) break;
                u -= d2[pick];
            }
        }
        take(pick);
        const double* last = &cents[std::size_t(c) * dim];
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(&pts[i * dim], last, dim));
    }
    return cents;
}

// Lloyd iterations. Each centroid moves to its (f32-rounded) cluster mean only
// when that lowers the cluster's error, so the recorded error never rises.
std::vector<double> lloyd(const std::vector<double>& pts, int dim, int k, int iterations,
                          std::mt19937_64& rng, std::vector<double>& history) {
    const std::size_t n = pts.size() / dim;
    std::vector<double> cents = seed_centroids(pts, dim, k, rng);
    Assignment a;
    assign(pts, cents, dim, k, a);
    history.push_back(total(a.d2));
    std::vector<double> sum(std::size_t(k) * dim);
    std::vector<std::size_t> count(k);
    for (int it = 0; it < iterations; ++it) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[a.label[i]];
            for (int d = 0; d < dim; ++d) sum[std::size_t(a.label[i]) * dim + d] += pts[i * dim + d];
        }
        std::vector<double> err_old(k, 0.0), err_new(k, 0.0);
        std::vector<double> cand(std::size_t(k) * dim);
        for (int c = 0; c < k; ++c) {
            for (int d = 0; d < dim; ++d) {
                const std::size_t j = std::size_t(c) * dim + d;
                cand[j] = count[c] ? to_f32(sum[j] / double(count[c])) : cents[j];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = a.label[i];
            err_old[c] += a.d2[i];
            err_new[c] += dist2(&pts[i * dim], &cand[std::size_t(c) * dim], dim);
        }
        bool moved = false;
        for (int c = 0; c < k; ++c) {
            if (count[c] && err_new[c] < err_old[c]) {
                std::copy_n(&cand[std::size_t(c) * dim], dim, &cents[std::size_t(c) * dim]);
                moved = true;
            }
        }
        // Empty clusters restart at the point currently worst served.
        for (int c = 0; c < k; ++c) {
            if (count[c]) continue;
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (a.d2[i] > a.d2[far]) far = i;
            }
            if (a.d2[far] == 0.0) break;
            for (int d = 0; d < dim; ++d) cents[std::size_t(c) * dim + d] = to_f32(pts[far * dim + d]);
            a.d2[far] = 0.0;
            moved = true;
        }
        assign(pts, cents, dim, k, a);
        history.push_back(total(a.d2));
        if (!moved) break;
    }
    return cents;
}

}  // namespace

RvqEncoding rvq_fit_encode(std::span<const double> vectors, int dim, const RvqConfig& cfg) {
    if (dim < 1) throw InvalidInput("rvq: dimension must be positive");
    if (vectors.size() % dim != 0) throw InvalidInput("rvq: input length is not a multiple of dim");
    if (cfg.stages < 1 || cfg.codebook_size < 1 || cfg.iterations < 1) {
        throw InvalidInput("rvq: stages, codebook size and iterations must be positive");
    }
    const std::size_t n = vectors.size() / dim;
    if (std::size_t(cfg.codebook_size) > n) {
        throw InvalidInput("rvq: codebook size " + std::to_string(cfg.codebook_size) + " exceeds " +
                           std::to_string(n) + " vectors");
    }
    for (double v : vectors) {
        if (!std::isfinite(v)) throw InvalidInput("rvq: non-finite input");
    }
    std::mt19937_64 rng(cfg.seed);
    RvqEncoding out;
    out.codebook.dim = dim;
    out.codebook.stages = cfg.stages;
    out.codebook.size = cfg.codebook_size;
    out.indices.resize(n * cfg.stages);

    // recon is accumulated exactly as rvq_decode does, so the residual below
    // is bit-identical to input minus decode.
    std::vector<double> recon(n * dim, 0.0);
    std::vector<double> residual(vectors.begin(), vectors.end());
    Assignment a;
    for (int t = 0; t < cfg.stages; ++t) {
        std::vector<double> history;
        const std::vector<double> cents =
            lloyd(residual, dim, cfg.codebook_size, cfg.iterations, rng, history);
        out.lloyd_error.push_back(std::move(history));
        assign(residual, cents, dim, cfg.codebook_size, a);
        out.codebook.codewords.insert(out.codebook.codewords.end(), cents.begin(), cents.end());
        for (std::size_t i = 0; i < n; ++i) {
            out.indices[i * cfg.stages + t] = a.label[i];
            for (int d = 0; d < dim; ++d) {
                recon[i * dim + d] += cents[std::size_t(a.label[i]) * dim + d];
                residual[i * dim + d] = vectors[i * dim + d] - recon[i * dim + d];
            }
        }
        double err = 0.0;
        for (double r : residual) err += r * r;
        out.stage_error.push_back(err);
    }
    out.residual = std::move(residual);
    return out;
}

std::vector<double> rvq_decode(const RvqCodebook& cb, std::span<const std::uint32_t> indices) {
    if (cb.dim < 1 || cb.stages < 1 || cb.size < 1 ||
        cb.codewords.size() != std::size_t(cb.stages) * cb.size * cb.dim) {
        throw InvalidInput("rvq: malformed codebook");
    }
    if (indices.size() % cb.stages != 0) throw CorruptStream("rvq: index count is not a multiple of stages", 0);
    const std::size_t n = indices.size() / cb.stages;
    std::vector<double> out(n * cb.dim, 0.0);
    for (int t = 0; t < cb.stages; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t k = indices[i * cb.stages + t];
            if (k >= std::uint32_t(cb.size)) {
                throw CorruptStream("rvq: index " + std::to_string(k) + " out of range for vector " +
                                        std::to_string(i),
                                    0);
            }
            const double* w = cb.codeword(t, k);
            for (int d = 0; d < cb.dim; ++d) out[i * cb.dim + d] += w[d];
        }
    }
    return out;
}

}  // namespace hyrf::codec
