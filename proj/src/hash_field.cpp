#include "hyrf/hash_field.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hyrf/error.hpp"

namespace hyrf {

namespace {

constexpr std::uint32_t kPrimeY = 2654435761u;
constexpr std::uint32_t kPrimeZ = 805459861u;
constexpr double kInitRange = 1e-4;

}  // namespace

double HashFieldConfig::growth_for(int base_resolution, int finest_resolution, int n_levels) {
    if (n_levels <= 1) return 1.0;
    return std::exp((std::log(double(finest_resolution)) - std::log(double(base_resolution))) /
                    double(n_levels - 1));
}

int HashFieldConfig::resolution(int level) const {
    return static_cast<int>(std::floor(base_resolution * std::pow(growth_factor, level) + 1e-6));
}

void HashFieldConfig::validate() const {
    if (n_levels < 1) throw InvalidInput("hash field needs at least one level");
    if (features_per_entry < 1) throw InvalidInput("hash field needs at least one feature per entry");
    if (log2_max_entries < 1 || log2_max_entries > 30) {
        throw InvalidInput("hash field log2_max_entries must lie in [1, 30]");
    }
    if (base_resolution < 1) throw InvalidInput("hash field base resolution must be positive");
    for (int l = 1; l < n_levels; ++l) {
        if (resolution(l) <= resolution(l - 1)) {
            std::ostringstream os;
            os << "hash field resolutions must strictly increase (level " << l << ": "
               << resolution(l - 1) << " -> " << resolution(l) << ")";
            throw InvalidInput(os.str());
        }
    }
}

HashField::HashField(const HashFieldConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    const std::size_t cap = std::size_t{1} << config_.log2_max_entries;
    offsets_.push_back(0);
    for (int l = 0; l < config_.n_levels; ++l) {
        const int res = config_.resolution(l);
        resolutions_.push_back(res);
        const double vertices = std::pow(double(res) + 1.0, 3.0);
        const bool dense = vertices <= double(cap);
        dense_.push_back(dense ? 1 : 0);
        offsets_.push_back(offsets_.back() + (dense ? static_cast<std::size_t>(vertices) : cap));
    }
    const std::size_t n = n_entries() * config_.features_per_entry;
    params_.resize(n);
    grads_.assign(n, 0.0);
    touched_flag_.assign(n_entries(), 0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-kInitRange, kInitRange);
    for (double& v : params_) v = static_cast<float>(dist(rng));
}

std::size_t HashField::entry_index(int level, std::uint32_t ix, std::uint32_t iy,
                                   std::uint32_t iz) const {
    const std::size_t size = level_size(level);
    std::size_t local;
    if (dense_[level]) {
        const std::size_t stride = static_cast<std::size_t>(resolutions_[level]) + 1;
        local = ix + stride * (iy + stride * iz);
    } else {
        local = static_cast<std::size_t>(ix ^ (iy * kPrimeY) ^ (iz * kPrimeZ)) % size;
    }
    return offsets_[level] + local;
}

void HashField::check_input(const Eigen::Vector3d& p) const {
    if (!(p.array() > 0.0).all() || !(p.array() < 1.0).all()) {
        std::ostringstream os;
        os << "hash_encode: input (" << p.transpose() << ") is outside (0,1)^3; contract it first";
        throw InvalidInput(os.str());
    }
}

void HashField::locate(int level, const Eigen::Vector3d& p, Corners& c) const {
    const int res = resolutions_[level];
    c.resolution = res;
    std::uint32_t base[3];
    for (int k = 0; k < 3; ++k) {
        const double x = p[k] * res;
        double cell = std::floor(x);
        if (cell >= res) cell = res - 1;  // p -> 1 from below at coarse precision
        base[k] = static_cast<std::uint32_t>(cell);
        c.frac[k] = x - cell;
    }
    for (int corner = 0; corner < 8; ++corner) {
        double w = 1.0;
        std::uint32_t idx[3];
        for (int k = 0; k < 3; ++k) {
            const bool hi = (corner >> k) & 1;
            idx[k] = base[k] + (hi ? 1u : 0u);
            w *= hi ? c.frac[k] : 1.0 - c.frac[k];
        }
        c.index[corner] = entry_index(level, idx[0], idx[1], idx[2]);
        c.weight[corner] = w;
    }
}

void HashField::encode(const Eigen::Vector3d& p, std::span<double> out) const {
    check_input(p);
    if (out.size() != static_cast<std::size_t>(output_dim())) {
        throw InvalidInput("hash_encode: output buffer has wrong length");
    }
    const int nf = config_.features_per_entry;
    Corners c;
    for (int l = 0; l < config_.n_levels; ++l) {
        locate(l, p, c);
        double* dst = out.data() + static_cast<std::size_t>(l) * nf;
        for (int f = 0; f < nf; ++f) dst[f] = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
            const double* src = params_.data() + c.index[corner] * nf;
            const double w = c.weight[corner];
            for (int f = 0; f < nf; ++f) dst[f] += w * src[f];
        }
    }
}

Eigen::Vector3d HashField::backward(const Eigen::Vector3d& p, std::span<const double> upstream) {
    check_input(p);
    if (upstream.size() != static_cast<std::size_t>(output_dim())) {
        throw InvalidInput("hash_encode_backward: upstream gradient has wrong length");
    }
    const int nf = config_.features_per_entry;
    Eigen::Vector3d grad_p = Eigen::Vector3d::Zero();
    Corners c;
    for (int l = 0; l < config_.n_levels; ++l) {
        const double* g = upstream.data() + static_cast<std::size_t>(l) * nf;
        bool any = false;
        for (int f = 0; f < nf; ++f) any = any || g[f] != 0.0;
        if (!any) continue;
        locate(l, p, c);
        for (int corner = 0; corner < 8; ++corner) {
            const std::size_t entry = c.index[corner];
            const double* table = params_.data() + entry * nf;
            double* grad = grads_.data() + entry * nf;
            const double w = c.weight[corner];
            double g_dot_table = 0.0;
            for (int f = 0; f < nf; ++f) {
                grad[f] += w * g[f];
                g_dot_table += g[f] * table[f];
            }
            if (w != 0.0 && !touched_flag_[entry]) {
                touched_flag_[entry] = 1;
                touched_.push_back(static_cast<std::uint32_t>(entry));
            }
            // d weight / d p_k = res * (+-1) * product of the other two axis factors.
            for (int k = 0; k < 3; ++k) {
                double dw = c.resolution;
                for (int a = 0; a < 3; ++a) {
                    const bool hi = (corner >> a) & 1;
                    if (a == k) {
                        dw *= hi ? 1.0 : -1.0;
                    } else {
                        dw *= hi ? c.frac[a] : 1.0 - c.frac[a];
                    }
                }
                grad_p[k] += dw * g_dot_table;
            }
        }
    }
    return grad_p;
}

void HashField::zero_grad() {
    const int nf = config_.features_per_entry;
    for (std::uint32_t entry : touched_) {
        touched_flag_[entry] = 0;
        for (int f = 0; f < nf; ++f) grads_[std::size_t{entry} * nf + f] = 0.0;
    }
    touched_.clear();
}

std::vector<double> encode_direction(const Eigen::Vector3d& p, const Eigen::Vector3d& cam_pos,
                                     int n_frequencies) {
    const Eigen::Vector3d v = p - cam_pos;
    const double n = v.norm();
    if (!(n > 0.0)) throw InvalidInput("encode_direction: point coincides with the camera");
    std::vector<double> out(direction_encoding_dim(n_frequencies));
    encode_unit_direction(v / n, n_frequencies, out);
    return out;
}

void encode_unit_direction(const Eigen::Vector3d& d, int n_frequencies, std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(direction_encoding_dim(n_frequencies))) {
        throw InvalidInput("encode_direction: output buffer has wrong length");
    }
    for (int k = 0; k < 3; ++k) out[k] = d[k];
    double freq = M_PI;
    for (int l = 0; l < n_frequencies; ++l, freq *= 2.0) {
        for (int k = 0; k < 3; ++k) {
            out[3 + 6 * l + k] = std::sin(freq * d[k]);
            out[3 + 6 * l + 3 + k] = std::cos(freq * d[k]);
        }
    }
}

Eigen::Vector3d encode_direction_backward(const Eigen::Vector3d& p, const Eigen::Vector3d& cam_pos,
                                          int n_frequencies, std::span<const double> upstream) {
    if (upstream.size() != static_cast<std::size_t>(direction_encoding_dim(n_frequencies))) {
        throw InvalidInput("encode_direction_backward: upstream gradient has wrong length");
    }
    const Eigen::Vector3d v = p - cam_pos;
    const double n = v.norm();
    if (!(n > 0.0)) throw InvalidInput("encode_direction: point coincides with the camera");
    const Eigen::Vector3d d = v / n;
    Eigen::Vector3d grad_d;
    for (int k = 0; k < 3; ++k) grad_d[k] = upstream[k];
    double freq = M_PI;
    for (int l = 0; l < n_frequencies; ++l, freq *= 2.0) {
        for (int k = 0; k < 3; ++k) {
            grad_d[k] += upstream[3 + 6 * l + k] * freq * std::cos(freq * d[k]);
            grad_d[k] -= upstream[3 + 6 * l + 3 + k] * freq * std::sin(freq * d[k]);
        }
    }
    return (grad_d - d * d.dot(grad_d)) / n;
}

}  // namespace hyrf
