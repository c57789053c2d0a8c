#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace hyrf {

/// Level layout of a multi-resolution hash encoding.
struct HashFieldConfig {
    int n_levels = 16;
    int features_per_entry = 2;
    int log2_max_entries = 18;
    int base_resolution = 16;
    /// Per-level resolution multiplier; the default reaches 2048 cells at level 15.
    double growth_factor = growth_for(16, 2048, 16);

    static double growth_for(int base_resolution, int finest_resolution, int n_levels);

    /// Grid cells per axis at `level`.
    int resolution(int level) const;
    int output_dim() const { return n_levels * features_per_entry; }

    /// Throws InvalidInput if counts are non-positive or resolutions do not strictly increase.
    void validate() const;

    bool operator==(const HashFieldConfig&) const = default;
};

/// Trainable feature grid. Parameters and gradients are flat arrays laid out
/// level-major, then entry, then feature. Gradients accumulate across calls to
/// `backward` until `zero_grad`; the set of touched entries is tracked so the
/// optimizer can update sparsely.
class HashField {
public:
    HashField() = default;
    /// Tables are drawn uniformly from [-1e-4, 1e-4] (32-bit representable).
    HashField(const HashFieldConfig& config, std::uint64_t seed);

    const HashFieldConfig& config() const { return config_; }
    int output_dim() const { return config_.output_dim(); }

    std::size_t n_entries() const { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t level_offset(int level) const { return offsets_[level]; }
    std::size_t level_size(int level) const { return offsets_[level + 1] - offsets_[level]; }
    bool level_is_dense(int level) const { return dense_[level] != 0; }

    /// Table slot (entry index within the whole field) of an integer grid vertex.
    std::size_t entry_index(int level, std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const;

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> grads() { return grads_; }
    std::span<const double> grads() const { return grads_; }

    /// Feature vector of `p` (each component in (0, 1)); `out` must hold output_dim() values.
    void encode(const Eigen::Vector3d& p, std::span<double> out) const;

    /// Accumulates upstream * weight into the table gradients and returns dL/dp.
    Eigen::Vector3d backward(const Eigen::Vector3d& p, std::span<const double> upstream);

    /// Entries with gradient contributions since the last zero_grad.
    const std::vector<std::uint32_t>& touched_entries() const { return touched_; }
    void zero_grad();

private:
    struct Corners {
        std::size_t index[8];
        double weight[8];
        Eigen::Vector3d frac;
        int resolution;
    };
    void locate(int level, const Eigen::Vector3d& p, Corners& c) const;
    void check_input(const Eigen::Vector3d& p) const;

    HashFieldConfig config_;
    std::vector<std::size_t> offsets_;
    std::vector<int> resolutions_;
    std::vector<std::uint8_t> dense_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::vector<std::uint8_t> touched_flag_;
    std::vector<std::uint32_t> touched_;
};

/// Sinusoidal encoding of the unit view direction from `cam_pos` to `p`:
/// [d, sin(2^0 pi d), cos(2^0 pi d), ..., sin(2^{L-1} pi d), cos(2^{L-1} pi d)].
std::vector<double> encode_direction(const Eigen::Vector3d& p, const Eigen::Vector3d& cam_pos,
                                     int n_frequencies);

/// Same as above for an already-normalized direction, written into `out`
/// (length 3 + 6 * n_frequencies).
void encode_unit_direction(const Eigen::Vector3d& d, int n_frequencies, std::span<double> out);

inline int direction_encoding_dim(int n_frequencies) { return 3 + 6 * n_frequencies; }

/// dL/dp for the encoding of (p - cam_pos) given dL/d(encoding).
Eigen::Vector3d encode_direction_backward(const Eigen::Vector3d& p, const Eigen::Vector3d& cam_pos,
                                          int n_frequencies, std::span<const double> upstream);

}  // namespace hyrf
