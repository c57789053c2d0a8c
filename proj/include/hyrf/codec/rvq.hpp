#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hyrf::codec {

struct RvqConfig {
    int stages = 6;
    int codebook_size = 64;
    int iterations = 20;
    std::uint64_t seed = 0;
};

/// `stages` codebooks of `size` codewords of `dim` values, stage-major.
/// Codewords are 32-bit representable.
struct RvqCodebook {
    int dim = 0;
    int stages = 0;
    int size = 0;
    std::vector<double> codewords;

    const double* codeword(int stage, std::uint32_t k) const {
        return codewords.data() + (std::size_t(stage) * size + k) * dim;
    }
};

struct RvqEncoding {
    RvqCodebook codebook;
    /// indices[i * stages + t]: codeword of vector i at stage t.
    std::vector<std::uint32_t> indices;
    /// Input minus reconstruction, N x dim.
    std::vector<double> residual;
    /// Total squared residual after each stage.
    std::vector<double> stage_error;
    /// Total squared error of each stage's clustering after every Lloyd iteration.
    std::vector<std::vector<double>> lloyd_error;
};

/// Fits and applies a residual quantizer to `vectors` (N x dim, row-major).
/// Throws InvalidInput if codebook_size > N or the shapes are inconsistent.
RvqEncoding rvq_fit_encode(std::span<const double> vectors, int dim, const RvqConfig& cfg);

/// Sum of the chosen codewords, accumulated stage by stage. Throws
/// CorruptStream on an out-of-range index.
std::vector<double> rvq_decode(const RvqCodebook& cb, std::span<const std::uint32_t> indices);

}  // namespace hyrf::codec
