#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyrf/codec/rvq.hpp"
#include "hyrf/io/checkpoint.hpp"

namespace hyrf::codec {

inline constexpr std::uint16_t kBundleVersion = 1;

struct BundleOptions {
    /// Codebook size is capped at the Gaussian count.
    RvqConfig rvq;
    int threads = 1;
};

struct BundleSection {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

struct CompressedBundle {
    std::vector<std::uint8_t> bytes;
    /// header, positions, attributes, hash, decoders, cameras, checksum.
    std::vector<BundleSection> sections;

    const BundleSection& section(const std::string& name) const;
    std::span<const std::uint8_t> section_bytes(const std::string& name) const;
};

/// Layout (little-endian): "HYRF", u16 version, u32 iteration, model config,
/// u64 N, N x 3 binary16 positions, u8 group count and per R-VQ group
/// (u8 dim, u8 stages, u16 K, f32 codewords, Huffman-coded indices), per hash
/// level of the radiance then geometry field (f32 min, f32 max, Huffman-coded
/// 8-bit codes), both decoders as raw f32, cameras, u32 FNV-1a of all
/// preceding bytes. Colors form one 3-D group, (scale, opacity) a 2-D group.
/// The output depends only on the checkpoint and options, not on threads.
CompressedBundle compress_model(const io::Checkpoint& ck, const BundleOptions& opts = {});

/// Render-ready checkpoint. Throws CorruptStream (with byte offset) on a bad
/// magic, unsupported version, truncation or checksum mismatch.
io::Checkpoint decompress_model(std::span<const std::uint8_t> bytes);

void save_bundle(const std::string& path, const CompressedBundle& b);
io::Checkpoint load_bundle(const std::string& path);

}  // namespace hyrf::codec
