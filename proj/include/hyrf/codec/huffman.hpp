#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyrf/io/binary.hpp"

namespace hyrf::codec {

inline constexpr int kMaxCodeLength = 24;

/// Code length per symbol of an alphabet (0 = symbol absent). Codes are
/// canonical: assigned in order of (length, symbol).
struct HuffmanTable {
    std::vector<std::uint8_t> lengths;

    std::size_t alphabet_size() const { return lengths.size(); }
    /// Canonical codeword of every symbol (meaningless where length is 0).
    std::vector<std::uint32_t> codes() const;
    /// Sum of 2^-len over present symbols, in units of 2^-kMaxCodeLength.
    std::uint64_t kraft_sum() const;
};

/// Code lengths from symbol frequencies, limited to `max_length` bits by
/// halving counts until the tree fits. A single used symbol gets a 1-bit code.
HuffmanTable build_table(std::span<const std::uint64_t> freqs, int max_length = kMaxCodeLength);

struct HuffmanStream {
    HuffmanTable table;
    std::uint64_t n_symbols = 0;
    std::uint64_t n_bits = 0;
    /// Codewords packed most significant bit first.
    std::vector<std::uint8_t> payload;
    /// Where the payload sat in its container; decode errors report offsets from here.
    std::size_t payload_offset = 0;
};

/// Throws InvalidInput on an empty stream or a symbol outside the alphabet.
HuffmanStream huffman_encode(std::span<const std::uint32_t> symbols, std::size_t alphabet_size);

/// Throws CorruptStream if the payload does not decode to n_symbols symbols.
std::vector<std::uint32_t> huffman_decode(const HuffmanStream& s);

/// u32 alphabet size, u8 length per symbol, u64 symbol count, u64 bit count, payload.
void write_stream(io::ByteWriter& w, const HuffmanStream& s);
HuffmanStream read_stream(io::ByteReader& r, std::size_t max_alphabet);

}  // namespace hyrf::codec
