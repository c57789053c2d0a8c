#include "hyrf/codec/huffman.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <tuple>

#include "hyrf/error.hpp"

namespace hyrf::codec {

namespace {

// Symbols sorted by (length, symbol), skipping absent ones.
std::vector<std::uint32_t> canonical_order(const std::vector<std::uint8_t>& lengths) {
    std::vector<std::uint32_t> order;
    for (std::uint32_t s = 0; s < lengths.size(); ++s) {
        if (lengths[s] > 0) order.push_back(s);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return lengths[a] < lengths[b]; });
    return order;
}

std::vector<std::uint8_t> tree_lengths(std::span<const std::uint64_t> freqs) {
    const std::size_t n = freqs.size();
    std::vector<std::uint8_t> lengths(n, 0);
    struct Node {
        std::uint64_t weight;
        std::uint32_t order;  // tie-break: lower first, so the build is deterministic
        int left, right;
        std::uint32_t symbol;
    };
    std::vector<Node> nodes;
    using Item = std::tuple<std::uint64_t, std::uint32_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::uint32_t s = 0; s < n; ++s) {
        if (freqs[s] == 0) continue;
        nodes.push_back({freqs[s], s, -1, -1, s});
        heap.emplace(freqs[s], s, static_cast<int>(nodes.size()) - 1);
    }
    if (nodes.size() == 1) {
        lengths[nodes[0].symbol] = 1;
        return lengths;
    }
    std::uint32_t next_order = static_cast<std::uint32_t>(n);
    while (heap.size() > 1) {
        auto [wa, oa, a] = heap.top();
        heap.pop();
        auto [wb, ob, b] = heap.top();
        heap.pop();
        nodes.push_back({wa + wb, next_order, a, b, 0});
        heap.emplace(wa + wb, next_order++, static_cast<int>(nodes.size()) - 1);
    }
    // Depth-first walk from the root.
    std::vector<std::pair<int, int>> stack{{std::get<2>(heap.top()), 0}};
    while (!stack.empty()) {
        auto [i, depth] = stack.back();
        stack.pop_back();
        const Node& nd = nodes[i];
        if (nd.left < 0) {
            lengths[nd.symbol] = static_cast<std::uint8_t>(std::min(depth, 255));
            continue;
        }
        stack.push_back({nd.left, depth + 1});
        stack.push_back({nd.right, depth + 1});
    }
    return lengths;
}

}  // namespace

std::vector<std::uint32_t> HuffmanTable::codes() const {
    std::vector<std::uint32_t> out(lengths.size(), 0);
    std::uint32_t code = 0;
    int prev = 0;
    for (std::uint32_t s : canonical_order(lengths)) {
        code <<= (lengths[s] - prev);
        prev = lengths[s];
        out[s] = code++;
    }
    return out;
}

std::uint64_t HuffmanTable::kraft_sum() const {
    std::uint64_t sum = 0;
    for (std::uint8_t l : lengths) {
        if (l > 0 && l <= kMaxCodeLength) sum += std::uint64_t{1} << (kMaxCodeLength - l);
    }
    return sum;
}

HuffmanTable build_table(std::span<const std::uint64_t> freqs, int max_length) {
    if (max_length < 1 || max_length > kMaxCodeLength) {
        throw InvalidInput("huffman: max code length must lie in [1, 24]");
    }
    std::size_t used = 0;
    for (auto f : freqs) used += f > 0;
    if (used == 0) throw InvalidInput("huffman: no symbol has a nonzero frequency");
    if (used > (std::size_t{1} << max_length)) {
        throw InvalidInput("huffman: alphabet too large for the code length limit");
    }
    std::vector<std::uint64_t> f(freqs.begin(), freqs.end());
    for (;;) {
        HuffmanTable t{tree_lengths(f)};
        if (*std::max_element(t.lengths.begin(), t.lengths.end()) <= max_length) return t;
        for (auto& x : f) {
            if (x > 0) x = std::max<std::uint64_t>(1, x / 2);
        }
    }
}

HuffmanStream huffman_encode(std::span<const std::uint32_t> symbols, std::size_t alphabet_size) {
    if (symbols.empty()) throw InvalidInput("huffman: empty stream");
    if (alphabet_size == 0) throw InvalidInput("huffman: empty alphabet");
    std::vector<std::uint64_t> freqs(alphabet_size, 0);
    for (std::uint32_t s : symbols) {
        if (s >= alphabet_size) {
            throw InvalidInput("huffman: symbol " + std::to_string(s) + " outside alphabet of " +
                               std::to_string(alphabet_size));
        }
        ++freqs[s];
    }
    HuffmanStream out;
    out.table = build_table(freqs);
    out.n_symbols = symbols.size();
    const auto codes = out.table.codes();
    const auto& lens = out.table.lengths;

    std::uint64_t bits = 0;
    for (std::uint32_t s : symbols) bits += lens[s];
    out.n_bits = bits;
    out.payload.assign((bits + 7) / 8, 0);
    std::uint64_t pos = 0;
    for (std::uint32_t s : symbols) {
        const std::uint32_t c = codes[s];
        for (int b = lens[s] - 1; b >= 0; --b, ++pos) {
            if ((c >> b) & 1u) out.payload[pos >> 3] |= static_cast<std::uint8_t>(0x80u >> (pos & 7));
        }
    }
    return out;
}

std::vector<std::uint32_t> huffman_decode(const HuffmanStream& s) {
    const auto& lens = s.table.lengths;
    if (s.n_bits > s.payload.size() * 8) throw CorruptStream("huffman: bit count exceeds payload", s.payload_offset);
    const std::vector<std::uint32_t> order = canonical_order(lens);
    if (order.empty()) throw CorruptStream("huffman: table has no symbols", s.payload_offset);

    // first[l]: first canonical code of length l; base[l]: its index in `order`.
    std::uint32_t count[kMaxCodeLength + 1] = {};
    for (std::uint32_t sym : order) {
        if (lens[sym] > kMaxCodeLength) throw CorruptStream("huffman: code length too large", s.payload_offset);
        ++count[lens[sym]];
    }
    std::uint32_t first[kMaxCodeLength + 1] = {}, base[kMaxCodeLength + 1] = {};
    std::uint32_t code = 0, index = 0;
    for (int l = 1; l <= kMaxCodeLength; ++l) {
        code = (code + (l > 1 ? count[l - 1] : 0)) << (l > 1 ? 1 : 0);
        first[l] = code;
        base[l] = index;
        index += count[l];
    }

    std::vector<std::uint32_t> out;
    out.reserve(s.n_symbols);
    std::uint64_t pos = 0;
    while (out.size() < s.n_symbols) {
        std::uint32_t c = 0;
        int l = 0;
        for (;;) {
            if (pos >= s.n_bits) {
                throw CorruptStream("huffman: payload ends inside a codeword (symbol " +
                                        std::to_string(out.size()) + ")",
                                    s.payload_offset + pos / 8);
            }
            c = (c << 1) | ((s.payload[pos >> 3] >> (7 - (pos & 7))) & 1u);
            ++pos;
            ++l;
            if (l > kMaxCodeLength) throw CorruptStream("huffman: invalid codeword", s.payload_offset + pos / 8);
            if (count[l] > 0 && c >= first[l] && c - first[l] < count[l]) break;
        }
        out.push_back(order[base[l] + (c - first[l])]);
    }
    if (pos != s.n_bits) throw CorruptStream("huffman: trailing bits after last symbol", s.payload_offset + pos / 8);
    return out;
}

void write_stream(io::ByteWriter& w, const HuffmanStream& s) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.table.lengths.size()));
    w.put_bytes(s.table.lengths);
    w.put<std::uint64_t>(s.n_symbols);
    w.put<std::uint64_t>(s.n_bits);
    w.put_bytes(s.payload);
}

HuffmanStream read_stream(io::ByteReader& r, std::size_t max_alphabet) {
    const std::size_t at = r.offset();
    HuffmanStream s;
    const auto n = r.get<std::uint32_t>();
    if (n == 0 || n > max_alphabet) {
        throw CorruptStream("huffman: alphabet size " + std::to_string(n) + " out of range", at);
    }
    const auto lens = r.get_bytes(n);
    s.table.lengths.assign(lens.begin(), lens.end());
    for (std::uint8_t l : s.table.lengths) {
        if (l > kMaxCodeLength) throw CorruptStream("huffman: code length too large", at);
    }
    const auto kraft = s.table.kraft_sum();
    if (kraft == 0 || kraft > (std::uint64_t{1} << kMaxCodeLength)) {
        throw CorruptStream("huffman: code lengths violate the Kraft inequality", at);
    }
    s.n_symbols = r.get<std::uint64_t>();
    const std::size_t bits_at = r.offset();
    s.n_bits = r.get<std::uint64_t>();
    if (s.n_bits / 8 > r.remaining()) throw CorruptStream("huffman: payload exceeds stream", bits_at);
    if (s.n_symbols > s.n_bits) throw CorruptStream("huffman: symbol count exceeds bit count", bits_at);
    s.payload_offset = r.offset();
    const auto payload = r.get_bytes((s.n_bits + 7) / 8);
    s.payload.assign(payload.begin(), payload.end());
    return s;
}

}  // namespace hyrf::codec
