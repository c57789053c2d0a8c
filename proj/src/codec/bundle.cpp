#include "hyrf/codec/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hyrf/codec/half.hpp"
#include "hyrf/codec/huffman.hpp"
#include "hyrf/codec/quantize.hpp"
#include "hyrf/error.hpp"
#include "hyrf/parallel.hpp"
#include "hyrf/precision.hpp"

namespace hyrf::codec {

namespace {

constexpr char kMagic[4] = {'H', 'Y', 'R', 'F'};

struct Group {
    int dim;
    std::vector<double> values;
};

std::vector<Group> attribute_groups(const ExplicitGaussianSet& gs) {
    const std::size_t n = gs.size();
    Group color{3, gs.colors.value};
    Group so{2, std::vector<double>(2 * n)};
    for (std::size_t i = 0; i < n; ++i) {
        so.values[2 * i] = gs.scales.value[i];
        so.values[2 * i + 1] = gs.opacities.value[i];
    }
    return {std::move(color), std::move(so)};
}

std::vector<std::uint8_t> encode_group(const Group& g, const RvqConfig& cfg) {
    const RvqEncoding enc = rvq_fit_encode(g.values, g.dim, cfg);
    io::ByteWriter w;
    w.put<std::uint8_t>(static_cast<std::uint8_t>(g.dim));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.stages));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(cfg.codebook_size));
    w.put_f32_array(enc.codebook.codewords);
    write_stream(w, huffman_encode(enc.indices, cfg.codebook_size));
    return w.take();
}

std::vector<std::uint8_t> encode_level(std::span<const double> values) {
    const QuantizedArray q = quantize_8bit(values);
    io::ByteWriter w;
    w.put<float>(static_cast<float>(q.min));
    w.put<float>(static_cast<float>(q.max));
    const std::vector<std::uint32_t> symbols(q.codes.begin(), q.codes.end());
    write_stream(w, huffman_encode(symbols, 256));
    return w.take();
}

// Level spans of both fields, radiance first.
std::vector<std::span<const double>> level_spans(const HyrfModel& m) {
    std::vector<std::span<const double>> out;
    for (const HashField* f : {&m.radiance, &m.geometry}) {
        const int fpe = f->config().features_per_entry;
        for (int l = 0; l < f->config().n_levels; ++l) {
            out.push_back(f->params().subspan(f->level_offset(l) * fpe, f->level_size(l) * fpe));
        }
    }
    return out;
}

std::vector<std::span<double>> level_spans(HyrfModel& m) {
    std::vector<std::span<double>> out;
    for (HashField* f : {&m.radiance, &m.geometry}) {
        const int fpe = f->config().features_per_entry;
        for (int l = 0; l < f->config().n_levels; ++l) {
            out.push_back(f->params().subspan(f->level_offset(l) * fpe, f->level_size(l) * fpe));
        }
    }
    return out;
}

}  // namespace

const BundleSection& CompressedBundle::section(const std::string& name) const {
    for (const auto& s : sections) {
        if (s.name == name) return s;
    }
    throw InvalidInput("bundle has no section '" + name + "'");
}

std::span<const std::uint8_t> CompressedBundle::section_bytes(const std::string& name) const {
    const BundleSection& s = section(name);
    return std::span<const std::uint8_t>(bytes).subspan(s.offset, s.size);
}

CompressedBundle compress_model(const io::Checkpoint& ck, const BundleOptions& opts) {
    const HyrfModel& m = ck.model;
    m.gaussians.validate();
    const std::size_t n = m.gaussians.size();
    if (n == 0) throw InvalidInput("compress: model has no Gaussians");
    for (double p : m.gaussians.positions.value) {
        if (std::abs(p) > 65504.0) throw InvalidInput("compress: position outside the 16-bit float range");
    }
    RvqConfig rvq = opts.rvq;
    rvq.codebook_size = static_cast<int>(std::min<std::size_t>(rvq.codebook_size, n));
    if (rvq.stages < 1 || rvq.stages > 255 || rvq.codebook_size < 1 || rvq.codebook_size > 65535) {
        throw InvalidInput("compress: R-VQ stages must lie in [1, 255] and codebook size in [1, 65535]");
    }

    // Independent streams, encoded in parallel and concatenated in order.
    const std::vector<Group> groups = attribute_groups(m.gaussians);
    const auto levels = level_spans(m);
    const int n_jobs = static_cast<int>(groups.size() + levels.size());
    std::vector<std::vector<std::uint8_t>> parts(n_jobs);
    parallel_for(n_jobs, opts.threads, [&](int b, int e, int) {
        for (int j = b; j < e; ++j) {
            if (j < static_cast<int>(groups.size())) {
                parts[j] = encode_group(groups[j], rvq);
            } else {
                parts[j] = encode_level(levels[j - groups.size()]);
            }
        }
    });

    CompressedBundle out;
    io::ByteWriter w;
    std::size_t mark = 0;
    auto close = [&](const char* name) {
        out.sections.push_back({name, mark, w.size() - mark});
        mark = w.size();
    };
    for (char c : kMagic) w.put<char>(c);
    w.put<std::uint16_t>(kBundleVersion);
    w.put<std::uint32_t>(ck.iteration);
    io::write_model_config(w, m.config);
    w.put<std::uint64_t>(n);
    close("header");
    for (double p : m.gaussians.positions.value) w.put<std::uint16_t>(float_to_half(static_cast<float>(p)));
    close("positions");
    w.put<std::uint8_t>(static_cast<std::uint8_t>(groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g) w.put_bytes(parts[g]);
    close("attributes");
    for (std::size_t l = 0; l < levels.size(); ++l) w.put_bytes(parts[groups.size() + l]);
    close("hash");
    io::write_decoder(w, m.geometry_decoder);
    io::write_decoder(w, m.color_decoder);
    close("decoders");
    io::write_cameras(w, ck.cameras);
    close("cameras");
    const std::uint32_t sum = io::fnv1a(w.bytes());
    w.put<std::uint32_t>(sum);
    close("checksum");
    out.bytes = w.take();
    return out;
}

io::Checkpoint decompress_model(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    const auto magic = r.get_bytes(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CorruptStream("not a compressed bundle (bad magic)", 0);
    }
    const std::size_t ver_at = r.offset();
    const auto version = r.get<std::uint16_t>();
    if (version != kBundleVersion) {
        throw CorruptStream("unsupported bundle version " + std::to_string(version) +
                                " (this build reads version " + std::to_string(kBundleVersion) + ")",
                            ver_at);
    }
    if (bytes.size() < 4) throw CorruptStream("bundle too short", 0);
    const std::size_t body = bytes.size() - 4;
    {
        io::ByteReader tail(bytes.subspan(body));
        if (tail.get<std::uint32_t>() != io::fnv1a(bytes.first(body))) {
            throw CorruptStream("checksum mismatch", body);
        }
    }

    io::Checkpoint ck;
    ck.iteration = r.get<std::uint32_t>();
    const ModelConfig cfg = io::read_model_config(r);
    const std::size_t n_at = r.offset();
    const auto n = r.get<std::uint64_t>();
    if (n == 0 || n * 3 * sizeof(std::uint16_t) > r.remaining()) {
        throw CorruptStream("gaussian count " + std::to_string(n) + " is implausible", n_at);
    }
    ck.model = HyrfModel::create(cfg, 0);
    auto& gs = ck.model.gaussians;
    gs.resize(n);
    for (double& p : gs.positions.value) p = half_to_float(r.get<std::uint16_t>());

    const std::size_t groups_at = r.offset();
    const auto n_groups = r.get<std::uint8_t>();
    if (n_groups != 2) throw CorruptStream("expected 2 attribute groups, found " + std::to_string(n_groups), groups_at);
    const int expect_dim[2] = {3, 2};
    std::vector<std::vector<double>> decoded(2);
    for (int g = 0; g < 2; ++g) {
        const std::size_t at = r.offset();
        RvqCodebook cb;
        cb.dim = r.get<std::uint8_t>();
        cb.stages = r.get<std::uint8_t>();
        cb.size = r.get<std::uint16_t>();
        if (cb.dim != expect_dim[g] || cb.stages < 1 || cb.size < 1 || std::uint64_t(cb.size) > n) {
            throw CorruptStream("malformed R-VQ group header", at);
        }
        cb.codewords.resize(std::size_t(cb.stages) * cb.size * cb.dim);
        r.get_f32_array(cb.codewords);
        const std::size_t idx_at = r.offset();
        const HuffmanStream hs = read_stream(r, cb.size);
        if (hs.n_symbols != n * cb.stages) throw CorruptStream("R-VQ index count mismatch", idx_at);
        const std::vector<std::uint32_t> idx = huffman_decode(hs);
        try {
            decoded[g] = rvq_decode(cb, idx);
        } catch (const CorruptStream& e) {
            throw CorruptStream(e.what(), idx_at);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) gs.colors.value[3 * i + c] = to_f32(decoded[0][3 * i + c]);
        gs.scales.value[i] = to_f32(decoded[1][2 * i]);
        gs.opacities.value[i] = to_f32(decoded[1][2 * i + 1]);
    }

    for (std::span<double> level : level_spans(ck.model)) {
        const std::size_t at = r.offset();
        QuantizedArray q;
        q.min = r.get<float>();
        q.max = r.get<float>();
        if (!(q.min <= q.max)) throw CorruptStream("hash level range is inverted", at);
        const HuffmanStream hs = read_stream(r, 256);
        if (hs.n_symbols != level.size()) throw CorruptStream("hash level size mismatch", at);
        const std::vector<std::uint32_t> codes = huffman_decode(hs);
        q.codes.assign(codes.begin(), codes.end());
        dequantize_8bit(q, level);
        for (double& v : level) v = to_f32(v);
    }
    io::read_decoder(r, ck.model.geometry_decoder);
    io::read_decoder(r, ck.model.color_decoder);
    ck.cameras = io::read_cameras(r);
    if (r.offset() != body) r.fail("trailing bytes before checksum");
    try {
        gs.validate();
    } catch (const Error& e) {
        throw CorruptStream(std::string("invalid gaussian data: ") + e.what(), n_at);
    }
    return ck;
}

void save_bundle(const std::string& path, const CompressedBundle& b) { io::write_file(path, b.bytes); }

io::Checkpoint load_bundle(const std::string& path) { return decompress_model(io::read_file(path)); }

}  // namespace hyrf::codec
