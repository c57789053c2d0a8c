#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "hyrf/codec/bundle.hpp"
#include "hyrf/codec/half.hpp"
#include "hyrf/codec/huffman.hpp"
#include "hyrf/codec/quantize.hpp"
#include "hyrf/codec/rvq.hpp"
#include "hyrf/error.hpp"
#include "hyrf/pipeline.hpp"
#include "hyrf/precision.hpp"
#include "checks.hpp"
#include "scenes.hpp"

using namespace hyrf;
using namespace hyrf::codec;

namespace {

// Squared distance of a vector to a codeword.
double dist2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

std::vector<double> random_vectors(std::mt19937_64& rng, std::size_t n, int dim, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n * dim);
    for (double& x : v) x = to_f32(d(rng));
    return v;
}

io::Checkpoint small_checkpoint(std::uint64_t seed, int n = 200) {
    io::Checkpoint ck;
    ck.iteration = 1234;
    ck.model = scenes::small_model(seed, n);
    for (int c = 0; c < 3; ++c) {
        io::CameraRecord rec;
        rec.name = "view_" + std::to_string(c);
        rec.camera = Camera::look_at({2.5 * std::cos(c), 2.5 * std::sin(c), 0.8}, {0, 0, 0}, {0, 0, 1}, 0.9, 24, 20);
        rec.test = c == 2;
        ck.cameras.push_back(rec);
    }
    return ck;
}

}  // namespace

// ---- binary16 ----

TEST(Half, RoundsToNearestEven) {
    EXPECT_EQ(float_to_half(1.0f), 0x3C00);
    EXPECT_EQ(float_to_half(-2.0f), 0xC000);
    EXPECT_EQ(float_to_half(65504.0f), 0x7BFF);
    EXPECT_EQ(float_to_half(0.0f), 0x0000);
    EXPECT_EQ(float_to_half(-0.0f), 0x8000);
    // 1 + 2^-11 sits halfway between 1 and the next half; ties go to the even mantissa.
    EXPECT_EQ(float_to_half(1.0f + std::ldexp(1.0f, -11)), 0x3C00);
    EXPECT_EQ(float_to_half(1.0f + 3 * std::ldexp(1.0f, -11)), 0x3C02);
    EXPECT_EQ(float_to_half(std::ldexp(1.0f, -24)), 0x0001);
    EXPECT_EQ(float_to_half(std::ldexp(1.0f, -25)), 0x0000);
    EXPECT_EQ(float_to_half(65520.0f), 0x7C00);
    EXPECT_EQ(float_to_half(0.1f), 0x2E66);
}

TEST(Half, EveryFiniteHalfRoundTrips) {
    for (std::uint32_t h = 0; h < 0x10000; ++h) {
        if ((h & 0x7C00) == 0x7C00) continue;
        const float f = half_to_float(static_cast<std::uint16_t>(h));
        ASSERT_EQ(float_to_half(f), h) << std::hex << h;
    }
}

TEST(Half, ErrorBoundedByHalfUlp) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1000.0f, 1000.0f);
    for (int i = 0; i < 10000; ++i) {
        const float x = u(rng);
        const float y = half_to_float(float_to_half(x));
        const int e = std::ilogb(std::max(std::abs(x), std::ldexp(1.0f, -14)));
        EXPECT_LE(std::abs(x - y), std::ldexp(1.0f, e - 11)) << x;
    }
}

// ---- Huffman ----

TEST(Huffman, SingleSymbolUsesOneBit) {
    const std::vector<std::uint32_t> s{0, 0, 0, 0};
    const HuffmanStream h = huffman_encode(s, 1);
    EXPECT_EQ(h.table.lengths[0], 1);
    EXPECT_EQ(h.n_bits, 4u);
    EXPECT_EQ(huffman_decode(h), s);
}

TEST(Huffman, SmallAlphabetLengths) {
    const std::vector<std::uint32_t> s{0, 0, 1, 2};
    const HuffmanStream h = huffman_encode(s, 3);
    EXPECT_EQ(h.table.lengths, (std::vector<std::uint8_t>{1, 2, 2}));
    EXPECT_EQ(h.n_bits, 6u);
    EXPECT_EQ(huffman_decode(h), s);
}

TEST(Huffman, CanonicalCodesArePrefixFree) {
    const std::vector<std::uint64_t> f{5, 9, 12, 13, 16, 45, 0, 1};
    const HuffmanTable t = build_table(f);
    const auto codes = t.codes();
    for (std::size_t a = 0; a < f.size(); ++a) {
        for (std::size_t b = 0; b < f.size(); ++b) {
            if (a == b || !t.lengths[a] || !t.lengths[b] || t.lengths[a] > t.lengths[b]) continue;
            const std::uint32_t prefix = codes[b] >> (t.lengths[b] - t.lengths[a]);
            EXPECT_NE(prefix, codes[a]) << a << " prefixes " << b;
        }
    }
    EXPECT_EQ(t.lengths[6], 0);
}

TEST(Huffman, RandomStreamsRoundTripAndSatisfyKraft) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t alphabet = 1 + rng() % 300;
        const std::size_t n = 1 + rng() % 400;
        // Skewed distribution so code lengths vary.
        std::geometric_distribution<std::uint32_t> g(0.05 + 0.5 * (trial % 7) / 7.0);
        std::vector<std::uint32_t> s(n);
        for (auto& x : s) x = std::min<std::uint32_t>(g(rng), alphabet - 1);
        const HuffmanStream h = huffman_encode(s, alphabet);
        ASSERT_EQ(huffman_decode(h), s);
        ASSERT_LE(h.table.kraft_sum(), std::uint64_t(1) << kMaxCodeLength);

        io::ByteWriter w;
        write_stream(w, h);
        io::ByteReader r(w.bytes());
        ASSERT_EQ(huffman_decode(read_stream(r, alphabet)), s);
        ASSERT_EQ(r.remaining(), 0u);
    }
}

TEST(Huffman, LengthLimitIsHonoured) {
    // Fibonacci frequencies force a deep tree without a limit.
    std::vector<std::uint64_t> f{1, 1};
    while (f.size() < 40) f.push_back(f[f.size() - 1] + f[f.size() - 2]);
    const HuffmanTable t = build_table(f, 12);
    for (auto l : t.lengths) {
        EXPECT_GE(l, 1);
        EXPECT_LE(l, 12);
    }
    EXPECT_LE(t.kraft_sum(), std::uint64_t(1) << kMaxCodeLength);
}

TEST(Huffman, EmptyAndOutOfAlphabetInputsRejected) {
    EXPECT_THROW(huffman_encode({}, 4), InvalidInput);
    const std::vector<std::uint32_t> s{1, 5};
    EXPECT_THROW(huffman_encode(s, 4), InvalidInput);
}

TEST(Huffman, TruncatedPayloadIsCorrupt) {
    std::vector<std::uint32_t> s(100);
    std::iota(s.begin(), s.end(), 0u);
    HuffmanStream h = huffman_encode(s, 100);
    h.payload.resize(h.payload.size() / 2);
    EXPECT_THROW(huffman_decode(h), CorruptStream);

    io::ByteWriter w;
    write_stream(w, huffman_encode(s, 100));
    auto bytes = w.take();
    bytes.resize(bytes.size() - 3);
    io::ByteReader r(bytes);
    EXPECT_THROW(read_stream(r, 100), CorruptStream);
}

TEST(Huffman, KraftViolationInHeaderIsCorrupt) {
    io::ByteWriter w;
    write_stream(w, huffman_encode(std::vector<std::uint32_t>{0, 1, 2, 2}, 3));
    auto bytes = w.take();
    // All three lengths 1 is not a prefix code.
    bytes[4] = bytes[5] = bytes[6] = 1;
    io::ByteReader r(bytes);
    try {
        read_stream(r, 3);
        FAIL() << "expected CorruptStream";
    } catch (const CorruptStream& e) {
        EXPECT_LE(e.offset(), bytes.size());
    }
}

// ---- R-VQ ----

TEST(Rvq, SingleCodewordIsTheMean) {
    std::mt19937_64 rng(1);
    const auto v = random_vectors(rng, 50, 3);
    RvqConfig cfg;
    cfg.stages = 1;
    cfg.codebook_size = 1;
    const RvqEncoding e = rvq_fit_encode(v, 3, cfg);
    for (int k = 0; k < 3; ++k) {
        double mean = 0.0;
        for (int i = 0; i < 50; ++i) mean += v[3 * i + k];
        mean /= 50;
        EXPECT_NEAR(e.codebook.codeword(0, 0)[k], mean, 1e-6);
    }
}

TEST(Rvq, IdenticalInputsHaveZeroResidual) {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.insert(v.end(), {0.25, -1.5});
    RvqConfig cfg;
    cfg.stages = 3;
    cfg.codebook_size = 4;
    const RvqEncoding e = rvq_fit_encode(v, 2, cfg);
    for (double r : e.residual) EXPECT_EQ(r, 0.0);
}

TEST(Rvq, AssignmentsMatchNearestCentroidOracle) {
    std::mt19937_64 rng(5);
    const auto v = random_vectors(rng, 8, 2);
    RvqConfig cfg;
    cfg.stages = 1;
    cfg.codebook_size = 2;
    const RvqEncoding e = rvq_fit_encode(v, 2, cfg);
    for (int i = 0; i < 8; ++i) {
        const double d0 = dist2(&v[2 * i], e.codebook.codeword(0, 0), 2);
        const double d1 = dist2(&v[2 * i], e.codebook.codeword(0, 1), 2);
        const std::uint32_t want = d1 < d0 ? 1 : 0;
        if (std::abs(d0 - d1) > 1e-9) EXPECT_EQ(e.indices[i], want) << i;
    }
}

TEST(Rvq, ErrorsAreNonIncreasing) {
    std::mt19937_64 rng(9);
    const auto v = random_vectors(rng, 500, 3);
    const RvqEncoding e = rvq_fit_encode(v, 3, RvqConfig{});
    ASSERT_EQ(e.stage_error.size(), 6u);
    for (std::size_t t = 1; t < e.stage_error.size(); ++t) {
        EXPECT_LE(e.stage_error[t], e.stage_error[t - 1] * (1 + 1e-9) + 1e-12);
    }
    for (const auto& lloyd : e.lloyd_error) {
        for (std::size_t k = 1; k < lloyd.size(); ++k) EXPECT_LE(lloyd[k], lloyd[k - 1] * (1 + 1e-9) + 1e-12);
    }
}

TEST(Rvq, DecodeIsInputMinusResidual) {
    std::mt19937_64 rng(13);
    const auto v = random_vectors(rng, 120, 2);
    RvqConfig cfg;
    cfg.stages = 4;
    cfg.codebook_size = 16;
    const RvqEncoding e = rvq_fit_encode(v, 2, cfg);
    const auto rec = rvq_decode(e.codebook, e.indices);
    ASSERT_EQ(rec.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(rec[i], v[i] - e.residual[i]) << i;
}

TEST(Rvq, CodewordsAreF32) {
    std::mt19937_64 rng(17);
    const auto v = random_vectors(rng, 100, 3);
    const RvqEncoding e = rvq_fit_encode(v, 3, RvqConfig{});
    for (double c : e.codebook.codewords) EXPECT_EQ(c, to_f32(c));
}

TEST(Rvq, BadShapesRejected) {
    std::vector<double> v(10 * 3, 0.5);
    RvqConfig cfg;
    cfg.codebook_size = 11;
    EXPECT_THROW(rvq_fit_encode(v, 3, cfg), InvalidInput);
    EXPECT_THROW(rvq_fit_encode(v, 4, RvqConfig{.codebook_size = 2}), InvalidInput);
    v[4] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(rvq_fit_encode(v, 3, RvqConfig{.codebook_size = 2}), InvalidInput);
}

TEST(Rvq, OutOfRangeIndexIsCorrupt) {
    std::mt19937_64 rng(19);
    const auto v = random_vectors(rng, 10, 2);
    RvqConfig cfg;
    cfg.stages = 2;
    cfg.codebook_size = 4;
    RvqEncoding e = rvq_fit_encode(v, 2, cfg);
    e.indices[3] = 4;
    EXPECT_THROW(rvq_decode(e.codebook, e.indices), CorruptStream);
}

// ---- 8-bit quantization ----

TEST(Quantize, MidpointAndEnds) {
    const std::vector<double> v{0.0, 0.5, 1.0};
    const QuantizedArray q = quantize_8bit(v);
    EXPECT_EQ(q.codes, (std::vector<std::uint8_t>{0, 128, 255}));
    std::vector<double> out(3);
    dequantize_8bit(q, out);
    EXPECT_DOUBLE_EQ(out[1], 128.0 / 255.0);
    EXPECT_EQ(out[0], 0.0);
    EXPECT_EQ(out[2], 1.0);
}

TEST(Quantize, FlatArray) {
    const std::vector<double> v(7, -0.375);
    const QuantizedArray q = quantize_8bit(v);
    for (auto c : q.codes) EXPECT_EQ(c, 0);
    std::vector<double> out(7);
    dequantize_8bit(q, out);
    for (double x : out) EXPECT_EQ(x, -0.375);
}

TEST(Quantize, ErrorBoundedByHalfStep) {
    std::mt19937_64 rng(21);
    const auto v = random_vectors(rng, 5000, 1, 2.0);
    const QuantizedArray q = quantize_8bit(v);
    std::vector<double> out(v.size());
    dequantize_8bit(q, out);
    const double step = (q.max - q.min) / 255.0;
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(out[i] - v[i]), 0.5 * step * (1 + 1e-6));
}

TEST(Quantize, NonFiniteRejected) {
    const std::vector<double> v{0.0, std::numeric_limits<double>::infinity()};
    EXPECT_THROW(quantize_8bit(v), InvalidInput);
}

// ---- bundle ----

TEST(Bundle, RoundTripPreservesStructure) {
    const io::Checkpoint ck = small_checkpoint(1);
    const CompressedBundle b = compress_model(ck);
    const io::Checkpoint back = decompress_model(b.bytes);
    EXPECT_EQ(back.iteration, ck.iteration);
    EXPECT_EQ(back.model.gaussians.size(), ck.model.gaussians.size());
    EXPECT_EQ(back.model.radiance.params().size(), ck.model.radiance.params().size());
    EXPECT_TRUE(std::ranges::equal(back.model.geometry_decoder.params(), ck.model.geometry_decoder.params()));
    EXPECT_TRUE(std::ranges::equal(back.model.color_decoder.params(), ck.model.color_decoder.params()));
    ASSERT_EQ(back.cameras.size(), ck.cameras.size());
    for (std::size_t c = 0; c < ck.cameras.size(); ++c) {
        EXPECT_EQ(back.cameras[c].name, ck.cameras[c].name);
        EXPECT_EQ(back.cameras[c].test, ck.cameras[c].test);
    }
    const auto& p0 = ck.model.gaussians.positions.value;
    const auto& p1 = back.model.gaussians.positions.value;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        EXPECT_EQ(p1[i], half_to_float(float_to_half(static_cast<float>(p0[i]))));
    }
}

TEST(Bundle, RendersCloseToOriginal) {
    const io::Checkpoint ck = small_checkpoint(2);
    const io::Checkpoint back = decompress_model(compress_model(ck).bytes);
    for (const auto& rec : ck.cameras) {
        const Image a = render_frame(ck.model, rec.camera).image;
        const Image b = render_frame(back.model, rec.camera).image;
        EXPECT_LT(checks::max_abs_diff(a, b), 0.1);
    }
}

TEST(Bundle, DeterministicAndThreadInvariant) {
    const io::Checkpoint ck = small_checkpoint(3);
    const CompressedBundle a = compress_model(ck);
    const CompressedBundle b = compress_model(ck);
    BundleOptions opts;
    opts.threads = 4;
    const CompressedBundle c = compress_model(ck, opts);
    EXPECT_EQ(a.bytes, b.bytes);
    EXPECT_EQ(a.bytes, c.bytes);
}

TEST(Bundle, SectionsTileTheFile) {
    const CompressedBundle b = compress_model(small_checkpoint(4));
    std::size_t at = 0;
    for (const auto& s : b.sections) {
        EXPECT_EQ(s.offset, at) << s.name;
        at += s.size;
    }
    EXPECT_EQ(at, b.bytes.size());
    EXPECT_THROW(b.section("nope"), InvalidInput);
}

TEST(Bundle, RecompressionStableOutsideAttributes) {
    const io::Checkpoint ck = small_checkpoint(5);
    const CompressedBundle first = compress_model(ck);
    const CompressedBundle second = compress_model(decompress_model(first.bytes));
    for (const char* name : {"header", "positions", "hash", "decoders", "cameras"}) {
        const auto a = first.section_bytes(name);
        const auto b = second.section_bytes(name);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end())) << name;
    }
    // Attributes are refit from reconstructed values, so only the error is bounded.
    const io::Checkpoint again = decompress_model(second.bytes);
    const io::Checkpoint once = decompress_model(first.bytes);
    double worst = 0.0;
    for (std::size_t i = 0; i < once.model.gaussians.colors.value.size(); ++i) {
        worst = std::max(worst, std::abs(once.model.gaussians.colors.value[i] - again.model.gaussians.colors.value[i]));
    }
    EXPECT_LT(worst, 0.5);
}

TEST(Bundle, CorruptionReportsOffsets) {
    const CompressedBundle b = compress_model(small_checkpoint(6));
    auto bad_magic = b.bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decompress_model(bad_magic), CorruptStream);

    auto bad_version = b.bytes;
    bad_version[4] = 2;
    try {
        decompress_model(bad_version);
        FAIL() << "expected CorruptStream";
    } catch (const CorruptStream& e) {
        EXPECT_EQ(e.offset(), 4u);
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }

    for (std::size_t keep : {std::size_t(3), std::size_t(10), b.bytes.size() / 2, b.bytes.size() - 1}) {
        const std::vector<std::uint8_t> cut(b.bytes.begin(), b.bytes.begin() + keep);
        try {
            decompress_model(cut);
            FAIL() << "expected CorruptStream for " << keep << " bytes";
        } catch (const CorruptStream& e) {
            EXPECT_LE(e.offset(), keep);
        }
    }

    auto flipped = b.bytes;
    flipped[b.section("hash").offset + 20] ^= 0x40;
    EXPECT_THROW(decompress_model(flipped), CorruptStream);
}

TEST(Bundle, PositionsOutsideHalfRangeRejected) {
    io::Checkpoint ck = small_checkpoint(7);
    ck.model.gaussians.positions.value[5] = 70000.0;
    EXPECT_THROW(compress_model(ck), InvalidInput);
}

TEST(Bundle, EmptyModelRejected) {
    io::Checkpoint ck = small_checkpoint(8, 0);
    EXPECT_THROW(compress_model(ck), InvalidInput);
}

TEST(Bundle, SmallerThanCheckpoint) {
    const io::Checkpoint ck = small_checkpoint(9, 500);
    const auto raw = io::encode_checkpoint(ck);
    const CompressedBundle b = compress_model(ck);
    EXPECT_LT(b.bytes.size(), raw.size() / 2);
}
