#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyrf/decoder.hpp"
#include "hyrf/error.hpp"
#include "hyrf/hash_field.hpp"
#include "oracles.hpp"

using namespace hyrf;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST(DecoderNet, LayoutAndInit) {
    const DecoderNet net({32, 64, 64, 8}, 1);
    EXPECT_EQ(net.n_layers(), 3);
    EXPECT_EQ(net.params().size(), std::size_t(32 * 64 + 64 + 64 * 64 + 64 + 64 * 8 + 8));
    EXPECT_EQ(net.bias_offset(0), std::size_t(32 * 64));
    EXPECT_EQ(net.weight_offset(1), std::size_t(32 * 64 + 64));
    for (int l = 0; l < net.n_layers(); ++l) {
        const double bound = std::sqrt(1.0 / net.dims()[l]);
        for (std::size_t i = net.weight_offset(l); i < net.bias_offset(l); ++i) {
            EXPECT_LE(std::abs(net.params()[i]), bound);
        }
        for (int j = 0; j < net.dims()[l + 1]; ++j) EXPECT_EQ(net.params()[net.bias_offset(l) + j], 0.0);
    }
}

TEST(DecoderNet, BadDimsRejected) {
    EXPECT_THROW(DecoderNet({4}, 1), InvalidInput);
    EXPECT_THROW(DecoderNet({4, 0, 3}, 1), InvalidInput);
}

TEST(DecoderNet, InputLengthMismatch) {
    const DecoderNet net({4, 8, 3}, 1);
    std::vector<double> in(5), out(3);
    EXPECT_THROW(net.forward(in, out), InvalidInput);
}

TEST(DecodeGeometry, ZeroNetGivesZero) {
    DecoderNet net({32, 64, 64, 8}, 1);
    for (double& p : net.params()) p = 0.0;
    std::mt19937_64 rng(1);
    const auto f = random_vec(32, rng);
    const RawGeometry g = decode_geometry(f, net);
    EXPECT_EQ(g.opacity, 0.0);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(g.scale[k], 0.0);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(g.rotation[k], 0.0);
}

TEST(DecodeGeometry, SinglePathRoutesPositiveInput) {
    DecoderNet net({4, 3, 3, 8}, 1);
    for (double& p : net.params()) p = 0.0;
    // input[2] -> hidden0[1] -> hidden1[0] -> output 5
    net.params()[net.weight_offset(0) + 1 * 4 + 2] = 1.0;
    net.params()[net.weight_offset(1) + 0 * 3 + 1] = 1.0;
    net.params()[net.weight_offset(2) + 5 * 3 + 0] = 1.0;
    const std::vector<double> f{-3.0, 9.0, 0.75, 2.0};
    const RawGeometry g = decode_geometry(f, net);
    EXPECT_EQ(g.rotation[1], 0.75);
    EXPECT_EQ(g.opacity, 0.0);
}

TEST(DecodeGeometry, WrongOutputWidthRejected) {
    const DecoderNet net({4, 8, 3}, 1);
    std::vector<double> f(4);
    EXPECT_THROW(decode_geometry(f, net), InvalidInput);
}

TEST(DecodeGeometry, MatchesDenseOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const DecoderNet net({32, 64, 64, 8}, trial);
        const auto f = random_vec(32, rng);
        const RawGeometry g = decode_geometry(f, net);
        const auto ref = oracle::mlp(net.dims(), net.params(), f);
        EXPECT_NEAR(g.opacity, ref[0], 1e-12);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(g.scale[k], ref[1 + k], 1e-12);
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(g.rotation[k], ref[4 + k], 1e-12);
    }
}

TEST(DecodeColor, MatchesDenseOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const DecoderNet net({32 + direction_encoding_dim(4), 64, 64, 3}, trial);
        const auto f = random_vec(32, rng);
        const auto d = encode_direction(Eigen::Vector3d::Random(), {3, 3, 3}, 4);
        const RawColor c = decode_color(f, d, net);
        std::vector<double> in = f;
        in.insert(in.end(), d.begin(), d.end());
        const auto ref = oracle::mlp(net.dims(), net.params(), in);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(c.color[k], ref[k], 1e-12);
    }
}

TEST(DecodeColor, ZeroNetGivesZero) {
    DecoderNet net({32 + 27, 64, 64, 3}, 1);
    for (double& p : net.params()) p = 0.0;
    std::vector<double> f(32, 0.3), d(27, 0.5);
    const RawColor c = decode_color(f, d, net);
    for (double v : c.color) EXPECT_EQ(v, 0.0);
}

TEST(DecodeColor, DirectionBlindNetIsViewIndependent) {
    DecoderNet net({32 + 27, 64, 64, 3}, 4);
    for (int j = 0; j < 64; ++j)
        for (int i = 32; i < 59; ++i) net.params()[net.weight_offset(0) + j * 59 + i] = 0.0;
    std::mt19937_64 rng(5);
    const auto f = random_vec(32, rng);
    const RawColor ref = decode_color(f, encode_direction({0, 0, 0}, {1, 0, 0}, 4), net);
    for (int t = 0; t < 10; ++t) {
        const auto dir = random_vec(3, rng);
        const auto d = encode_direction({0, 0, 0}, {dir[0], dir[1], dir[2]}, 4);
        const RawColor c = decode_color(f, d, net);
        for (int k = 0; k < 3; ++k) EXPECT_EQ(c.color[k], ref.color[k]);
    }
}

TEST(DecodeColor, LengthMismatchRejected) {
    const DecoderNet net({32 + 27, 64, 64, 3}, 1);
    std::vector<double> f(32), d(26);
    EXPECT_THROW(decode_color(f, d, net), InvalidInput);
}

TEST(DecoderNet, DeadZoneGivesOutputBias) {
    DecoderNet net({6, 16, 16, 4}, 6);
    std::mt19937_64 rng(6);
    // Every first-layer unit gets a large negative bias.
    for (int j = 0; j < 16; ++j) net.params()[net.bias_offset(0) + j] = -1e3;
    for (int k = 0; k < 4; ++k) net.params()[net.bias_offset(2) + k] = 0.1 * (k + 1);
    std::vector<double> out(4);
    net.forward(random_vec(6, rng), out);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(out[k], net.params()[net.bias_offset(2) + k]);
}

TEST(DecoderBackward, ZeroUpstream) {
    DecoderNet net({5, 7, 7, 3}, 1);
    std::mt19937_64 rng(7);
    DecoderCache cache;
    std::vector<double> out(3), up(3, 0.0), gin(5, 1.0);
    net.forward(random_vec(5, rng), out, &cache);
    net.backward(cache, up, gin);
    for (double g : net.grads()) EXPECT_EQ(g, 0.0);
    for (double g : gin) EXPECT_EQ(g, 0.0);
}

TEST(DecoderBackward, SingleNeuronLinear) {
    DecoderNet net({1, 1}, 1);
    net.params()[0] = 0.7;
    net.params()[1] = 0.2;
    DecoderCache cache;
    std::vector<double> in{1.3}, out(1), up{1.0}, gin(1);
    net.forward(in, out, &cache);
    EXPECT_DOUBLE_EQ(out[0], 0.7 * 1.3 + 0.2);
    net.backward(cache, up, gin);
    EXPECT_DOUBLE_EQ(net.grads()[0], 1.3);
    EXPECT_DOUBLE_EQ(net.grads()[1], 1.0);
    EXPECT_DOUBLE_EQ(gin[0], 0.7);
}

TEST(DecoderBackward, MissingCacheIsContractViolation) {
    DecoderNet net({3, 4, 2}, 1);
    DecoderCache cache;
    std::vector<double> up(2), gin(3);
    EXPECT_THROW(net.backward(cache, up, gin), ContractViolation);
}

TEST(DecoderBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        DecoderNet net({6, 12, 12, 4}, 100 + trial);
        for (double& b : net.params()) b += 0.05 * random_vec(1, rng)[0];
        std::vector<double> in = random_vec(6, rng);
        const std::vector<double> up = random_vec(4, rng);
        auto loss = [&] {
            std::vector<double> out(4);
            net.forward(in, out);
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += up[k] * out[k];
            return s;
        };
        DecoderCache cache;
        std::vector<double> out(4), gin(6);
        net.forward(in, out, &cache);
        net.zero_grad();
        net.backward(cache, up, gin);
        const std::vector<double> grads(net.grads().begin(), net.grads().end());
        for (std::size_t i = 0; i < grads.size(); ++i) {
            const double fd = oracle::central_difference(loss, net.params()[i], 1e-4);
            worst = std::max(worst, oracle::rel_error(grads[i], fd, 1e-6));
        }
        for (int k = 0; k < 6; ++k) {
            worst = std::max(worst, oracle::rel_error(gin[k], oracle::central_difference(loss, in[k], 1e-4), 1e-6));
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(DecoderBackward, AccumulatesAcrossCalls) {
    DecoderNet net({3, 5, 2}, 2);
    std::mt19937_64 rng(9);
    const auto in = random_vec(3, rng);
    DecoderCache cache;
    std::vector<double> out(2), up{0.5, -1.0}, gin;
    net.forward(in, out, &cache);
    net.backward(cache, up, gin);
    const std::vector<double> once(net.grads().begin(), net.grads().end());
    net.backward(cache, up, gin);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(net.grads()[i], 2 * once[i]);
}
