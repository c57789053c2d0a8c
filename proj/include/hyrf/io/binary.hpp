#pragma once

// Little-endian byte buffers with offset-aware reads.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "hyrf/error.hpp"

namespace hyrf::io {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

class ByteWriter {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    /// Values narrowed to 32-bit floats.
    void put_f32_array(std::span<const double> v) {
        for (double x : v) put<float>(static_cast<float>(x));
    }
    std::size_t size() const { return buf_.size(); }
    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        require(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        require(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::string get_string(std::size_t max_len = 1 << 20) {
        const std::size_t at = pos_;
        const auto n = get<std::uint32_t>();
        if (n > max_len) throw CorruptStream("string length " + std::to_string(n) + " is implausible", at);
        auto b = get_bytes(n);
        return std::string(b.begin(), b.end());
    }
    void get_f32_array(std::span<double> out) {
        require(out.size() * sizeof(float));
        for (double& x : out) x = get<float>();
    }
    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

    [[noreturn]] void fail(const std::string& what) const { throw CorruptStream(what, pos_); }

private:
    void require(std::size_t n) const {
        if (n > data_.size() - pos_) {
            throw CorruptStream("unexpected end of stream (need " + std::to_string(n) + " bytes, " +
                                    std::to_string(data_.size() - pos_) + " left)",
                                pos_);
        }
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// 32-bit FNV-1a, used as a whole-file integrity check.
inline std::uint32_t fnv1a(std::span<const std::uint8_t> b) {
    std::uint32_t h = 2166136261u;
    for (std::uint8_t c : b) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace hyrf::io
