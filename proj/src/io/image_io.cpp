#include "hyrf/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <regex>
#include <vector>

#include <png.h>

#include "hyrf/error.hpp"
#include "hyrf/io/binary.hpp"

namespace hyrf::io {

namespace {

void check_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        throw DataError("output directory '" + parent.string() + "' does not exist");
    }
}

}  // namespace

Image read_png(const std::string& path) {
    png_image pi;
    std::memset(&pi, 0, sizeof(pi));
    pi.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&pi, path.c_str())) {
        throw DataError("cannot read PNG '" + path + "': " + pi.message);
    }
    pi.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(pi));
    if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = pi.message;
        png_image_free(&pi);
        throw DataError("cannot decode PNG '" + path + "': " + msg);
    }
    Image img(static_cast<int>(pi.width), static_cast<int>(pi.height), 3);
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
    return img;
}

void write_png(const std::string& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw InvalidInput("write_png: need 1 or 3 channels");
    if (img.width <= 0 || img.height <= 0) throw InvalidInput("write_png: empty image");
    check_parent(path);
    std::vector<png_byte> buf(img.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        const double v = std::isfinite(img.data[i]) ? std::clamp(img.data[i], 0.0, 1.0) : 0.0;
        buf[i] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_image pi;
    std::memset(&pi, 0, sizeof(pi));
    pi.version = PNG_IMAGE_VERSION;
    pi.width = static_cast<png_uint_32>(img.width);
    pi.height = static_cast<png_uint_32>(img.height);
    pi.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&pi, path.c_str(), 0, buf.data(), 0, nullptr)) {
        throw DataError("cannot write PNG '" + path + "': " + pi.message);
    }
}

Image read_npy(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    static const std::uint8_t magic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
    if (bytes.size() < 10 || std::memcmp(bytes.data(), magic, 6) != 0) {
        throw DataError("'" + path + "' is not an .npy file");
    }
    const int major = bytes[6];
    std::size_t header_len, start;
    if (major == 1) {
        header_len = bytes[8] | (std::size_t(bytes[9]) << 8);
        start = 10;
    } else {
        if (bytes.size() < 12) throw DataError("'" + path + "': truncated header");
        header_len = bytes[8] | (std::size_t(bytes[9]) << 8) | (std::size_t(bytes[10]) << 16) |
                     (std::size_t(bytes[11]) << 24);
        start = 12;
    }
    if (start + header_len > bytes.size()) throw DataError("'" + path + "': truncated header");
    const std::string header(bytes.begin() + start, bytes.begin() + start + header_len);

    std::smatch m;
    if (!std::regex_search(header, m, std::regex("'descr':\\s*'([<|=]?)([fi])(\\d)'"))) {
        throw DataError("'" + path + "': missing dtype");
    }
    const char kind = m[2].str()[0];
    const int width = std::stoi(m[3].str());
    if (kind != 'f' || (width != 4 && width != 8)) {
        throw DataError("'" + path + "': only float32/float64 arrays are supported");
    }
    if (std::regex_search(header, std::regex("'fortran_order':\\s*True"))) {
        throw DataError("'" + path + "': Fortran-ordered arrays are not supported");
    }
    if (!std::regex_search(header, m, std::regex("'shape':\\s*\\(([^)]*)\\)"))) {
        throw DataError("'" + path + "': missing shape");
    }
    std::vector<int> shape;
    const std::string dims = m[1].str();
    const std::regex digits("\\d+");
    for (std::sregex_iterator it(dims.begin(), dims.end(), digits), end; it != end; ++it) {
        shape.push_back(std::stoi(it->str()));
    }
    if (shape.size() != 2 && shape.size() != 3) {
        throw DataError("'" + path + "': expected a (H, W) or (H, W, C) array");
    }
    Image img(shape[1], shape[0], shape.size() == 3 ? shape[2] : 1);
    const std::size_t data_at = start + header_len;
    if (bytes.size() - data_at != img.data.size() * width) {
        throw DataError("'" + path + "': payload size does not match the shape");
    }
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (width == 8) {
            double v;
            std::memcpy(&v, bytes.data() + data_at + 8 * i, 8);
            img.data[i] = v;
        } else {
            float v;
            std::memcpy(&v, bytes.data() + data_at + 4 * i, 4);
            img.data[i] = v;
        }
    }
    return img;
}

void write_npy(const std::string& path, const Image& img, bool float64) {
    std::string header = "{'descr': '" + std::string(float64 ? "<f8" : "<f4") +
                         "', 'fortran_order': False, 'shape': (" + std::to_string(img.height) +
                         ", " + std::to_string(img.width) +
                         (img.channels == 1 ? "" : ", " + std::to_string(img.channels)) + "), }";
    // Pad so the payload starts on a 64-byte boundary.
    const std::size_t total = 10 + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');
    ByteWriter w;
    for (int c : {0x93, int('N'), int('U'), int('M'), int('P'), int('Y')}) w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
    w.put<std::uint8_t>(1);
    w.put<std::uint8_t>(0);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(header.size()));
    w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(header.data()), header.size()));
    for (double v : img.data) {
        if (float64) {
            w.put<double>(v);
        } else {
            w.put<float>(static_cast<float>(v));
        }
    }
    write_file(path, w.bytes());
}

Image read_image(const std::string& path) {
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".npy") return read_npy(path);
    if (ext == ".png" || ext == ".PNG") return read_png(path);
    throw DataError("unsupported image format '" + path + "' (expected .png or .npy)");
}

}  // namespace hyrf::io
