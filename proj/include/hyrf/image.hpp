#pragma once

#include <cstddef>
#include <vector>

namespace hyrf {

/// Row-major, channel-interleaved image of doubles.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

    std::size_t index(int x, int y, int c = 0) const {
        return (std::size_t(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    std::size_t pixel_count() const { return std::size_t(width) * height; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

}  // namespace hyrf
