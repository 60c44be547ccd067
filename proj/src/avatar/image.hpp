#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "avatar/math.hpp"

namespace avatar {

template <typename T>
class ImagePlane {
public:
    ImagePlane() = default;
    ImagePlane(int width, int height, const T& fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    size_t size() const { return data_.size(); }

    T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
    bool contains(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_size(const ImagePlane& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ColorImage = ImagePlane<Vec3>;
using ScalarImage = ImagePlane<double>;
using NormalImage = ImagePlane<Vec3>;
using MaskImage = ImagePlane<uint8_t>;

inline void require_same_size(const ColorImage& a, const ColorImage& b, const char* what) {
    if (!a.same_size(b)) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace avatar
