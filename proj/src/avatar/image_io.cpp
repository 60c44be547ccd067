#include "avatar/image_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

namespace avatar {

namespace {

uint8_t to_u8(double v) {
    return static_cast<uint8_t>(std::lround(std::min(1.0, std::max(0.0, v)) * 255.0));
}

cv::Mat require_load(const std::string& path, int flags) {
    cv::Mat m = cv::imread(path, flags);
    if (m.empty()) throw std::runtime_error("cannot load image: " + path);
    return m;
}

}  // namespace

void save_png(const ColorImage& img, const std::string& path) {
    cv::Mat m(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Vec3& c = img.at(x, y);
            m.at<cv::Vec3b>(y, x) = {to_u8(c.z()), to_u8(c.y()), to_u8(c.x())};  // BGR
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

void save_png(const MaskImage& mask, const std::string& path) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) m.at<uint8_t>(y, x) = mask.at(x, y) ? 255 : 0;
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

void save_normal_png(const NormalImage& normals, const std::string& path) {
    cv::Mat m(normals.height(), normals.width(), CV_8UC3);
    for (int y = 0; y < normals.height(); ++y)
        for (int x = 0; x < normals.width(); ++x) {
            const Vec3 enc = (normals.at(x, y) + Vec3::Ones()) * 0.5;
            m.at<cv::Vec3b>(y, x) = {to_u8(enc.z()), to_u8(enc.y()), to_u8(enc.x())};
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

ColorImage load_png(const std::string& path) {
    cv::Mat m = require_load(path, cv::IMREAD_COLOR);
    ColorImage img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const cv::Vec3b& c = m.at<cv::Vec3b>(y, x);
            img.at(x, y) = Vec3(c[2], c[1], c[0]) / 255.0;
        }
    return img;
}

MaskImage load_mask_png(const std::string& path) {
    cv::Mat m = require_load(path, cv::IMREAD_GRAYSCALE);
    MaskImage mask(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) mask.at(x, y) = m.at<uint8_t>(y, x) >= 128 ? 1 : 0;
    return mask;
}

NormalImage load_normal_png(const std::string& path) {
    cv::Mat m = require_load(path, cv::IMREAD_COLOR);
    NormalImage normals(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const cv::Vec3b& c = m.at<cv::Vec3b>(y, x);
            Vec3 n = Vec3(c[2], c[1], c[0]) / 255.0 * 2.0 - Vec3::Ones();
            // re-unitize or keep the zero sentinel
            const double len = n.norm();
            normals.at(x, y) = len > 0.5 ? Vec3(n / len) : Vec3::Zero();
        }
    return normals;
}

void save_float_plane(const ScalarImage& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("FPLN", 4);
    const int32_t dims[3] = {img.width(), img.height(), 1};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (double v : img.data()) {
        const float f = static_cast<float>(v);
        os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

ScalarImage load_float_plane(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "FPLN", 4) != 0)
        throw std::runtime_error("bad magic in float plane: " + path);
    int32_t dims[3];
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (dims[2] != 1) throw std::runtime_error("unsupported channel count in: " + path);
    ScalarImage img(dims[0], dims[1]);
    for (auto& v : img.data()) {
        float f;
        is.read(reinterpret_cast<char*>(&f), sizeof(f));
        v = f;
    }
    if (!is) throw std::runtime_error("truncated float plane: " + path);
    return img;
}

}  // namespace avatar
