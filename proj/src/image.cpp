// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace objmst {

namespace {

cv::Mat to_cv(const Image& im) {
    cv::Mat m(im.height, im.width, CV_32FC3);
    for (int y = 0; y < im.height; ++y) {
        auto* row = m.ptr<cv::Vec3f>(y);
        for (int x = 0; x < im.width; ++x) {
            // OpenCV is BGR
            row[x] = cv::Vec3f(im.at(y, x, 2), im.at(y, x, 1), im.at(y, x, 0));
        }
    }
    return m;
}

Image from_cv(const cv::Mat& m) {
    Image im(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3f>(y);
        for (int x = 0; x < m.cols; ++x) {
            im.at(y, x, 0) = row[x][2];
            im.at(y, x, 1) = row[x][1];
            im.at(y, x, 2) = row[x][0];
        }
    }
    return im;
}

}  // namespace

void Image::validate(const std::string& context) const {
    require(height >= 32 && width >= 32, ErrorKind::ImageTooSmall,
            context + ": image must be at least 32x32, got " +
                std::to_string(height) + "x" + std::to_string(width));
    for (float v : data) {
        require(std::isfinite(v) && v >= 0.f && v <= 1.f, ErrorKind::CorruptImage,
                context + ": pixel value outside [0,1]");
    }
}

size_t Mask::area() const {
    size_t n = 0;
    for (uint8_t v : values) n += v;
    return n;
}

double Mask::area_fraction() const {
    if (values.empty()) return 0.0;
    return static_cast<double>(area()) / static_cast<double>(values.size());
}

Mask Mask::complement() const {
    Mask out(height, width);
    for (size_t i = 0; i < values.size(); ++i) out.values[i] = values[i] ? 0 : 1;
    return out;
}

bool Mask::is_binary() const {
    return std::all_of(values.begin(), values.end(),
                       [](uint8_t v) { return v == 0 || v == 1; });
}

Image apply_mask(const Image& image, const Mask& mask) {
    require(image.height == mask.height && image.width == mask.width,
            ErrorKind::DimensionMismatch,
            "apply_mask: image " + std::to_string(image.height) + "x" +
                std::to_string(image.width) + " vs mask " +
                std::to_string(mask.height) + "x" + std::to_string(mask.width));
    Image out(image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            if (mask.at(y, x)) {
                out.at(y, x, 0) = image.at(y, x, 0);
                out.at(y, x, 1) = image.at(y, x, 1);
                out.at(y, x, 2) = image.at(y, x, 2);
            }
        }
    return out;
}

Image resize_bilinear(const Image& image, int out_h, int out_w) {
    if (out_h == image.height && out_w == image.width) return image;
    cv::Mat src = to_cv(image), dst;
    cv::resize(src, dst, cv::Size(out_w, out_h), 0, 0, cv::INTER_LINEAR);
    Image out = from_cv(dst);
    for (float& v : out.data) v = std::clamp(v, 0.f, 1.f);
    return out;
}

Mask resize_nearest(const Mask& mask, int out_h, int out_w) {
    if (out_h == mask.height && out_w == mask.width) return mask;
    cv::Mat src(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) src.at<uint8_t>(y, x) = mask.at(y, x);
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(out_w, out_h), 0, 0, cv::INTER_NEAREST);
    Mask out(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) out.at(y, x) = dst.at<uint8_t>(y, x) ? 1 : 0;
    return out;
}

Image resize_center_crop(const Image& image, int target) {
    double scale = static_cast<double>(target) /
                   static_cast<double>(std::min(image.height, image.width));
    int nh = std::max(target, static_cast<int>(std::lround(image.height * scale)));
    int nw = std::max(target, static_cast<int>(std::lround(image.width * scale)));
    Image scaled = resize_bilinear(image, nh, nw);
    int oy = (nh - target) / 2;
    int ox = (nw - target) / 2;
    Image out(target, target);
    for (int y = 0; y < target; ++y)
        for (int x = 0; x < target; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = scaled.at(oy + y, ox + x, c);
    return out;
}

float max_abs_diff(const Image& a, const Image& b) {
    require(a.same_shape(b), ErrorKind::DimensionMismatch, "max_abs_diff");
    float m = 0.f;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double mse(const Image& a, const Image& b) {
    require(a.same_shape(b), ErrorKind::DimensionMismatch, "mse");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

bool bitwise_equal(const Image& a, const Image& b) {
    return a.height == b.height && a.width == b.width && a.data == b.data;
}

Image load_image_raw(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorKind::FileNotFound, path.string());
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    require(ext == ".png" || ext == ".jpg" || ext == ".jpeg",
            ErrorKind::UnsupportedFormat, path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    require(!m.empty(), ErrorKind::CorruptImage, "failed to decode " + path.string());
    // Manual BGR u8 -> RGB float conversion so k maps to exactly k/255.0f and
    // an 8-bit save/load round trip is bitwise stable.
    Image img(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x) {
            img.at(y, x, 0) = static_cast<float>(row[x][2]) / 255.0f;
            img.at(y, x, 1) = static_cast<float>(row[x][1]) / 255.0f;
            img.at(y, x, 2) = static_cast<float>(row[x][0]) / 255.0f;
        }
    }
    return img;
}

Image load_image(const std::filesystem::path& path, int working_resolution) {
    Image im = load_image_raw(path);
    require(im.height >= 32 && im.width >= 32, ErrorKind::ImageTooSmall,
            path.string() + " is " + std::to_string(im.width) + "x" +
                std::to_string(im.height) + ", need at least 32x32");
    if (working_resolution > 0 &&
        (im.height != working_resolution || im.width != working_resolution)) {
        im = resize_center_crop(im, working_resolution);
    }
    for (float& v : im.data) v = std::clamp(v, 0.f, 1.f);
    im.validate("load_image(" + path.string() + ")");
    return im;
}

void save_png(const Image& image, const std::filesystem::path& path) {
    cv::Mat f = to_cv(image), u8;
    f.convertTo(u8, CV_8UC3, 255.0);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    bool ok = cv::imwrite(path.string(), u8);
    require(ok, ErrorKind::StageFailed, "failed to write " + path.string());
}

Mask load_mask(const std::filesystem::path& path, int working_resolution) {
    require(std::filesystem::exists(path), ErrorKind::FileNotFound, path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    require(!m.empty(), ErrorKind::CorruptImage, "failed to decode " + path.string());
    Mask mask(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            mask.at(y, x) = m.at<uint8_t>(y, x) >= 128 ? 1 : 0;  // 0.5 threshold
    if (working_resolution > 0 &&
        (mask.height != working_resolution || mask.width != working_resolution)) {
        // mirror the image path: short side to target, then center crop
        int target = working_resolution;
        double scale = static_cast<double>(target) /
                       static_cast<double>(std::min(mask.height, mask.width));
        int nh = std::max(target, static_cast<int>(std::lround(mask.height * scale)));
        int nw = std::max(target, static_cast<int>(std::lround(mask.width * scale)));
        Mask scaled = resize_nearest(mask, nh, nw);
        int oy = (nh - target) / 2, ox = (nw - target) / 2;
        Mask out(target, target);
        for (int y = 0; y < target; ++y)
            for (int x = 0; x < target; ++x) out.at(y, x) = scaled.at(oy + y, ox + x);
        mask = out;
    }
    return mask;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) m.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    bool ok = cv::imwrite(path.string(), m);
    require(ok, ErrorKind::StageFailed, "failed to write " + path.string());
}

}  // namespace objmst
