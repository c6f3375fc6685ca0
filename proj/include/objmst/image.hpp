// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "objmst/common.hpp"

namespace objmst {

// H x W x 3 float image in [0,1], the pixel currency of the whole pipeline.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // HWC, RGB

    Image() = default;
    Image(int h, int w, float fill = 0.f)
        : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

    float& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width;
    }

    // All values finite and in [0,1], H,W >= 32.
    void validate(const std::string& context) const;
};

// H x W mask with values exactly {0,1}, paired with an Image of equal shape.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> values;

    Mask() = default;
    Mask(int h, int w, uint8_t fill = 0)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

    uint8_t& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }

    size_t area() const;               // number of 1 pixels
    double area_fraction() const;      // area / (H*W)
    Mask complement() const;
    bool is_binary() const;            // values subset of {0,1}
};

// C x H x W feature tensor (row-major per channel).
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, float fill = 0.f)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    size_t plane() const { return static_cast<size_t>(height) * width; }
};

// ---- pixel ops ----------------------------------------------------------

// Elementwise I * M. Pixels where mask=0 become exactly 0.
Image apply_mask(const Image& image, const Mask& mask);

Image resize_bilinear(const Image& image, int out_h, int out_w);
Mask resize_nearest(const Mask& mask, int out_h, int out_w);

// Aspect-preserving resize to `target` on the short side, then center crop to
// target x target.
Image resize_center_crop(const Image& image, int target);

float max_abs_diff(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);
bool bitwise_equal(const Image& a, const Image& b);

// ---- file I/O (PNG/JPEG in, PNG out) -------------------------------------

Image load_image_raw(const std::filesystem::path& path);
// load + normalize + resize/center-crop to working resolution (0 = keep size)
Image load_image(const std::filesystem::path& path, int working_resolution);
void save_png(const Image& image, const std::filesystem::path& path);

// Single-channel mask file, thresholded at 0.5 on load.
Mask load_mask(const std::filesystem::path& path, int working_resolution = 0);
void save_mask(const Mask& mask, const std::filesystem::path& path);

}  // namespace objmst
