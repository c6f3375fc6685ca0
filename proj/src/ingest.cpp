// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/ingest.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "objmst/common.hpp"
#include "objmst/rng.hpp"

namespace objmst::ingest {

namespace {

// Homography sending the unit square (0,0),(1,0),(1,1),(0,1) to the quad
// q[0..3] (TL, TR, BR, BL), solved by direct linear transform with h33 = 1.
void unit_square_to_quad(const double q[4][2], double h[9]) {
    Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> b;
    const double src[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    for (int i = 0; i < 4; ++i) {
        const double u = src[i][0], v = src[i][1];
        const double x = q[i][0], y = q[i][1];
        a(2 * i, 0) = u; a(2 * i, 1) = v; a(2 * i, 2) = 1;
        a(2 * i, 6) = -u * x; a(2 * i, 7) = -v * x;
        b(2 * i) = x;
        a(2 * i + 1, 3) = u; a(2 * i + 1, 4) = v; a(2 * i + 1, 5) = 1;
        a(2 * i + 1, 6) = -u * y; a(2 * i + 1, 7) = -v * y;
        b(2 * i + 1) = y;
    }
    const Eigen::Matrix<double, 8, 1> sol = a.fullPivLu().solve(b);
    for (int i = 0; i < 8; ++i) h[i] = sol(i);
    h[8] = 1.0;
}

struct SampleCoord {
    int x0, y0, x1, y1;
    double wx, wy;  // weight of the (x1, y1) side
};

inline SampleCoord project(const PatchGeometry& g, int patch_size, int px, int py) {
    const double denom = patch_size > 1 ? patch_size - 1.0 : 1.0;
    const double u = px / denom, v = py / denom;
    const double w = g.h[6] * u + g.h[7] * v + g.h[8];
    const double x = (g.h[0] * u + g.h[1] * v + g.h[2]) / w;
    const double y = (g.h[3] * u + g.h[4] * v + g.h[5]) / w;
    const double xc = std::clamp(x, 0.0, g.src_w - 1.0);
    const double yc = std::clamp(y, 0.0, g.src_h - 1.0);
    SampleCoord s;
    s.x0 = static_cast<int>(xc);
    s.y0 = static_cast<int>(yc);
    s.x1 = std::min(s.x0 + 1, g.src_w - 1);
    s.y1 = std::min(s.y0 + 1, g.src_h - 1);
    s.wx = xc - s.x0;
    s.wy = yc - s.y0;
    return s;
}

}  // namespace

PatchGeometry full_frame_geometry(const Image& src) {
    PatchGeometry g;
    const double q[4][2] = {{0.0, 0.0},
                            {src.width - 1.0, 0.0},
                            {src.width - 1.0, src.height - 1.0},
                            {0.0, src.height - 1.0}};
    unit_square_to_quad(q, g.h);
    g.src_h = src.height;
    g.src_w = src.width;
    return g;
}

Image sample_patch(const Image& src, const PatchGeometry& g, int patch_size) {
    Image out(patch_size, patch_size);
    for (int py = 0; py < patch_size; ++py)
        for (int px = 0; px < patch_size; ++px) {
            const SampleCoord s = project(g, patch_size, px, py);
            for (int c = 0; c < 3; ++c) {
                const double v00 = src.at(s.y0, s.x0, c), v01 = src.at(s.y0, s.x1, c);
                const double v10 = src.at(s.y1, s.x0, c), v11 = src.at(s.y1, s.x1, c);
                out.at(py, px, c) = static_cast<float>(
                    (1 - s.wy) * ((1 - s.wx) * v00 + s.wx * v01) +
                    s.wy * ((1 - s.wx) * v10 + s.wx * v11));
            }
        }
    return out;
}

void sample_patch_backward(const PatchGeometry& g, int patch_size,
                           const std::vector<float>& grad_patch, int src_h, int src_w,
                           std::vector<float>& grad_src) {
    require(static_cast<int>(grad_patch.size()) == patch_size * patch_size * 3,
            ErrorKind::SizeMismatch, "grad_patch shape mismatch");
    require(static_cast<int>(grad_src.size()) == src_h * src_w * 3, ErrorKind::SizeMismatch,
            "grad_src shape mismatch");
    PatchGeometry gg = g;
    gg.src_h = src_h;
    gg.src_w = src_w;
    auto at = [&](int y, int x, int c) -> float& {
        return grad_src[(static_cast<size_t>(y) * src_w + x) * 3 + c];
    };
    for (int py = 0; py < patch_size; ++py)
        for (int px = 0; px < patch_size; ++px) {
            const SampleCoord s = project(gg, patch_size, px, py);
            for (int c = 0; c < 3; ++c) {
                const double gp =
                    grad_patch[(static_cast<size_t>(py) * patch_size + px) * 3 + c];
                at(s.y0, s.x0, c) += static_cast<float>(gp * (1 - s.wy) * (1 - s.wx));
                at(s.y0, s.x1, c) += static_cast<float>(gp * (1 - s.wy) * s.wx);
                at(s.y1, s.x0, c) += static_cast<float>(gp * s.wy * (1 - s.wx));
                at(s.y1, s.x1, c) += static_cast<float>(gp * s.wy * s.wx);
            }
        }
}

PatchSet sample_patches(const Image& img, int n_crop, uint64_t seed,
                        const AugmentConfig& cfg, const std::string& source_id,
                        const char* stream_tag) {
    require(n_crop >= 1, ErrorKind::InvalidJobSpec, "n_crop must be >= 1");
    require(img.height >= cfg.patch_size / 2 && img.width >= cfg.patch_size / 2,
            ErrorKind::ImageTooSmall, "image too small for patch sampling");

    PatchSet set;
    set.source_id = source_id;
    set.seed = seed;
    const int min_side = std::min(img.height, img.width);
    for (int j = 0; j < n_crop; ++j) {
        Rng rng(derive_seed(seed, stream_tag, static_cast<uint64_t>(j)));
        const double scale = rng.uniform(cfg.min_scale, cfg.max_scale);
        int side = static_cast<int>(std::lround(scale * min_side));
        side = std::clamp(side, 8, min_side);
        const int x0 = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(img.width - side + 1)));
        const int y0 = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(img.height - side + 1)));

        double q[4][2] = {{double(x0), double(y0)},
                          {double(x0 + side - 1), double(y0)},
                          {double(x0 + side - 1), double(y0 + side - 1)},
                          {double(x0), double(y0 + side - 1)}};
        for (auto& corner : q) {
            corner[0] += rng.uniform(-cfg.jitter, cfg.jitter) * side;
            corner[1] += rng.uniform(-cfg.jitter, cfg.jitter) * side;
        }

        PatchGeometry g;
        unit_square_to_quad(q, g.h);
        g.src_h = img.height;
        g.src_w = img.width;
        set.geoms.push_back(g);
        set.patches.push_back(sample_patch(img, g, cfg.patch_size));
    }
    return set;
}

std::pair<PatchSet, PatchSet> crop_and_augment(const Image& a, const Image& b, int n_crop,
                                               uint64_t seed, const AugmentConfig& cfg) {
    return {sample_patches(a, n_crop, seed, cfg, "a", "aug-a"),
            sample_patches(b, n_crop, seed, cfg, "b", "aug-b")};
}

}  // namespace objmst::ingest
