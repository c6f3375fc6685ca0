// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "objmst/image.hpp"

namespace objmst {

// 77-dim differentiable image statistics vector shared by the image encoder
// and the perceptual metrics. Layout:
//   [0,3)    mean RGB
//   [3,6)    std RGB
//   [6,30)   soft palette histogram over 24 reference colors
//   [30,46)  directional gradient energy, offsets {1,2,4,8} x 4 directions
//   [46,58)  2x2 region RGB means
//   [58,62)  2x2 region gradient energy at offset 2
//   [62,65)  center-minus-border RGB contrast
//   [65,68)  row-profile slope per channel
//   [68,71)  column-profile slope per channel
//   [71,74)  luminance mean / std / skewness
//   [74,77)  mean absolute Laplacian per channel
inline constexpr int kStatsDim = 77;
inline constexpr int kPaletteBins = 24;

// `palette` is kPaletteBins x 3 RGB rows. Image must be at least 18x18 so
// every offset has support.
std::vector<float> image_stats(const Image& img, const std::vector<float>& palette);

// Accumulates d(stats . grad_stats)/d(pixel) into grad_pixels (same layout as
// img.data; caller zeroes it). Recomputes forward intermediates internally.
void image_stats_backward(const Image& img, const std::vector<float>& palette,
                          const float* grad_stats, std::vector<float>& grad_pixels);

// Bounded compression applied to z-scored statistics by every stats consumer
// (encoder and metric heads): keeps outlier stats from dominating a model.
inline double squash_z(double z) { return 3.0 * std::tanh(z / 3.0); }
inline double squash_z_deriv(double z) {
    const double t = std::tanh(z / 3.0);
    return 1.0 - t * t;
}

}  // namespace objmst
