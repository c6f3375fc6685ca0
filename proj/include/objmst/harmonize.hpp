// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "objmst/image.hpp"
#include "objmst/inversion.hpp"
#include "objmst/weights.hpp"

namespace objmst::harmonize {

// Pre-harmonization blend: inside-mask pixels come bitwise from the
// foreground source, outside-mask pixels bitwise from the background source.
struct Composite {
    Image image;
    Mask mask;
    std::string fg_source;
    std::string bg_source;
};

struct CompositeConfig {
    // Default fills the background with the first representation bilinearly
    // resized to the frame; tiling repeats it at native size instead.
    bool tile_bg = false;
};

Composite composite_background(const Image& fg_stylized, const Mask& mask,
                               const std::vector<inversion::StyleRepresentation>& bg_reps,
                               const CompositeConfig& cfg = {});

// Color-statistics harmonization of the foreground into the background:
// a covariance-matching linear map applied at the checkpoint's strength,
// the checkpoint's residual color mix, and a feathered seam. Pure color
// operation; geometry and dimensions never change.
class Harmonizer {
  public:
    explicit Harmonizer(WeightsStore& store);

    Image harmonize(const Composite& composite) const;

    float strength() const { return strength_; }
    int feather_px() const { return feather_px_; }
    const float* color_mix() const { return color_mix_; }  // 3x3 row-major

  private:
    float strength_ = 0.0f;
    int feather_px_ = 0;
    float color_mix_[9] = {0};
};

}  // namespace objmst::harmonize
