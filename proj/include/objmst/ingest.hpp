// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "objmst/image.hpp"
#include "objmst/weights.hpp"

namespace objmst::ingest {

struct AugmentConfig {
    int patch_size = 128;
    float min_scale = 0.35f;   // crop side as a fraction of min(H, W)
    float max_scale = 0.95f;
    float jitter = 0.06f;      // perspective corner jitter as a fraction of the crop side
};

// Perspective map from patch coordinates to source pixels. h maps normalized
// patch coords (u,v,1), u=x/(P-1), to homogeneous source coords.
struct PatchGeometry {
    double h[9];
    int src_h = 0, src_w = 0;
};

struct PatchSet {
    std::vector<Image> patches;
    std::vector<PatchGeometry> geoms;
    std::string source_id;
    uint64_t seed = 0;
};

// Draw order per patch j, from Rng(derive_seed(seed, tag, j)):
//   1. crop scale  ~ U[min_scale, max_scale]
//   2. origin x    ~ U_int[0, W - side]
//   3. origin y    ~ U_int[0, H - side]
//   4. corner jitter dx,dy for TL, TR, BR, BL ~ U[-jitter, jitter] * side
// Changing this order is a breaking change for every pinned seed.
PatchSet sample_patches(const Image& img, int n_crop, uint64_t seed,
                        const AugmentConfig& cfg, const std::string& source_id,
                        const char* stream_tag);

// Paper-shaped entry point: patches of the style representation (stream "a")
// and of the input style image (stream "b") under one seed.
std::pair<PatchSet, PatchSet> crop_and_augment(const Image& a, const Image& b, int n_crop,
                                               uint64_t seed, const AugmentConfig& cfg);

// Bilinear perspective sampling with border clamp; align-corners, so an
// identity geometry at equal resolution copies pixels exactly.
Image sample_patch(const Image& src, const PatchGeometry& g, int patch_size);

// VJP of sample_patch: scatters grad_patch back into grad_src (accumulates).
void sample_patch_backward(const PatchGeometry& g, int patch_size,
                           const std::vector<float>& grad_patch, int src_h, int src_w,
                           std::vector<float>& grad_src);

// Geometry helpers used by sample_patches; exposed for tests.
PatchGeometry full_frame_geometry(const Image& src);

// Color-contrast saliency segmenter. Uses the "segmenter" checkpoint;
// threshold at 0.5 of peak saliency, keeps the largest connected component.
Mask segment_salient(const Image& img, WeightsStore& store);

// Bypass path: mask_path wins when provided; otherwise the segmenter runs.
Mask acquire_mask(const Image& img, WeightsStore& store,
                  const std::optional<std::filesystem::path>& mask_path,
                  int working_resolution);

}  // namespace objmst::ingest
