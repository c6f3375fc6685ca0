// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "objmst/image.hpp"
#include "objmst/inversion.hpp"
#include "objmst/weights.hpp"

namespace objmst::s2k {

// One level of the multi-scale feature stack.
struct FeatureLevel {
    std::string tag;  // relu3_1 | relu4_1 | relu5_1
    Tensor3 feats;    // C x H x W
};

// Three-level pyramid mirroring the frozen encoder taps: channels 256/512/512
// at strides 4/8/16 of the source resolution. Spatial dims strictly decrease
// with depth.
struct FeaturePyramid {
    std::array<FeatureLevel, 3> levels;  // shallow -> deep
    int source_h = 0;
    int source_w = 0;
};

// Per-level attention weights, kept for diagnostics and tests. Every row is a
// probability distribution over the keys.
struct AttentionLevel {
    std::string tag;
    int rows = 0;                // queries (content positions)
    int cols = 0;                // keys
    std::vector<float> weights;  // row-major rows x cols
    std::string key_layout;      // human-readable description of the key set
};

struct AttentionMap {
    std::vector<AttentionLevel> levels;  // coarse -> fine processing order
};

struct TransferConfig {
    enum class Attention { s2k, a2a };
    Attention attention = Attention::s2k;
    // Default: style features from all representations are concatenated along
    // the key axis (one attention over the union of keys). The alternative
    // runs one transfer per representation and averages the outputs.
    bool average_reps = false;
};

// Frozen feature encoder + attention mapper + decoder. Pure functions over
// immutable weights; safe to share across threads.
class StyleTransfer {
  public:
    explicit StyleTransfer(WeightsStore& store);

    // Multi-scale features of `image` (H, W multiples of 16, values in [0,1]).
    FeaturePyramid extract_features(const Image& image) const;

    // Salient-to-key mapping: queries from the content features, distributed
    // region-pooled style keys, coarse-to-fine progressive prior. Output is
    // shaped exactly like `content`.
    FeaturePyramid s2k_map(const FeaturePyramid& content, const FeaturePyramid& style,
                           AttentionMap* attention = nullptr) const;
    FeaturePyramid s2k_map(const FeaturePyramid& content,
                           const std::vector<FeaturePyramid>& styles,
                           const TransferConfig& cfg = {},
                           AttentionMap* attention = nullptr) const;

    // Dense all-to-all baseline: every style position is a key, no prior.
    FeaturePyramid a2a_map(const FeaturePyramid& content, const FeaturePyramid& style,
                           AttentionMap* attention = nullptr) const;
    FeaturePyramid a2a_map(const FeaturePyramid& content,
                           const std::vector<FeaturePyramid>& styles,
                           const TransferConfig& cfg = {},
                           AttentionMap* attention = nullptr) const;

    // Reconstructs an image from a pyramid shaped like encoder output.
    // Values are clamped to [0,1].
    Image decode(const FeaturePyramid& feats) const;

    // Full salient-object stylization: extract features of content (.) mask,
    // map them against the style representations' features, decode, and zero
    // everything outside the mask.
    Image stylize_salient(const Image& content, const Mask& mask,
                          const std::vector<inversion::StyleRepresentation>& style_reps,
                          const TransferConfig& cfg = {}) const;

    int levels() const { return 3; }
    int channels(int level) const { return channels_[level]; }
    int stride(int level) const { return strides_[level]; }

  private:
    struct KeyBank;  // pooled keys/values of one style set at one level

    FeaturePyramid map_impl(const FeaturePyramid& content,
                            const std::vector<const FeaturePyramid*>& styles,
                            TransferConfig::Attention attention, bool average_reps,
                            AttentionMap* attention_out) const;
    Tensor3 transfer_level(int level, const Tensor3& content, const KeyBank& bank,
                           const std::vector<float>* prior,
                           std::vector<float>* attn_out) const;
    void check_pyramid(const FeaturePyramid& p, const char* what) const;

    int channels_[3] = {0, 0, 0};
    int strides_[3] = {0, 0, 0};
    int attn_dim_ = 0;
    int region_grid_ = 0;
    float prior_gain_ = 0.0f;
    std::vector<float> enc_w_[3];       // patchify banks
    std::vector<float> dec_u_[3];       // decoder transposes
    std::vector<float> wq_[3], wk_[3];  // attention projections
    float merge_alpha_[2] = {0.0f, 0.0f};
};

// Debug dump of a pyramid: magic "OBJP1\n", then per level a uint32 tag
// length, the tag bytes, int32 C, H, W, and C*H*W row-major float32 values.
void dump_pyramid(const FeaturePyramid& p, const std::filesystem::path& path);
FeaturePyramid load_pyramid(const std::filesystem::path& path);

}  // namespace objmst::s2k
