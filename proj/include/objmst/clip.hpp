// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "objmst/image.hpp"
#include "objmst/weights.hpp"

namespace objmst::clip {

// Encoder output. `values` is unit-normalized (standard practice for joint
// embedding spaces); `norm` keeps the pre-normalization magnitude.
struct Embedding {
    std::vector<float> values;
    float norm = 0.0f;
};

// Difference of two embeddings. `degenerate` marks an (exactly or nearly)
// zero vector; consumers that need a cosine must reject it.
struct Direction {
    std::vector<float> values;
    bool degenerate = false;

    double norm() const;
};

struct LossConfig {
    double lambda = 1.0;               // weight of the image-image term
    std::string source_text = "a photo";
    int n_crop = 16;
    bool epsilon_norm = false;         // stabilize cosines with 1e-8 in the norm
};

struct LossBreakdown {
    double total = 0.0;
    double text_term = 0.0;
    double image_term = 0.0;
};

class TextEncoder {
  public:
    explicit TextEncoder(WeightsStore& store);

    Embedding encode(const std::string& text) const;
    int dim() const { return dim_; }

  private:
    int dim_ = 0;
    int max_tokens_ = 0;
    float semantic_gain_ = 1.0f, residual_gain_ = 0.25f;
    std::vector<std::vector<std::string>> concept_words_;
    std::vector<float> p_;    // dim x n_concepts, row-major
    std::vector<float> b_t_;  // dim
};

class ImageEncoder {
  public:
    explicit ImageEncoder(WeightsStore& store);

    Embedding encode(const Image& img) const;

    // VJP: accumulates d(embedding . grad_embedding)/d(pixels) into
    // grad_pixels (image layout; caller zeroes it).
    void backward(const Image& img, const std::vector<float>& grad_embedding,
                  std::vector<float>& grad_pixels) const;

    int dim() const { return dim_; }
    const std::vector<float>& palette() const { return palette_; }

  private:
    std::vector<float> concept_activations(const std::vector<float>& zstats) const;

    int dim_ = 0, n_concepts_ = 0, stats_dim_ = 0;
    float semantic_gain_ = 1.0f, residual_gain_ = 1.0f, squash_ = 2.0f;
    std::vector<float> p_;        // dim x n_concepts
    std::vector<float> w_probe_;  // n_concepts x stats_dim
    std::vector<float> q_;        // dim x stats_dim
    std::vector<float> b_i_;      // dim
    std::vector<float> mu_, sigma_, palette_;
};

Direction direction_between(const Embedding& a, const Embedding& b);

// Delta-T of the loss: E_T(style_text) - E_T(cfg.source_text). Degenerate
// (zero) when the two texts encode identically.
Direction text_direction(const TextEncoder& enc, const std::string& style_text,
                         const LossConfig& cfg);

// Delta-I / Delta-S of the loss: E_I(patch) - masked_ref_embedding.
Direction masked_image_direction(const ImageEncoder& enc, const Image& patch,
                                 const Embedding& masked_ref);
Direction masked_image_direction(const ImageEncoder& enc, const Image& patch,
                                 const Image& masked_ref);

// Masked directional loss over patch direction sets:
//   (1/N) sum_j (1 - cos(dS_j, dT)) + lambda (1/N^2) sum_jk (1 - cos(dS_j, dI_k))
// Accumulated in double; optional analytic gradient with respect to each
// style direction. Throws DegenerateDirection on any zero direction unless
// cfg.epsilon_norm is set.
double masked_directional_loss(const std::vector<Direction>& style_dirs,
                               const std::vector<Direction>& input_dirs,
                               const Direction& text_dir, const LossConfig& cfg,
                               LossBreakdown* breakdown = nullptr,
                               std::vector<std::vector<float>>* grad_style = nullptr);

}  // namespace objmst::clip
