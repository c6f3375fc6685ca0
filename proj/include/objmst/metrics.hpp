// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "objmst/clip.hpp"
#include "objmst/image.hpp"
#include "objmst/weights.hpp"

namespace objmst::metrics {

// One evaluated output. All scores are finite doubles; columns that need a
// reference the manifest did not provide are rejected up front, never NaN.
struct MetricRow {
    std::string image_id;
    std::string method;
    std::string mode;
    double clipscore_text = 0.0;
    double clipscore_image = 0.0;
    double lpips = 0.0;
    double nima = 0.0;
    double contrique_fr = 0.0;
    double contrique_nr = 0.0;
};

// Arithmetic means of the rows sharing one method label.
struct MethodAggregate {
    std::string method;
    size_t count = 0;
    double clipscore_text = 0.0;
    double clipscore_image = 0.0;
    double lpips = 0.0;
    double nima = 0.0;
    double contrique_fr = 0.0;
    double contrique_nr = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> per_image;
    std::vector<MethodAggregate> aggregate;  // method order of first appearance

    // Canonical serialization. Header:
    //   image_id,method,mode,clipscore_text,clipscore_image,lpips,nima,
    //   contrique_fr,contrique_nr
    // Values use max-precision %.17g so readers recover the exact doubles.
    std::string to_csv() const;

    // Human-readable summary derived from the aggregates: metrics as rows,
    // methods as columns.
    std::string table_text() const;
};

enum class EvalMode { style_reps, stylized };
enum class ContriqueMode { full_reference, no_reference };

const char* eval_mode_name(EvalMode mode);

class Metrics {
  public:
    explicit Metrics(WeightsStore& store);

    // Cosine similarity of the CLIP embeddings, in [-1, 1]. Identical inputs
    // give exactly 1.0.
    double clipscore(const Image& image, const std::string& reference_text) const;
    double clipscore(const Image& image, const Image& reference) const;

    // Perceptual distance over a 3-scale feature pyramid; 0 iff the inputs are
    // identical, symmetric. A reference of different size is resized to the
    // image's dimensions first.
    double lpips(const Image& image, const Image& reference) const;

    // Mean of the predicted 10-bin opinion distribution, strictly in [1, 10].
    double nima(const Image& image) const;

    // Quality score: full-reference mode is the cosine between quality
    // features (requires `reference`), no-reference mode a calibrated scalar.
    double contrique(const Image& image, ContriqueMode mode,
                     const Image* reference = nullptr) const;
    double contrique_fr(const Image& image, const Image& reference) const {
        return contrique(image, ContriqueMode::full_reference, &reference);
    }
    double contrique_nr(const Image& image) const {
        return contrique(image, ContriqueMode::no_reference);
    }

  private:
    std::vector<double> quality_features(const Image& image) const;
    std::vector<double> squashed_stats(const Image& image) const;
    double lpips_scale(const Image& a, const Image& b, int scale) const;

    clip::TextEncoder text_enc_;
    clip::ImageEncoder image_enc_;
    // nima
    int bins_ = 0;
    std::vector<float> nima_w_, nima_b_, nima_mu_, nima_sigma_;
    // contrique
    int feat_dim_ = 0;
    double nr_scale_ = 0.0, nr_offset_ = 0.0;
    std::vector<float> ctq_r_, ctq_wnr_, ctq_mu_, ctq_sigma_;
    // lpips
    int lpips_scales_ = 0, lpips_channels_ = 0, lpips_kernel_ = 0;
    std::vector<std::vector<float>> lpips_w_, lpips_a_;
};

// Scores the outputs listed in `manifest` (JSON array; each entry names an
// `output` image relative to run_dir plus its references) and aggregates per
// method label. Entry fields:
//   output (required), method (default "objmst"), target ("fg" default, "bg"),
//   style_text_fg/bg, style_image_fg/bg (paths relative to run_dir or
//   absolute), content, mask (carried through, not scored).
// The target picks which style text/image pair scores the output. Reads only;
// run_dir is never modified.
MetricReport evaluate_table(const Metrics& metrics,
                            const std::filesystem::path& run_dir, EvalMode mode,
                            const nlohmann::json& manifest);

// Convenience overload reading the manifest from a JSON file.
MetricReport evaluate_table(const Metrics& metrics,
                            const std::filesystem::path& run_dir, EvalMode mode,
                            const std::filesystem::path& manifest_path);

}  // namespace objmst::metrics
