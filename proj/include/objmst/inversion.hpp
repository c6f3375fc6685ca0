// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "objmst/clip.hpp"
#include "objmst/image.hpp"
#include "objmst/weights.hpp"

namespace objmst::inversion {

// A point in the generator's latent (W) space, tagged with the checkpoint
// identity that defines its layout.
struct LatentVector {
    std::vector<float> values;
    std::string generator_id;
};

nlohmann::json latent_to_json(const LatentVector& w);
LatentVector latent_from_json(const nlohmann::json& j);
void save_latent(const LatentVector& w, const std::filesystem::path& path);
LatentVector load_latent(const std::filesystem::path& path);

// Frozen procedural generator: a latent MLP produces mixing coefficients over
// an analytic 2-D basis bank (stripes, blobs, ramps, rings), squashed through
// a sigmoid per channel. Resolution-independent by construction; renders are
// deterministic for a fixed latent and checkpoint.
class Generator {
  public:
    explicit Generator(WeightsStore& store);

    const std::string& id() const { return id_; }
    int latent_dim() const { return latent_dim_; }
    int nominal_resolution() const { return resolution_; }

    // The checkpoint's average latent (anchor for initialization).
    LatentVector mean_latent() const;

    Image render(const LatentVector& w, int resolution) const;
    Image render(const LatentVector& w) const { return render(w, resolution_); }

    // VJP: d(pixels . grad_pixels)/d(latent). grad_pixels uses the layout of
    // render(w, resolution).
    std::vector<float> backward(const LatentVector& w, int resolution,
                                const std::vector<float>& grad_pixels) const;

  private:
    struct Forward {
        std::vector<float> hidden;  // tanh activations
        std::vector<float> theta;   // basis coefficients + channel biases
    };
    Forward run_mlp(const LatentVector& w) const;
    const std::vector<float>& basis_for(int resolution) const;  // HW x num_basis
    void check_latent(const LatentVector& w) const;

    std::string id_;
    int latent_dim_ = 0, hidden_dim_ = 0, num_basis_ = 0, resolution_ = 0;
    float coeff_scale_ = 1.0f;
    std::vector<float> w1_, b1_, w2_, b2_, w_mean_, basis_params_;

    mutable std::mutex basis_mu_;
    mutable std::map<int, std::unique_ptr<std::vector<float>>> basis_cache_;
};

struct InversionConfig {
    int steps = 300;
    double learning_rate = 0.05;
    double lambda = 1.0;
    int n_crop = 16;
    uint64_t seed = 0;
    enum class Init { random, mean_w };
    Init latent_init = Init::mean_w;
    int resolution = 0;          // 0 = generator's nominal resolution
    int patch_size = 128;        // augmented-crop side fed to the encoder
    bool unmasked_baseline = false;  // ablation arm: reference is the caller's
                                     // unmasked content image
    std::string source_text = "a photo";
};

// Ablation switch: returns a config whose direction references skip the
// masked-content convention (the caller then supplies the raw content image
// as the reference).
InversionConfig unmasked_baseline_loss_mode(InversionConfig cfg);

struct TrajectoryPoint {
    int step = 0;
    double total = 0.0, text_term = 0.0, image_term = 0.0;
};

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryPoint>& trajectory);

struct StyleRepresentation {
    Image image;                 // == render(latent, resolution) bitwise
    LatentVector latent;
    std::string target = "fg";   // "fg" | "bg"
    int resolution = 0;
    std::vector<TrajectoryPoint> trajectory;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    int best_step = -1;
    bool improved = true;        // false once a NoImprovement warning fired
};

// Shared read-only model handles for one or more inversion jobs.
class Inverter {
  public:
    explicit Inverter(WeightsStore& store)
        : text_(store), image_(store), generator_(store) {}

    const clip::TextEncoder& text() const { return text_; }
    const clip::ImageEncoder& image() const { return image_; }
    const Generator& generator() const { return generator_; }

    // Optimizes a latent under the masked directional loss. `masked_ref` is
    // the reference image whose embedding anchors every image direction
    // (masked content normally; raw content in the unmasked-baseline arm).
    StyleRepresentation invert(const std::string& style_text, const Image& style_image,
                               const Image& masked_ref, const InversionConfig& cfg,
                               const std::string& target = "fg") const;

    // count independent inversions seeded cfg.seed, cfg.seed + 1, ...
    std::vector<StyleRepresentation> invert_multi(const std::string& style_text,
                                                  const Image& style_image,
                                                  const Image& masked_ref,
                                                  const InversionConfig& cfg, int count,
                                                  const std::string& target = "fg") const;

  private:
    clip::TextEncoder text_;
    clip::ImageEncoder image_;
    Generator generator_;
};

}  // namespace objmst::inversion
