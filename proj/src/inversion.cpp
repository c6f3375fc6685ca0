// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <Eigen/Dense>

#include "objmst/ingest.hpp"
#include "objmst/rng.hpp"

namespace objmst::inversion {

namespace {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<const MatF>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// Latent serialization.

nlohmann::json latent_to_json(const LatentVector& w) {
    return {{"generator_id", w.generator_id},
            {"shape", {w.values.size()}},
            {"values", w.values}};
}

LatentVector latent_from_json(const nlohmann::json& j) {
    LatentVector w;
    try {
        w.generator_id = j.at("generator_id").get<std::string>();
        const auto shape = j.at("shape").get<std::vector<size_t>>();
        w.values = j.at("values").get<std::vector<float>>();
        size_t expect = 1;
        for (size_t s : shape) expect *= s;
        require(expect == w.values.size(), ErrorKind::LatentShapeMismatch,
                "latent shape does not match value count");
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::LatentShapeMismatch,
              std::string("malformed latent JSON: ") + e.what());
    }
    for (float x : w.values)
        require(std::isfinite(x), ErrorKind::LatentShapeMismatch,
                "latent contains non-finite values");
    return w;
}

void save_latent(const LatentVector& w, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::StageFailed, "cannot open " + path.string());
    out << latent_to_json(w).dump(2) << "\n";
    require(out.good(), ErrorKind::StageFailed, "failed writing " + path.string());
}

LatentVector load_latent(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::FileNotFound, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::LatentShapeMismatch,
              std::string("malformed latent JSON: ") + e.what());
    }
    return latent_from_json(j);
}

// ---------------------------------------------------------------------------
// Generator.

Generator::Generator(WeightsStore& store) {
    const Checkpoint* ck = nullptr;
    try {
        ck = &store.load("generator");
    } catch (const Error& e) {
        raise(ErrorKind::GeneratorUnavailable,
              std::string("generator checkpoint unavailable (") + e.what() + ")");
    }
    try {
        id_ = ck->header.at("generator_id").get<std::string>();
        latent_dim_ = ck->header.at("latent_dim").get<int>();
        hidden_dim_ = ck->header.at("hidden").get<int>();
        num_basis_ = ck->header.at("num_basis").get<int>();
        resolution_ = ck->header.at("resolution").get<int>();
        coeff_scale_ = ck->header.at("coeff_scale").get<float>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::GeneratorUnavailable,
              std::string("generator header malformed: ") + e.what());
    }
    w1_ = ck->blob("W1");
    b1_ = ck->blob("b1");
    w2_ = ck->blob("W2");
    b2_ = ck->blob("b2");
    w_mean_ = ck->blob("w_mean");
    basis_params_ = ck->blob("basis");
    require(static_cast<int>(basis_params_.size()) == num_basis_ * 7,
            ErrorKind::GeneratorUnavailable, "generator basis table malformed");
    require(static_cast<int>(b2_.size()) == num_basis_ * 3 + 3,
            ErrorKind::GeneratorUnavailable, "generator head size malformed");
}

LatentVector Generator::mean_latent() const { return {w_mean_, id_}; }

void Generator::check_latent(const LatentVector& w) const {
    require(w.generator_id.empty() || w.generator_id == id_,
            ErrorKind::LatentShapeMismatch,
            "latent was produced by generator '" + w.generator_id +
                "', loaded generator is '" + id_ + "'");
    require(static_cast<int>(w.values.size()) == latent_dim_,
            ErrorKind::LatentShapeMismatch,
            "latent has " + std::to_string(w.values.size()) + " values, generator wants " +
                std::to_string(latent_dim_));
    for (float x : w.values)
        require(std::isfinite(x), ErrorKind::LatentShapeMismatch,
                "latent contains non-finite values");
}

Generator::Forward Generator::run_mlp(const LatentVector& w) const {
    Forward f;
    f.hidden.resize(hidden_dim_);
    for (int i = 0; i < hidden_dim_; ++i) {
        double acc = b1_[i];
        for (int j = 0; j < latent_dim_; ++j)
            acc += static_cast<double>(w1_[static_cast<size_t>(i) * latent_dim_ + j]) *
                   w.values[j];
        f.hidden[i] = static_cast<float>(std::tanh(acc));
    }
    const int theta_dim = num_basis_ * 3 + 3;
    f.theta.resize(theta_dim);
    for (int i = 0; i < theta_dim; ++i) {
        double acc = b2_[i];
        for (int j = 0; j < hidden_dim_; ++j)
            acc += static_cast<double>(w2_[static_cast<size_t>(i) * hidden_dim_ + j]) *
                   f.hidden[j];
        f.theta[i] = static_cast<float>(acc);
    }
    return f;
}

const std::vector<float>& Generator::basis_for(int resolution) const {
    std::lock_guard<std::mutex> lock(basis_mu_);
    auto it = basis_cache_.find(resolution);
    if (it != basis_cache_.end()) return *it->second;

    const int R = resolution;
    auto plane = std::make_unique<std::vector<float>>(
        static_cast<size_t>(R) * R * num_basis_);
    auto& B = *plane;
    for (int y = 0; y < R; ++y) {
        const double v = R > 1 ? 2.0 * y / (R - 1) - 1.0 : 0.0;
        for (int x = 0; x < R; ++x) {
            const double u = R > 1 ? 2.0 * x / (R - 1) - 1.0 : 0.0;
            float* row = &B[(static_cast<size_t>(y) * R + x) * num_basis_];
            for (int m = 0; m < num_basis_; ++m) {
                const float* p = &basis_params_[static_cast<size_t>(m) * 7];
                const int type = static_cast<int>(p[0]);
                double val = 0.0;
                switch (type) {
                    case 0:  // stripe
                        val = std::sin(p[1] * u + p[2] * v + p[3]);
                        break;
                    case 1: {  // blob
                        const double du = u - p[1], dv = v - p[2];
                        val = std::exp(-(du * du + dv * dv) / (2.0 * p[3] * p[3]));
                        break;
                    }
                    case 2:  // ramp
                        val = std::tanh(p[1] * (u - p[3]) + p[2] * (v - p[4]));
                        break;
                    default: {  // ring
                        const double du = u - p[1], dv = v - p[2];
                        const double r = std::sqrt(du * du + dv * dv);
                        const double dr = r - p[3];
                        val = std::exp(-(dr * dr) / (2.0 * p[4] * p[4]));
                        break;
                    }
                }
                row[m] = static_cast<float>(val);
            }
        }
    }
    auto [pos, inserted] = basis_cache_.emplace(resolution, std::move(plane));
    (void)inserted;
    return *pos->second;
}

Image Generator::render(const LatentVector& w, int resolution) const {
    check_latent(w);
    require(resolution >= 32, ErrorKind::ImageTooSmall,
            "render resolution below 32");
    const Forward f = run_mlp(w);
    const auto& B = basis_for(resolution);
    const int R = resolution;
    const size_t n_px = static_cast<size_t>(R) * R;

    // pre = B (n_px x M) . A (M x 3) + channel bias; pixel = sigmoid(k * pre).
    MapM Bm(B.data(), static_cast<Eigen::Index>(n_px), num_basis_);
    MapM Am(f.theta.data(), num_basis_, 3);
    const float* bias = &f.theta[static_cast<size_t>(num_basis_) * 3];

    MatF pre = Bm * Am;
    Image img(R, R);
    for (size_t i = 0; i < n_px; ++i)
        for (int c = 0; c < 3; ++c)
            img.data[i * 3 + c] = static_cast<float>(
                sigmoid(coeff_scale_ * (pre(static_cast<Eigen::Index>(i), c) + bias[c])));
    return img;
}

std::vector<float> Generator::backward(const LatentVector& w, int resolution,
                                       const std::vector<float>& grad_pixels) const {
    check_latent(w);
    const int R = resolution;
    const size_t n_px = static_cast<size_t>(R) * R;
    require(grad_pixels.size() == n_px * 3, ErrorKind::SizeMismatch,
            "grad_pixels does not match render resolution");

    const Forward f = run_mlp(w);
    const auto& B = basis_for(resolution);
    MapM Bm(B.data(), static_cast<Eigen::Index>(n_px), num_basis_);
    MapM Am(f.theta.data(), num_basis_, 3);
    const float* bias = &f.theta[static_cast<size_t>(num_basis_) * 3];

    // R_pix = grad * k * sigmoid'(k * pre), per pixel and channel.
    MatF pre = Bm * Am;
    MatF rpix(static_cast<Eigen::Index>(n_px), 3);
    for (size_t i = 0; i < n_px; ++i)
        for (int c = 0; c < 3; ++c) {
            const double s =
                sigmoid(coeff_scale_ * (pre(static_cast<Eigen::Index>(i), c) + bias[c]));
            rpix(static_cast<Eigen::Index>(i), c) = static_cast<float>(
                grad_pixels[i * 3 + c] * coeff_scale_ * s * (1.0 - s));
        }

    // d/d theta: coefficients get B^T . R_pix, channel biases get column sums.
    MatF gA = Bm.transpose() * rpix;  // M x 3
    const int theta_dim = num_basis_ * 3 + 3;
    std::vector<double> gtheta(theta_dim, 0.0);
    for (int m = 0; m < num_basis_; ++m)
        for (int c = 0; c < 3; ++c) gtheta[static_cast<size_t>(m) * 3 + c] = gA(m, c);
    for (int c = 0; c < 3; ++c)
        gtheta[static_cast<size_t>(num_basis_) * 3 + c] = rpix.col(c).sum();

    // Back through the MLP.
    std::vector<double> gh(hidden_dim_, 0.0);
    for (int i = 0; i < theta_dim; ++i)
        for (int j = 0; j < hidden_dim_; ++j)
            gh[j] += gtheta[i] * w2_[static_cast<size_t>(i) * hidden_dim_ + j];
    std::vector<float> gw(latent_dim_, 0.0f);
    for (int i = 0; i < hidden_dim_; ++i) {
        const double gpre = gh[i] * (1.0 - static_cast<double>(f.hidden[i]) * f.hidden[i]);
        for (int j = 0; j < latent_dim_; ++j)
            gw[j] += static_cast<float>(
                gpre * w1_[static_cast<size_t>(i) * latent_dim_ + j]);
    }
    return gw;
}

// ---------------------------------------------------------------------------
// Inversion.

InversionConfig unmasked_baseline_loss_mode(InversionConfig cfg) {
    cfg.unmasked_baseline = true;
    return cfg;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryPoint>& trajectory) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::StageFailed, "cannot open " + path.string());
    out << "step,total,text_term,image_term\n";
    char line[160];
    for (const auto& p : trajectory) {
        std::snprintf(line, sizeof(line), "%d,%.9f,%.9f,%.9f\n", p.step, p.total,
                      p.text_term, p.image_term);
        out << line;
    }
    require(out.good(), ErrorKind::StageFailed, "failed writing " + path.string());
}

StyleRepresentation Inverter::invert(const std::string& style_text,
                                     const Image& style_image, const Image& masked_ref,
                                     const InversionConfig& cfg,
                                     const std::string& target) const {
    require(cfg.steps >= 1, ErrorKind::InvalidJobSpec, "steps must be >= 1");
    require(cfg.learning_rate >= 0.0, ErrorKind::InvalidJobSpec,
            "learning_rate must be nonnegative");
    require(cfg.n_crop >= 1, ErrorKind::InvalidJobSpec, "n_crop must be >= 1");
    require(target == "fg" || target == "bg", ErrorKind::InvalidJobSpec,
            "target must be fg or bg");
    const int resolution =
        cfg.resolution > 0 ? cfg.resolution : generator_.nominal_resolution();

    clip::LossConfig loss_cfg;
    loss_cfg.lambda = cfg.lambda;
    loss_cfg.n_crop = cfg.n_crop;
    loss_cfg.source_text = cfg.source_text;

    // Fixed anchors for the whole run: the text direction and the reference
    // embedding every image direction subtracts.
    const clip::Direction dT = clip::text_direction(text_, style_text, loss_cfg);
    require(!dT.degenerate, ErrorKind::DegenerateDirection,
            "style text encodes identically to the source text");
    const clip::Embedding ref = image_.encode(masked_ref);

    // Latent initialization.
    LatentVector w = generator_.mean_latent();
    {
        Rng rng(derive_seed(cfg.seed, "latent-init"));
        if (cfg.latent_init == InversionConfig::Init::mean_w) {
            for (auto& x : w.values) x += 0.05f * rng.gauss_f();
        } else {
            for (auto& x : w.values) x = 0.30f * rng.gauss_f();
        }
    }

    ingest::AugmentConfig aug;
    aug.patch_size = cfg.patch_size;

    // Adaptive-moment gradient descent state.
    std::vector<double> m(w.values.size(), 0.0), v(w.values.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    StyleRepresentation rep;
    rep.latent = w;
    rep.target = target;
    rep.resolution = resolution;
    rep.trajectory.reserve(cfg.steps);
    rep.best_loss = std::numeric_limits<double>::infinity();

    const size_t n_px = static_cast<size_t>(resolution) * resolution * 3;
    std::vector<float> grad_render(n_px);
    std::vector<float> grad_patch;
    std::vector<std::vector<float>> grad_style;

    for (int step = 0; step < cfg.steps; ++step) {
        const Image S = generator_.render(w, resolution);

        // Fresh crops every step, re-seeded from (seed, step).
        const uint64_t step_seed = derive_seed(cfg.seed, "inversion-step", step);
        auto [sp, ip] =
            ingest::crop_and_augment(S, style_image, cfg.n_crop, step_seed, aug);

        std::vector<clip::Direction> dS(cfg.n_crop), dI(cfg.n_crop);
        for (int j = 0; j < cfg.n_crop; ++j) {
            dS[j] = clip::masked_image_direction(image_, sp.patches[j], ref);
            dI[j] = clip::masked_image_direction(image_, ip.patches[j], ref);
        }

        clip::LossBreakdown bd;
        const double loss =
            clip::masked_directional_loss(dS, dI, dT, loss_cfg, &bd, &grad_style);
        rep.trajectory.push_back({step, bd.total, bd.text_term, bd.image_term});
        if (step == 0) rep.initial_loss = loss;
        if (loss < rep.best_loss) {
            rep.best_loss = loss;
            rep.best_step = step;
            rep.latent = w;
        }

        // Chain rule: loss -> style directions -> patch embeddings -> patch
        // pixels -> rendered pixels -> latent. (d dS / d E_I(patch) = I.)
        std::fill(grad_render.begin(), grad_render.end(), 0.0f);
        for (int j = 0; j < cfg.n_crop; ++j) {
            grad_patch.assign(static_cast<size_t>(aug.patch_size) * aug.patch_size * 3,
                              0.0f);
            image_.backward(sp.patches[j], grad_style[j], grad_patch);
            ingest::sample_patch_backward(sp.geoms[j], aug.patch_size, grad_patch,
                                          resolution, resolution, grad_render);
        }
        const std::vector<float> gw = generator_.backward(w, resolution, grad_render);

        const double bc1 = 1.0 - std::pow(beta1, step + 1);
        const double bc2 = 1.0 - std::pow(beta2, step + 1);
        for (size_t i = 0; i < w.values.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * gw[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * static_cast<double>(gw[i]) * gw[i];
            w.values[i] -= static_cast<float>(cfg.learning_rate * (m[i] / bc1) /
                                              (std::sqrt(v[i] / bc2) + adam_eps));
        }
    }

    if (rep.best_loss >= rep.initial_loss && cfg.steps > 1) {
        std::fprintf(stderr,
                     "[objmst] warning: NoImprovement: inversion made no progress "
                     "(initial %.6f, best %.6f at step %d); returning best-seen\n",
                     rep.initial_loss, rep.best_loss, rep.best_step);
        rep.improved = false;
    }

    rep.image = generator_.render(rep.latent, resolution);
    return rep;
}

std::vector<StyleRepresentation> Inverter::invert_multi(
    const std::string& style_text, const Image& style_image, const Image& masked_ref,
    const InversionConfig& cfg, int count, const std::string& target) const {
    require(count >= 1, ErrorKind::InvalidJobSpec, "count must be >= 1");
    std::vector<StyleRepresentation> reps;
    reps.reserve(count);
    for (int i = 0; i < count; ++i) {
        InversionConfig c = cfg;
        c.seed = cfg.seed + static_cast<uint64_t>(i);
        reps.push_back(invert(style_text, style_image, masked_ref, c, target));
    }
    return reps;
}

}  // namespace objmst::inversion
