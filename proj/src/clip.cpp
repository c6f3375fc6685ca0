// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/clip.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "objmst/common.hpp"
#include "objmst/rng.hpp"
#include "objmst/stats.hpp"

namespace objmst::clip {

namespace {

// Stream constant for the hashed token residual; changing it re-keys every
// text embedding, so treat it as part of the encoder architecture.
constexpr uint64_t kTokenStream = 0x7E87u;

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<float> token_residual(const std::string& token, int dim) {
    Rng rng(derive_seed(kTokenStream, token));
    std::vector<float> v(dim);
    double s = 0.0;
    for (auto& x : v) {
        x = rng.gauss_f();
        s += static_cast<double>(x) * x;
    }
    const float k = static_cast<float>(1.0 / std::sqrt(s));
    for (auto& x : v) x *= k;
    return v;
}

Embedding finish_embedding(std::vector<float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    const double n = std::sqrt(s);
    require(n > 1e-12, ErrorKind::EncoderUnavailable, "encoder produced a zero vector");
    for (auto& x : v) x = static_cast<float>(x / n);
    return {std::move(v), static_cast<float>(n)};
}

const Checkpoint& load_role(WeightsStore& store, const std::string& role) {
    try {
        return store.load(role);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::DigestMismatch) throw;
        raise(ErrorKind::EncoderUnavailable,
              "cannot load '" + role + "' checkpoint: " + e.what());
    }
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace

double Direction::norm() const {
    double s = 0.0;
    for (float x : values) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Text encoder.

TextEncoder::TextEncoder(WeightsStore& store) {
    const Checkpoint& ck = load_role(store, "encoder_text");
    dim_ = ck.header.at("dim").get<int>();
    max_tokens_ = ck.header.at("max_tokens").get<int>();
    semantic_gain_ = ck.header.at("semantic_gain").get<float>();
    residual_gain_ = ck.header.at("residual_gain").get<float>();
    for (const auto& c : ck.header.at("concepts")) {
        std::vector<std::string> words;
        for (const auto& w : c.at("words")) words.push_back(w.get<std::string>());
        concept_words_.push_back(std::move(words));
    }
    p_ = ck.blob("P");
    b_t_ = ck.blob("b_T");
}

Embedding TextEncoder::encode(const std::string& text) const {
    const auto tokens = tokenize(text);
    require(!tokens.empty(), ErrorKind::TextTooLong, "text has no tokens");
    require(static_cast<int>(tokens.size()) <= max_tokens_, ErrorKind::TextTooLong,
            "text exceeds " + std::to_string(max_tokens_) + " tokens");

    const int n_concepts = static_cast<int>(concept_words_.size());
    std::vector<float> a(n_concepts, 0.0f);
    for (const auto& tok : tokens)
        for (int k = 0; k < n_concepts; ++k)
            for (const auto& w : concept_words_[k])
                if (tok == w) {
                    a[k] += 1.0f;
                    break;
                }
    double an = 0.0;
    for (float x : a) an += static_cast<double>(x) * x;
    if (an > 0) {
        const float k = static_cast<float>(1.0 / std::sqrt(an));
        for (auto& x : a) x *= k;
    }

    std::vector<float> v(b_t_);
    for (int d = 0; d < dim_; ++d) {
        double s = 0.0;
        for (int k = 0; k < n_concepts; ++k)
            s += static_cast<double>(p_[static_cast<size_t>(d) * n_concepts + k]) * a[k];
        v[d] += semantic_gain_ * static_cast<float>(s);
    }
    for (const auto& tok : tokens) {
        const auto r = token_residual(tok, dim_);
        const float k = residual_gain_ / static_cast<float>(tokens.size());
        for (int d = 0; d < dim_; ++d) v[d] += k * r[d];
    }
    return finish_embedding(std::move(v));
}

// ---------------------------------------------------------------------------
// Image encoder.

ImageEncoder::ImageEncoder(WeightsStore& store) {
    const Checkpoint& ck = load_role(store, "encoder_image");
    dim_ = ck.header.at("dim").get<int>();
    stats_dim_ = ck.header.at("stats_dim").get<int>();
    require(stats_dim_ == kStatsDim, ErrorKind::EncoderUnavailable,
            "image encoder stats_dim mismatch");
    semantic_gain_ = ck.header.at("semantic_gain").get<float>();
    residual_gain_ = ck.header.at("residual_gain").get<float>();
    squash_ = ck.header.at("probe_squash").get<float>();
    for (const auto& row : ck.header.at("palette"))
        for (const auto& c : row) palette_.push_back(c.get<float>());
    require(static_cast<int>(palette_.size()) == kPaletteBins * 3,
            ErrorKind::EncoderUnavailable, "bad palette in image encoder header");
    p_ = ck.blob("P");
    w_probe_ = ck.blob("W_probe");
    q_ = ck.blob("Q");
    b_i_ = ck.blob("b_I");
    mu_ = ck.blob("mu_s");
    sigma_ = ck.blob("sigma_s");
    n_concepts_ = static_cast<int>(w_probe_.size()) / stats_dim_;
}

std::vector<float> ImageEncoder::concept_activations(const std::vector<float>& z) const {
    std::vector<float> a(n_concepts_);
    for (int k = 0; k < n_concepts_; ++k) {
        double s = 0.0;
        for (int i = 0; i < stats_dim_; ++i)
            s += static_cast<double>(w_probe_[static_cast<size_t>(k) * stats_dim_ + i]) * z[i];
        a[k] = static_cast<float>(std::tanh(s / squash_));
    }
    return a;
}

Embedding ImageEncoder::encode(const Image& img) const {
    const auto s = image_stats(img, palette_);
    std::vector<float> z(stats_dim_);
    for (int i = 0; i < stats_dim_; ++i)
        z[i] = static_cast<float>(squash_z((s[i] - mu_[i]) / sigma_[i]));
    const auto a = concept_activations(z);

    std::vector<float> v(b_i_);
    for (int d = 0; d < dim_; ++d) {
        double acc = 0.0;
        for (int k = 0; k < n_concepts_; ++k)
            acc += static_cast<double>(p_[static_cast<size_t>(d) * n_concepts_ + k]) * a[k];
        double res = 0.0;
        for (int i = 0; i < stats_dim_; ++i)
            res += static_cast<double>(q_[static_cast<size_t>(d) * stats_dim_ + i]) * z[i];
        v[d] += static_cast<float>(semantic_gain_ * acc + residual_gain_ * res);
    }
    return finish_embedding(std::move(v));
}

void ImageEncoder::backward(const Image& img, const std::vector<float>& grad_embedding,
                            std::vector<float>& grad_pixels) const {
    require(static_cast<int>(grad_embedding.size()) == dim_, ErrorKind::SizeMismatch,
            "grad_embedding dim mismatch");

    // Recompute the forward chain (stats are the expensive part; the rest is
    // a handful of small matvecs).
    const auto s = image_stats(img, palette_);
    std::vector<float> zraw(stats_dim_), z(stats_dim_);
    for (int i = 0; i < stats_dim_; ++i) {
        zraw[i] = (s[i] - mu_[i]) / sigma_[i];
        z[i] = static_cast<float>(squash_z(zraw[i]));
    }
    const auto a = concept_activations(z);

    std::vector<double> v(dim_);
    for (int d = 0; d < dim_; ++d) {
        double acc = 0.0;
        for (int k = 0; k < n_concepts_; ++k)
            acc += static_cast<double>(p_[static_cast<size_t>(d) * n_concepts_ + k]) * a[k];
        double res = 0.0;
        for (int i = 0; i < stats_dim_; ++i)
            res += static_cast<double>(q_[static_cast<size_t>(d) * stats_dim_ + i]) * z[i];
        v[d] = b_i_[d] + semantic_gain_ * acc + residual_gain_ * res;
    }
    double n2 = 0.0;
    for (int d = 0; d < dim_; ++d) n2 += v[d] * v[d];
    const double n = std::sqrt(n2);

    // d(unit)/dv applied to g: (g - (g.u) u) / n with u = v/n.
    double gu = 0.0;
    for (int d = 0; d < dim_; ++d) gu += grad_embedding[d] * v[d] / n;
    std::vector<double> gv(dim_);
    for (int d = 0; d < dim_; ++d) gv[d] = (grad_embedding[d] - gu * v[d] / n) / n;

    // Back through the two branches into z.
    std::vector<double> ga(n_concepts_, 0.0);
    std::vector<double> gz(stats_dim_, 0.0);
    for (int d = 0; d < dim_; ++d) {
        const double gsem = semantic_gain_ * gv[d];
        for (int k = 0; k < n_concepts_; ++k)
            ga[k] += gsem * p_[static_cast<size_t>(d) * n_concepts_ + k];
        const double gres = residual_gain_ * gv[d];
        for (int i = 0; i < stats_dim_; ++i)
            gz[i] += gres * q_[static_cast<size_t>(d) * stats_dim_ + i];
    }
    for (int k = 0; k < n_concepts_; ++k) {
        const double dtanh = (1.0 - static_cast<double>(a[k]) * a[k]) / squash_;
        const double gk = ga[k] * dtanh;
        for (int i = 0; i < stats_dim_; ++i)
            gz[i] += gk * w_probe_[static_cast<size_t>(k) * stats_dim_ + i];
    }

    std::vector<float> gs(stats_dim_);
    for (int i = 0; i < stats_dim_; ++i)
        gs[i] = static_cast<float>(gz[i] * squash_z_deriv(zraw[i]) / sigma_[i]);
    image_stats_backward(img, palette_, gs.data(), grad_pixels);
}

// ---------------------------------------------------------------------------
// Directions and the loss.

Direction direction_between(const Embedding& a, const Embedding& b) {
    require(a.values.size() == b.values.size(), ErrorKind::SizeMismatch,
            "embedding dims differ");
    Direction d;
    d.values.resize(a.values.size());
    double n2 = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        d.values[i] = a.values[i] - b.values[i];
        n2 += static_cast<double>(d.values[i]) * d.values[i];
    }
    d.degenerate = n2 < 1e-24;
    return d;
}

Direction text_direction(const TextEncoder& enc, const std::string& style_text,
                         const LossConfig& cfg) {
    return direction_between(enc.encode(style_text), enc.encode(cfg.source_text));
}

Direction masked_image_direction(const ImageEncoder& enc, const Image& patch,
                                 const Embedding& masked_ref) {
    return direction_between(enc.encode(patch), masked_ref);
}

Direction masked_image_direction(const ImageEncoder& enc, const Image& patch,
                                 const Image& masked_ref) {
    return masked_image_direction(enc, patch, enc.encode(masked_ref));
}

double masked_directional_loss(const std::vector<Direction>& style_dirs,
                               const std::vector<Direction>& input_dirs,
                               const Direction& text_dir, const LossConfig& cfg,
                               LossBreakdown* breakdown,
                               std::vector<std::vector<float>>* grad_style) {
    const size_t n = style_dirs.size();
    require(n >= 1, ErrorKind::SizeMismatch, "empty style direction set");
    require(input_dirs.size() == n, ErrorKind::SizeMismatch,
            "style/input direction counts differ");
    require(static_cast<int>(n) == cfg.n_crop, ErrorKind::SizeMismatch,
            "direction count does not match cfg.n_crop");
    require(cfg.lambda >= 0.0, ErrorKind::InvalidJobSpec, "lambda must be nonnegative");

    const double eps = cfg.epsilon_norm ? 1e-8 : 0.0;
    auto checked_norm = [&](const Direction& d, const char* what) {
        if (!cfg.epsilon_norm)
            require(!d.degenerate, ErrorKind::DegenerateDirection,
                    std::string(what) + " direction is zero; cosine undefined");
        return d.norm() + eps;
    };

    const size_t dim = text_dir.values.size();
    const double nt = checked_norm(text_dir, "text");
    std::vector<double> ni(n);
    for (size_t k = 0; k < n; ++k) ni[k] = checked_norm(input_dirs[k], "input patch");

    if (grad_style) {
        grad_style->assign(n, std::vector<float>(dim, 0.0f));
    }

    double text_term = 0.0, image_term = 0.0;
    for (size_t j = 0; j < n; ++j) {
        const auto& sj = style_dirs[j].values;
        require(sj.size() == dim, ErrorKind::SizeMismatch, "direction dim mismatch");
        const double ns = checked_norm(style_dirs[j], "style patch");

        // d(1-cos(s,b))/ds = -(b/(|s||b|) - cos * s/|s|^2); the text term
        // carries weight 1/N, each image pair lambda/N^2.
        std::vector<double> g(dim, 0.0);

        // Image-text alignment term.
        {
            const double d = dot(sj, text_dir.values);
            double cosv = d / (ns * nt);
            cosv = std::clamp(cosv, -1.0, 1.0);
            text_term += 1.0 - cosv;
            if (grad_style) {
                const double w = 1.0 / static_cast<double>(n);
                for (size_t i = 0; i < dim; ++i)
                    g[i] -= w * (text_dir.values[i] / (ns * nt) - cosv * sj[i] / (ns * ns));
            }
        }

        // Image-image consistency term.
        for (size_t k = 0; k < n; ++k) {
            const auto& ik = input_dirs[k].values;
            require(ik.size() == dim, ErrorKind::SizeMismatch, "direction dim mismatch");
            const double d = dot(sj, ik);
            double cosv = d / (ns * ni[k]);
            cosv = std::clamp(cosv, -1.0, 1.0);
            image_term += 1.0 - cosv;
            if (grad_style) {
                const double w = cfg.lambda / static_cast<double>(n * n);
                for (size_t i = 0; i < dim; ++i)
                    g[i] -= w * (ik[i] / (ns * ni[k]) - cosv * sj[i] / (ns * ns));
            }
        }

        if (grad_style) {
            auto& gj = (*grad_style)[j];
            for (size_t i = 0; i < dim; ++i) gj[i] = static_cast<float>(g[i]);
        }
    }

    text_term /= static_cast<double>(n);
    image_term = cfg.lambda * image_term / static_cast<double>(n * n);
    const double total = text_term + image_term;
    if (breakdown) *breakdown = {total, text_term, image_term};
    require(std::isfinite(total), ErrorKind::NonFiniteLoss, "directional loss is not finite");
    return total;
}

}  // namespace objmst::clip
