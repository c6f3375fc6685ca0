// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/s2k.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

namespace objmst::s2k {

namespace {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<const MatF>;

constexpr float kNormEps = 1e-5f;  // instance-norm variance floor
constexpr float kVarEps = 1e-6f;   // attended-variance floor
constexpr const char* kTags[3] = {"relu3_1", "relu4_1", "relu5_1"};

// Tensor3 (C x H x W planar) <-> position-major matrix (H*W x C).
MatF tensor_to_mat(const Tensor3& t) {
    const size_t n = t.plane();
    MatF m(static_cast<Eigen::Index>(n), t.channels);
    for (int c = 0; c < t.channels; ++c) {
        const float* plane = &t.data[static_cast<size_t>(c) * n];
        for (size_t p = 0; p < n; ++p) m(static_cast<Eigen::Index>(p), c) = plane[p];
    }
    return m;
}

Tensor3 mat_to_tensor(const MatF& m, int c, int h, int w) {
    Tensor3 t(c, h, w);
    const size_t n = t.plane();
    for (int ch = 0; ch < c; ++ch) {
        float* plane = &t.data[static_cast<size_t>(ch) * n];
        for (size_t p = 0; p < n; ++p) plane[p] = m(static_cast<Eigen::Index>(p), ch);
    }
    return t;
}

// Per-channel normalization over the spatial positions (rows).
MatF instance_norm(const MatF& x) {
    MatF out(x.rows(), x.cols());
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double mean = 0.0, sq = 0.0;
        for (Eigen::Index p = 0; p < x.rows(); ++p) {
            mean += x(p, c);
            sq += static_cast<double>(x(p, c)) * x(p, c);
        }
        mean /= n;
        const double var = std::max(sq / n - mean * mean, 0.0);
        const float inv = static_cast<float>(1.0 / std::sqrt(var + kNormEps));
        for (Eigen::Index p = 0; p < x.rows(); ++p)
            out(p, c) = static_cast<float>((x(p, c) - mean) * inv);
    }
    return out;
}

// Gather non-overlapping 2x2 blocks of a (h x w) position-major feature map
// into rows of a (h/2*w/2 x 4c) matrix, position-major within the block.
MatF pack2x2(const MatF& src, int h, int w) {
    const int c = static_cast<int>(src.cols());
    const int ho = h / 2, wo = w / 2;
    MatF out(static_cast<Eigen::Index>(ho) * wo, static_cast<Eigen::Index>(4) * c);
    for (int y = 0; y < ho; ++y)
        for (int x = 0; x < wo; ++x) {
            const Eigen::Index row = static_cast<Eigen::Index>(y) * wo + x;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const Eigen::Index srow =
                        static_cast<Eigen::Index>(2 * y + dy) * w + (2 * x + dx);
                    out.block(row, (dy * 2 + dx) * c, 1, c) = src.block(srow, 0, 1, c);
                }
        }
    return out;
}

// Inverse of pack2x2: scatter rows of (hc*wc x 4c) into a (2hc x 2wc x c) map.
MatF unpack2x2(const MatF& src, int hc, int wc) {
    const int c = static_cast<int>(src.cols()) / 4;
    const int hf = hc * 2, wf = wc * 2;
    MatF out(static_cast<Eigen::Index>(hf) * wf, c);
    for (int y = 0; y < hc; ++y)
        for (int x = 0; x < wc; ++x) {
            const Eigen::Index row = static_cast<Eigen::Index>(y) * wc + x;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const Eigen::Index drow =
                        static_cast<Eigen::Index>(2 * y + dy) * wf + (2 * x + dx);
                    out.block(drow, 0, 1, c) = src.block(row, (dy * 2 + dx) * c, 1, c);
                }
        }
    return out;
}

// Row softmax with max subtraction; sums accumulated in double.
void softmax_rows(MatF& logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        float mx = logits(r, 0);
        for (Eigen::Index k = 1; k < logits.cols(); ++k) mx = std::max(mx, logits(r, k));
        double sum = 0.0;
        for (Eigen::Index k = 0; k < logits.cols(); ++k) {
            const float e = std::exp(logits(r, k) - mx);
            logits(r, k) = e;
            sum += e;
        }
        const float inv = static_cast<float>(1.0 / sum);
        for (Eigen::Index k = 0; k < logits.cols(); ++k) logits(r, k) *= inv;
    }
}

}  // namespace

// Pooled keys/values of one style set at one level. Region metadata drives
// the coarse-to-fine prior; a2a banks leave it empty.
struct StyleTransfer::KeyBank {
    int nk = 0;
    MatF K;   // nk x attn_dim
    MatF V;   // nk x C, raw style means
    MatF V2;  // nk x C, raw style second moments
    std::vector<int> rep, ri, rj;              // per key (s2k only)
    std::vector<std::array<int, 2>> rep_grid;  // per rep: region grid (rows, cols)
    std::vector<int> rep_offset;               // per rep: first key index
    std::string layout;
};

StyleTransfer::StyleTransfer(WeightsStore& store) {
    const Checkpoint* enc = nullptr;
    try {
        enc = &store.load("vgg_encoder");
    } catch (const Error& e) {
        raise(ErrorKind::EncoderUnavailable,
              std::string("feature encoder checkpoint unavailable (") + e.what() + ")");
    }
    try {
        const auto ch = enc->header.at("channels").get<std::vector<int>>();
        const auto st = enc->header.at("strides").get<std::vector<int>>();
        require(ch.size() == 3 && st.size() == 3, ErrorKind::EncoderUnavailable,
                "feature encoder header malformed");
        for (int l = 0; l < 3; ++l) {
            channels_[l] = ch[l];
            strides_[l] = st[l];
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::EncoderUnavailable,
              std::string("feature encoder header malformed: ") + e.what());
    }
    enc_w_[0] = enc->blob("W1");
    enc_w_[1] = enc->blob("W2");
    enc_w_[2] = enc->blob("W3");

    const Checkpoint* mapper = nullptr;
    try {
        mapper = &store.load("s2k_mapper");
    } catch (const Error& e) {
        raise(ErrorKind::CheckpointMissing,
              std::string("attention mapper checkpoint unavailable (") + e.what() + ")");
    }
    try {
        attn_dim_ = mapper->header.at("attn_dim").get<int>();
        region_grid_ = mapper->header.at("region_grid").get<int>();
        prior_gain_ = mapper->header.at("prior_gain").get<float>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::CheckpointMissing,
              std::string("attention mapper header malformed: ") + e.what());
    }
    for (int l = 0; l < 3; ++l) {
        wq_[l] = mapper->blob("Wq" + std::to_string(l + 1));
        wk_[l] = mapper->blob("Wk" + std::to_string(l + 1));
        require(static_cast<int>(wq_[l].size()) == attn_dim_ * channels_[l] &&
                    static_cast<int>(wk_[l].size()) == attn_dim_ * channels_[l],
                ErrorKind::CheckpointMissing, "attention projection size malformed");
    }

    const Checkpoint* dec = nullptr;
    try {
        dec = &store.load("decoder");
    } catch (const Error& e) {
        raise(ErrorKind::DecoderUnavailable,
              std::string("decoder checkpoint unavailable (") + e.what() + ")");
    }
    try {
        const auto alpha = dec->header.at("merge_alpha").get<std::vector<float>>();
        require(alpha.size() == 2, ErrorKind::DecoderUnavailable,
                "decoder merge_alpha malformed");
        merge_alpha_[0] = alpha[0];
        merge_alpha_[1] = alpha[1];
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::DecoderUnavailable,
              std::string("decoder header malformed: ") + e.what());
    }
    dec_u_[0] = dec->blob("U1");
    dec_u_[1] = dec->blob("U2");
    dec_u_[2] = dec->blob("U3");
}

void StyleTransfer::check_pyramid(const FeaturePyramid& p, const char* what) const {
    for (int l = 0; l < 3; ++l) {
        const FeatureLevel& lev = p.levels[l];
        require(lev.tag == kTags[l], ErrorKind::LevelMismatch,
                std::string(what) + ": level " + std::to_string(l) + " tagged '" +
                    lev.tag + "', expected '" + kTags[l] + "'");
        require(lev.feats.channels == channels_[l], ErrorKind::LevelMismatch,
                std::string(what) + ": level " + lev.tag + " has " +
                    std::to_string(lev.feats.channels) + " channels, encoder makes " +
                    std::to_string(channels_[l]));
        require(lev.feats.height >= 1 && lev.feats.width >= 1 &&
                    lev.feats.data.size() == static_cast<size_t>(lev.feats.channels) *
                                                 lev.feats.plane(),
                ErrorKind::LevelMismatch,
                std::string(what) + ": level " + lev.tag + " tensor malformed");
        if (l > 0) {
            const Tensor3& up = p.levels[l - 1].feats;
            require(up.height == lev.feats.height * 2 && up.width == lev.feats.width * 2,
                    ErrorKind::LevelMismatch,
                    std::string(what) + ": level dims do not halve between " +
                        kTags[l - 1] + " and " + kTags[l]);
        }
    }
    require(p.source_h == p.levels[0].feats.height * strides_[0] &&
                p.source_w == p.levels[0].feats.width * strides_[0],
            ErrorKind::LevelMismatch,
            std::string(what) + ": source resolution disagrees with level dims");
}

FeaturePyramid StyleTransfer::extract_features(const Image& image) const {
    image.validate("extract_features");
    require(image.height % 16 == 0 && image.width % 16 == 0, ErrorKind::DimensionMismatch,
            "feature extraction needs height and width divisible by 16, got " +
                std::to_string(image.height) + "x" + std::to_string(image.width));

    // Level 0: 4x4x3 pixel blocks (position-major, RGB interleaved) -> W1.
    const int h0 = image.height / 4, w0 = image.width / 4;
    MatF v0(static_cast<Eigen::Index>(h0) * w0, 48);
    for (int y = 0; y < h0; ++y)
        for (int x = 0; x < w0; ++x) {
            const Eigen::Index row = static_cast<Eigen::Index>(y) * w0 + x;
            for (int py = 0; py < 4; ++py)
                for (int px = 0; px < 4; ++px)
                    for (int c = 0; c < 3; ++c)
                        v0(row, (py * 4 + px) * 3 + c) = image.at(4 * y + py, 4 * x + px, c);
        }
    MapM w1m(enc_w_[0].data(), channels_[0], 48);
    MatF f0 = v0 * w1m.transpose();

    // Deeper levels: 2x2 blocks of the previous level -> W2 / W3.
    MapM w2m(enc_w_[1].data(), channels_[1], static_cast<Eigen::Index>(4) * channels_[0]);
    MatF f1 = pack2x2(f0, h0, w0) * w2m.transpose();
    MapM w3m(enc_w_[2].data(), channels_[2], static_cast<Eigen::Index>(4) * channels_[1]);
    MatF f2 = pack2x2(f1, h0 / 2, w0 / 2) * w3m.transpose();

    FeaturePyramid p;
    p.source_h = image.height;
    p.source_w = image.width;
    p.levels[0] = {kTags[0], mat_to_tensor(f0, channels_[0], h0, w0)};
    p.levels[1] = {kTags[1], mat_to_tensor(f1, channels_[1], h0 / 2, w0 / 2)};
    p.levels[2] = {kTags[2], mat_to_tensor(f2, channels_[2], h0 / 4, w0 / 4)};
    return p;
}

Tensor3 StyleTransfer::transfer_level(int level, const Tensor3& content,
                                      const KeyBank& bank, const std::vector<float>* prior,
                                      std::vector<float>* attn_out) const {
    const Eigen::Index nq = static_cast<Eigen::Index>(content.plane());
    const int c = content.channels;
    MatF raw_c = tensor_to_mat(content);
    MatF nrm_c = instance_norm(raw_c);

    MapM wqm(wq_[level].data(), attn_dim_, c);
    MatF q = nrm_c * wqm.transpose();
    const float scale = 1.0f / std::sqrt(static_cast<float>(attn_dim_));

    if (attn_out) attn_out->assign(static_cast<size_t>(nq) * bank.nk, 0.0f);
    if (prior)
        require(prior->size() == static_cast<size_t>(nq) * bank.nk,
                ErrorKind::LevelMismatch, "attention prior shape mismatch");

    MatF mean(nq, c), e2(nq, c);
    const Eigen::Index block = attn_out ? nq : std::min<Eigen::Index>(nq, 1024);
    for (Eigen::Index r0 = 0; r0 < nq; r0 += block) {
        const Eigen::Index rows = std::min(block, nq - r0);
        MatF logits = (q.middleRows(r0, rows) * bank.K.transpose()) * scale;
        if (prior) {
            for (Eigen::Index r = 0; r < rows; ++r)
                for (int k = 0; k < bank.nk; ++k)
                    logits(r, k) +=
                        prior_gain_ * (*prior)[static_cast<size_t>(r0 + r) * bank.nk + k];
        }
        softmax_rows(logits);
        mean.middleRows(r0, rows) = logits * bank.V;
        e2.middleRows(r0, rows) = logits * bank.V2;
        if (attn_out)
            std::memcpy(attn_out->data() + static_cast<size_t>(r0) * bank.nk,
                        logits.data(), static_cast<size_t>(rows) * bank.nk * sizeof(float));
    }

    // AdaAttN statistics transfer: attended std times normalized content plus
    // attended mean.
    MatF out(nq, c);
    for (Eigen::Index p = 0; p < nq; ++p)
        for (int ch = 0; ch < c; ++ch) {
            const float var =
                std::max(e2(p, ch) - mean(p, ch) * mean(p, ch), 0.0f) + kVarEps;
            out(p, ch) = std::sqrt(var) * nrm_c(p, ch) + mean(p, ch);
        }
    return mat_to_tensor(out, c, content.height, content.width);
}

FeaturePyramid StyleTransfer::map_impl(const FeaturePyramid& content,
                                       const std::vector<const FeaturePyramid*>& styles,
                                       TransferConfig::Attention attention,
                                       bool average_reps,
                                       AttentionMap* attention_out) const {
    check_pyramid(content, "attention mapping (content)");
    require(!styles.empty(), ErrorKind::LevelMismatch,
            "attention mapping needs at least one style pyramid");
    for (const FeaturePyramid* s : styles)
        check_pyramid(*s, "attention mapping (style)");

    // Alternative arm: one transfer per representation, outputs averaged.
    // The reported attention map is representation 0's.
    if (average_reps && styles.size() > 1) {
        FeaturePyramid acc = map_impl(content, {styles[0]}, attention, false, attention_out);
        if (attention_out)
            for (auto& lev : attention_out->levels)
                lev.key_layout += " (rep 0 of " + std::to_string(styles.size()) +
                                  ", averaged-transfer arm)";
        for (size_t s = 1; s < styles.size(); ++s) {
            const FeaturePyramid one = map_impl(content, {styles[s]}, attention, false, nullptr);
            for (int l = 0; l < 3; ++l)
                for (size_t i = 0; i < acc.levels[l].feats.data.size(); ++i)
                    acc.levels[l].feats.data[i] += one.levels[l].feats.data[i];
        }
        const float inv = 1.0f / static_cast<float>(styles.size());
        for (int l = 0; l < 3; ++l)
            for (float& x : acc.levels[l].feats.data) x *= inv;
        return acc;
    }

    const bool s2k = attention == TransferConfig::Attention::s2k;
    FeaturePyramid out;
    out.source_h = content.source_h;
    out.source_w = content.source_w;

    std::vector<float> attn_prev;
    KeyBank bank_prev;
    if (attention_out) attention_out->levels.clear();

    for (int l = 2; l >= 0; --l) {
        // Build the key bank for this level.
        KeyBank bank;
        MapM wkm(wk_[l].data(), attn_dim_, channels_[l]);
        std::vector<MatF> pooled_nrm_rows;
        for (size_t s = 0; s < styles.size(); ++s) {
            const Tensor3& t = styles[s]->levels[l].feats;
            MatF raw = tensor_to_mat(t);
            MatF nrm = instance_norm(raw);
            if (s2k) {
                const int gr = std::min(region_grid_, t.height);
                const int gc = std::min(region_grid_, t.width);
                bank.rep_offset.push_back(bank.nk);
                bank.rep_grid.push_back({gr, gc});
                MatF pn(static_cast<Eigen::Index>(gr) * gc, channels_[l]);
                MatF pv(pn.rows(), channels_[l]), pv2(pn.rows(), channels_[l]);
                for (int i = 0; i < gr; ++i)
                    for (int j = 0; j < gc; ++j) {
                        const int y0 = i * t.height / gr, y1 = (i + 1) * t.height / gr;
                        const int x0 = j * t.width / gc, x1 = (j + 1) * t.width / gc;
                        std::vector<double> an(channels_[l], 0.0), av(channels_[l], 0.0),
                            av2(channels_[l], 0.0);
                        int cnt = 0;
                        for (int y = y0; y < y1; ++y)
                            for (int x = x0; x < x1; ++x, ++cnt) {
                                const Eigen::Index row =
                                    static_cast<Eigen::Index>(y) * t.width + x;
                                for (int ch = 0; ch < channels_[l]; ++ch) {
                                    an[ch] += nrm(row, ch);
                                    av[ch] += raw(row, ch);
                                    av2[ch] +=
                                        static_cast<double>(raw(row, ch)) * raw(row, ch);
                                }
                            }
                        const Eigen::Index kr = static_cast<Eigen::Index>(i) * gc + j;
                        for (int ch = 0; ch < channels_[l]; ++ch) {
                            pn(kr, ch) = static_cast<float>(an[ch] / cnt);
                            pv(kr, ch) = static_cast<float>(av[ch] / cnt);
                            pv2(kr, ch) = static_cast<float>(av2[ch] / cnt);
                        }
                        bank.rep.push_back(static_cast<int>(s));
                        bank.ri.push_back(i);
                        bank.rj.push_back(j);
                    }
                pooled_nrm_rows.push_back(std::move(pn));
                bank.nk += gr * gc;
                bank.V.conservativeResize(bank.nk, channels_[l]);
                bank.V2.conservativeResize(bank.nk, channels_[l]);
                bank.V.bottomRows(pv.rows()) = pv;
                bank.V2.bottomRows(pv2.rows()) = pv2;
            } else {
                bank.rep_offset.push_back(bank.nk);
                pooled_nrm_rows.push_back(std::move(nrm));
                const Eigen::Index np = static_cast<Eigen::Index>(t.plane());
                bank.V.conservativeResize(bank.nk + np, channels_[l]);
                bank.V2.conservativeResize(bank.nk + np, channels_[l]);
                bank.V.bottomRows(np) = raw;
                bank.V2.bottomRows(np) = raw.array().square().matrix();
                bank.nk += static_cast<int>(np);
            }
        }
        MatF pooled(bank.nk, channels_[l]);
        {
            Eigen::Index at = 0;
            for (const MatF& r : pooled_nrm_rows) {
                pooled.middleRows(at, r.rows()) = r;
                at += r.rows();
            }
        }
        bank.K = pooled * wkm.transpose();
        bank.layout =
            s2k ? std::to_string(styles.size()) + " rep(s), up-to-" +
                      std::to_string(region_grid_) + "x" + std::to_string(region_grid_) +
                      " pooled style regions (" + std::to_string(bank.nk) + " keys)"
                : std::to_string(styles.size()) + " rep(s), all " +
                      std::to_string(bank.nk) + " style positions as keys";

        // Coarse-to-fine prior: each query inherits the attention row of its
        // coarse parent query, with fine regions mapped into coarse regions.
        std::vector<float> prior;
        const Tensor3& cf = content.levels[l].feats;
        if (s2k && l < 2 && !attn_prev.empty()) {
            const Tensor3& cc = content.levels[l + 1].feats;
            std::vector<int> parent(bank.nk);
            for (int k = 0; k < bank.nk; ++k) {
                const int r = bank.rep[k];
                const auto [grf, gcf] = bank.rep_grid[r];
                const auto [grc, gcc] = bank_prev.rep_grid[r];
                parent[k] = bank_prev.rep_offset[r] +
                            (bank.ri[k] * grc / grf) * gcc + (bank.rj[k] * gcc / gcf);
            }
            prior.resize(static_cast<size_t>(cf.plane()) * bank.nk);
            for (int y = 0; y < cf.height; ++y)
                for (int x = 0; x < cf.width; ++x) {
                    const size_t qf = static_cast<size_t>(y) * cf.width + x;
                    const size_t qc =
                        static_cast<size_t>(y / 2) * cc.width + (x / 2);
                    for (int k = 0; k < bank.nk; ++k)
                        prior[qf * bank.nk + k] =
                            attn_prev[qc * bank_prev.nk + parent[k]];
                }
        }

        std::vector<float> attn;
        const bool keep_attn = s2k || attention_out != nullptr;
        out.levels[l].tag = kTags[l];
        out.levels[l].feats =
            transfer_level(l, cf, bank, prior.empty() ? nullptr : &prior,
                           keep_attn ? &attn : nullptr);
        if (attention_out)
            attention_out->levels.push_back({kTags[l], static_cast<int>(cf.plane()),
                                             bank.nk, attn, bank.layout});
        attn_prev = std::move(attn);
        bank_prev = std::move(bank);
    }
    return out;
}

FeaturePyramid StyleTransfer::s2k_map(const FeaturePyramid& content,
                                      const FeaturePyramid& style,
                                      AttentionMap* attention) const {
    return map_impl(content, {&style}, TransferConfig::Attention::s2k, false, attention);
}

FeaturePyramid StyleTransfer::s2k_map(const FeaturePyramid& content,
                                      const std::vector<FeaturePyramid>& styles,
                                      const TransferConfig& cfg,
                                      AttentionMap* attention) const {
    std::vector<const FeaturePyramid*> ptrs;
    for (const auto& s : styles) ptrs.push_back(&s);
    return map_impl(content, ptrs, TransferConfig::Attention::s2k, cfg.average_reps,
                    attention);
}

FeaturePyramid StyleTransfer::a2a_map(const FeaturePyramid& content,
                                      const FeaturePyramid& style,
                                      AttentionMap* attention) const {
    return map_impl(content, {&style}, TransferConfig::Attention::a2a, false, attention);
}

FeaturePyramid StyleTransfer::a2a_map(const FeaturePyramid& content,
                                      const std::vector<FeaturePyramid>& styles,
                                      const TransferConfig& cfg,
                                      AttentionMap* attention) const {
    std::vector<const FeaturePyramid*> ptrs;
    for (const auto& s : styles) ptrs.push_back(&s);
    return map_impl(content, ptrs, TransferConfig::Attention::a2a, cfg.average_reps,
                    attention);
}

Image StyleTransfer::decode(const FeaturePyramid& p) const {
    check_pyramid(p, "decode");
    const Tensor3& t0 = p.levels[0].feats;
    const Tensor3& t1 = p.levels[1].feats;
    const Tensor3& t2 = p.levels[2].feats;

    // Coarse path up: least-norm preimages, blended into the recorded levels.
    MapM u3m(dec_u_[2].data(), static_cast<Eigen::Index>(4) * channels_[1], channels_[2]);
    MatF est1 = unpack2x2(tensor_to_mat(t2) * u3m.transpose(), t2.height, t2.width);
    MatF m1 = (1.0f - merge_alpha_[0]) * tensor_to_mat(t1) + merge_alpha_[0] * est1;

    MapM u2m(dec_u_[1].data(), static_cast<Eigen::Index>(4) * channels_[0], channels_[1]);
    MatF est0 = unpack2x2(m1 * u2m.transpose(), t1.height, t1.width);
    MatF m0 = (1.0f - merge_alpha_[1]) * tensor_to_mat(t0) + merge_alpha_[1] * est0;

    MapM u1m(dec_u_[0].data(), 48, channels_[0]);
    MatF px = m0 * u1m.transpose();  // n0 x 48, 4x4 RGB blocks

    Image img(t0.height * 4, t0.width * 4);
    for (int y = 0; y < t0.height; ++y)
        for (int x = 0; x < t0.width; ++x) {
            const Eigen::Index row = static_cast<Eigen::Index>(y) * t0.width + x;
            for (int py = 0; py < 4; ++py)
                for (int px_ = 0; px_ < 4; ++px_)
                    for (int c = 0; c < 3; ++c)
                        img.at(4 * y + py, 4 * x + px_, c) =
                            std::clamp(px(row, (py * 4 + px_) * 3 + c), 0.0f, 1.0f);
        }
    return img;
}

Image StyleTransfer::stylize_salient(
    const Image& content, const Mask& mask,
    const std::vector<inversion::StyleRepresentation>& style_reps,
    const TransferConfig& cfg) const {
    content.validate("stylize_salient content");
    require(mask.height == content.height && mask.width == content.width,
            ErrorKind::DimensionMismatch, "mask and content dims differ");
    require(mask.is_binary(), ErrorKind::EmptyMask, "mask must be strictly binary");
    require(mask.area() > 0, ErrorKind::EmptyMask,
            "mask selects no pixels; nothing to stylize");
    require(!style_reps.empty(), ErrorKind::InvalidJobSpec,
            "stylize_salient needs at least one style representation");
    for (const auto& rep : style_reps)
        require(rep.target == "fg", ErrorKind::InvalidJobSpec,
                "stylize_salient expects fg-target style representations, got '" +
                    rep.target + "'");

    const Image masked = apply_mask(content, mask);
    const FeaturePyramid fc = extract_features(masked);
    std::vector<FeaturePyramid> fs;
    fs.reserve(style_reps.size());
    for (const auto& rep : style_reps) fs.push_back(extract_features(rep.image));

    const FeaturePyramid fcs = cfg.attention == TransferConfig::Attention::a2a
                                   ? a2a_map(fc, fs, cfg)
                                   : s2k_map(fc, fs, cfg);
    return apply_mask(decode(fcs), mask);
}

// ---------------------------------------------------------------------------
// Debug dump.

void dump_pyramid(const FeaturePyramid& p, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::StageFailed, "cannot open " + path.string());
    out.write("OBJP1\n", 6);
    for (const FeatureLevel& lev : p.levels) {
        const uint32_t tlen = static_cast<uint32_t>(lev.tag.size());
        const int32_t c = lev.feats.channels, h = lev.feats.height, w = lev.feats.width;
        out.write(reinterpret_cast<const char*>(&tlen), 4);
        out.write(lev.tag.data(), tlen);
        out.write(reinterpret_cast<const char*>(&c), 4);
        out.write(reinterpret_cast<const char*>(&h), 4);
        out.write(reinterpret_cast<const char*>(&w), 4);
        out.write(reinterpret_cast<const char*>(lev.feats.data.data()),
                  static_cast<std::streamsize>(lev.feats.data.size() * sizeof(float)));
    }
    require(out.good(), ErrorKind::StageFailed, "failed writing " + path.string());
}

FeaturePyramid load_pyramid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::FileNotFound, "cannot open " + path.string());
    char magic[6];
    in.read(magic, 6);
    require(in.good() && std::memcmp(magic, "OBJP1\n", 6) == 0, ErrorKind::CorruptImage,
            "not a pyramid dump: " + path.string());
    FeaturePyramid p;
    for (int l = 0; l < 3; ++l) {
        uint32_t tlen = 0;
        in.read(reinterpret_cast<char*>(&tlen), 4);
        require(in.good() && tlen <= 64, ErrorKind::CorruptImage, "pyramid tag malformed");
        std::string tag(tlen, '\0');
        in.read(tag.data(), tlen);
        int32_t c = 0, h = 0, w = 0;
        in.read(reinterpret_cast<char*>(&c), 4);
        in.read(reinterpret_cast<char*>(&h), 4);
        in.read(reinterpret_cast<char*>(&w), 4);
        require(in.good() && c > 0 && h > 0 && w > 0, ErrorKind::CorruptImage,
                "pyramid level header malformed");
        Tensor3 t(c, h, w);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        require(in.good(), ErrorKind::CorruptImage, "pyramid data truncated");
        p.levels[l] = {tag, std::move(t)};
    }
    p.source_h = p.levels[0].feats.height * 4;
    p.source_w = p.levels[0].feats.width * 4;
    return p;
}

}  // namespace objmst::s2k
