// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural builders for the builtin checkpoints. Everything here must stay
// bit-stable across platforms: random numbers come from SplitMix64 streams,
// gaussians from Irwin-Hall sums, and exponentials from det_exp. The only
// libm calls are std::sqrt / ldexp, which IEEE 754 requires to be exact.

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "objmst/common.hpp"
#include "objmst/rng.hpp"
#include "objmst/weights.hpp"

namespace objmst {

namespace {

// ---------------------------------------------------------------------------
// Shared design tables.

struct Concept {
    const char* words;  // comma separated
    float r, g, b;      // anchor color
    float texture;      // 0 = smooth wash, 1 = fine busy texture
};

// The joint embedding space is spanned by these 32 style concepts. Word lists
// drive the text encoder; anchor colors and texture levels wire the image
// probe so both modalities agree on direction.
constexpr Concept kConcepts[] = {
    {"fire,flame,flames,burning,lava,ember,embers", 1.00f, 0.35f, 0.05f, 0.70f},
    {"ice,icy,frozen,frost,frosty,glacier", 0.62f, 0.85f, 0.95f, 0.45f},
    {"water,ocean,sea,waves,wave,aqua,ripples", 0.15f, 0.45f, 0.80f, 0.50f},
    {"starry,stars,night,galaxy,nebula,cosmos", 0.10f, 0.12f, 0.35f, 0.65f},
    {"sand,desert,dune,dunes,sandy", 0.86f, 0.72f, 0.46f, 0.35f},
    {"crystal,crystalline,gem,gemstone,diamond,quartz", 0.75f, 0.85f, 0.95f, 0.55f},
    {"copper,bronze,brass,metallic,metal", 0.72f, 0.45f, 0.20f, 0.40f},
    {"graffiti,spray,mural,street", 0.85f, 0.20f, 0.55f, 0.80f},
    {"cubism,cubist,geometric,abstract,angular", 0.70f, 0.60f, 0.30f, 0.75f},
    {"money,dollar,dollars,banknote,banknotes,currency,cash", 0.45f, 0.60f, 0.40f, 0.60f},
    {"glitter,glittering,sparkle,sparkling,shimmering,sequins", 0.90f, 0.80f, 0.50f, 0.90f},
    {"sketch,pencil,drawing,charcoal,lines", 0.45f, 0.45f, 0.45f, 0.55f},
    {"oil,impasto,brushstrokes,painterly,painting", 0.60f, 0.50f, 0.35f, 0.60f},
    {"watercolor,wash,pastel,gouache", 0.80f, 0.75f, 0.85f, 0.30f},
    {"mosaic,tiles,tiled,stained,tessellated", 0.50f, 0.40f, 0.60f, 0.85f},
    {"wood,wooden,bark,timber,grain", 0.55f, 0.38f, 0.20f, 0.50f},
    {"marble,veined,alabaster,porcelain", 0.88f, 0.88f, 0.90f, 0.35f},
    {"neon,glowing,fluorescent,cyberpunk,glow", 0.20f, 0.95f, 0.80f, 0.70f},
    {"rust,rusty,corroded,weathered,patina", 0.55f, 0.30f, 0.15f, 0.65f},
    {"leaf,leaves,foliage,jungle,moss,mossy", 0.25f, 0.55f, 0.20f, 0.55f},
    {"smoke,fog,mist,misty,haze,hazy", 0.65f, 0.65f, 0.70f, 0.25f},
    {"candy,sweet,bubblegum,lollipop,sugary", 0.95f, 0.50f, 0.70f, 0.45f},
    {"snow,snowy,winter,blizzard,frostbitten", 0.92f, 0.94f, 0.97f, 0.30f},
    {"gold,golden,gilded,aurum", 0.95f, 0.78f, 0.30f, 0.50f},
    {"lightning,electric,storm,thunder,sparks", 0.80f, 0.85f, 1.00f, 0.75f},
    {"coral,reef,underwater,anemone", 0.95f, 0.55f, 0.45f, 0.60f},
    {"lace,knitted,fabric,woven,embroidery,textile", 0.85f, 0.82f, 0.78f, 0.80f},
    {"plasma,psychedelic,vivid,swirl,swirling,trippy", 0.60f, 0.20f, 0.80f, 0.85f},
    {"stone,rock,granite,cobble,slate", 0.50f, 0.50f, 0.48f, 0.55f},
    {"blossom,floral,flowers,sakura,petals,bloom", 0.95f, 0.70f, 0.80f, 0.50f},
    {"denim,jeans,indigo,woad", 0.25f, 0.35f, 0.55f, 0.60f},
    {"chalk,crayon,pastelboard,matte", 0.90f, 0.90f, 0.85f, 0.40f},
};
constexpr int kNumConcepts = static_cast<int>(std::size(kConcepts));
static_assert(kNumConcepts == 32);

// 24 reference colors for the soft palette histogram in the image statistics.
constexpr float kPalette[][3] = {
    {0.08f, 0.08f, 0.08f}, {0.95f, 0.95f, 0.95f}, {0.50f, 0.50f, 0.50f},
    {0.75f, 0.75f, 0.78f}, {0.90f, 0.15f, 0.12f}, {0.95f, 0.55f, 0.15f},
    {0.95f, 0.85f, 0.20f}, {0.65f, 0.80f, 0.20f}, {0.20f, 0.65f, 0.25f},
    {0.15f, 0.60f, 0.55f}, {0.20f, 0.75f, 0.85f}, {0.45f, 0.65f, 0.90f},
    {0.18f, 0.30f, 0.75f}, {0.35f, 0.20f, 0.65f}, {0.60f, 0.25f, 0.75f},
    {0.85f, 0.35f, 0.70f}, {0.95f, 0.65f, 0.75f}, {0.55f, 0.35f, 0.18f},
    {0.78f, 0.62f, 0.42f}, {0.90f, 0.82f, 0.66f}, {0.50f, 0.52f, 0.25f},
    {0.55f, 0.12f, 0.15f}, {0.12f, 0.18f, 0.38f}, {0.95f, 0.72f, 0.55f},
};
constexpr int kPaletteSize = static_cast<int>(std::size(kPalette));
static_assert(kPaletteSize == 24);

constexpr int kEmbedDim = 512;
constexpr int kStatsDim = 77;
constexpr int kLatentDim = 64;
constexpr int kGenHidden = 96;
constexpr int kGenBasis = 48;
constexpr int kGenTheta = 3 * kGenBasis + 3;  // per-channel coefficients + bias
constexpr int kAttnDim = 128;
constexpr int kLpipsChannels = 16;

std::vector<float> gaussian_vec(Rng& rng, size_t n, float sigma = 1.0f) {
    std::vector<float> v(n);
    for (auto& x : v) x = sigma * rng.gauss_f();
    return v;
}

void normalize_vec(std::vector<float>& v, float target_norm) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    const double n = std::sqrt(s);
    require(n > 1e-12, ErrorKind::CheckpointMissing, "degenerate vector in builder");
    const float k = static_cast<float>(target_norm / n);
    for (auto& x : v) x *= k;
}

// Rows of `m` (rows x cols, row-major) are orthonormalized in place via
// modified Gram-Schmidt. Requires rows <= cols.
void orthonormalize_rows(std::vector<float>& m, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        float* ri = m.data() + static_cast<size_t>(i) * cols;
        for (int j = 0; j < i; ++j) {
            const float* rj = m.data() + static_cast<size_t>(j) * cols;
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) dot += static_cast<double>(ri[c]) * rj[c];
            for (int c = 0; c < cols; ++c) ri[c] -= static_cast<float>(dot) * rj[c];
        }
        double s = 0.0;
        for (int c = 0; c < cols; ++c) s += static_cast<double>(ri[c]) * ri[c];
        const double n = std::sqrt(s);
        require(n > 1e-9, ErrorKind::CheckpointMissing, "rank collapse in Gram-Schmidt");
        for (int c = 0; c < cols; ++c) ri[c] = static_cast<float>(ri[c] / n);
    }
}

// Shared concept projection P (kEmbedDim x kNumConcepts, orthonormal columns),
// identical for the text and image encoders.
std::vector<float> build_concept_projection(uint64_t seed) {
    Rng rng(derive_seed(seed, "concept-projection"));
    // Build as rows in concept-major layout, orthonormalize, then transpose.
    std::vector<float> rows = gaussian_vec(rng, static_cast<size_t>(kNumConcepts) * kEmbedDim);
    orthonormalize_rows(rows, kNumConcepts, kEmbedDim);
    std::vector<float> p(static_cast<size_t>(kEmbedDim) * kNumConcepts);
    for (int k = 0; k < kNumConcepts; ++k)
        for (int d = 0; d < kEmbedDim; ++d)
            p[static_cast<size_t>(d) * kNumConcepts + k] =
                rows[static_cast<size_t>(k) * kEmbedDim + d];
    return p;
}

std::vector<float> modality_anchor(uint64_t seed, const char* tag, float norm) {
    Rng common(derive_seed(seed, "modality-common"));
    std::vector<float> base = gaussian_vec(common, kEmbedDim);
    normalize_vec(base, 1.0f);
    Rng own(derive_seed(seed, tag));
    std::vector<float> gap = gaussian_vec(own, kEmbedDim);
    normalize_vec(gap, 1.0f);
    // Anchors of both modalities share a common core plus a modality gap, so
    // cross-modal cosine has a realistic nonzero baseline.
    std::vector<float> v(kEmbedDim);
    for (int d = 0; d < kEmbedDim; ++d) v[d] = base[d] + 1.0f * gap[d];
    normalize_vec(v, norm);
    return v;
}

nlohmann::json concepts_json() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : kConcepts) {
        nlohmann::json words = nlohmann::json::array();
        std::string acc;
        for (const char* p = c.words;; ++p) {
            if (*p == ',' || *p == '\0') {
                words.push_back(acc);
                acc.clear();
                if (*p == '\0') break;
            } else {
                acc.push_back(*p);
            }
        }
        arr.push_back({{"words", words},
                       {"color", {c.r, c.g, c.b}},
                       {"texture", c.texture}});
    }
    return arr;
}

nlohmann::json palette_json() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : kPalette) arr.push_back({p[0], p[1], p[2]});
    return arr;
}

// Normalization constants for the 77-dim image statistics vector. Hand-set to
// the rough scale of each block so z-scores land near N(0,1); exact
// calibration is irrelevant because all downstream weights are trainedable
// parameters of the checkpoint.
void stat_norms(std::vector<float>& mu, std::vector<float>& sigma) {
    mu.assign(kStatsDim, 0.0f);
    sigma.assign(kStatsDim, 1.0f);
    auto set = [&](int lo, int hi, float m, float s) {
        for (int i = lo; i < hi; ++i) {
            mu[i] = m;
            sigma[i] = s;
        }
    };
    set(0, 3, 0.50f, 0.22f);                      // mean RGB
    set(3, 6, 0.18f, 0.10f);                      // std RGB
    set(6, 30, 1.0f / kPaletteSize, 0.15f);       // palette bins
    set(30, 46, 0.055f, 0.045f);                  // texture energies
    set(46, 58, 0.50f, 0.24f);                    // region means
    set(58, 62, 0.060f, 0.050f);                  // region energies
    set(62, 65, 0.00f, 0.16f);                    // center-border contrast
    set(65, 71, 0.00f, 0.12f);                    // row/col slopes
    mu[71] = 0.50f; sigma[71] = 0.22f;            // luminance mean
    mu[72] = 0.18f; sigma[72] = 0.10f;            // luminance std
    mu[73] = 0.00f; sigma[73] = 0.80f;            // luminance skew
    set(74, 77, 0.045f, 0.040f);                  // high-frequency residual
}

// The probe matrix maps z-scored image statistics to concept activations.
// Each concept row is wired by design: palette bins near the anchor color
// respond positively, texture bins near the preferred scale respond
// positively, and a small random remainder keeps rows distinct.
std::vector<float> build_probe(uint64_t seed) {
    Rng rng(derive_seed(seed, "probe"));
    std::vector<float> w(static_cast<size_t>(kNumConcepts) * kStatsDim, 0.0f);
    for (int k = 0; k < kNumConcepts; ++k) {
        float* row = w.data() + static_cast<size_t>(k) * kStatsDim;
        const Concept& c = kConcepts[k];

        // Palette affinity, softmax-like over the 24 reference colors. Sharp
        // enough that neighboring hues get distinct rows.
        double aff[kPaletteSize];
        double aff_sum = 0.0;
        for (int p = 0; p < kPaletteSize; ++p) {
            const double dr = c.r - kPalette[p][0];
            const double dg = c.g - kPalette[p][1];
            const double db = c.b - kPalette[p][2];
            aff[p] = det_exp(-14.0 * (dr * dr + dg * dg + db * db));
            aff_sum += aff[p];
        }
        for (int p = 0; p < kPaletteSize; ++p)
            row[6 + p] = static_cast<float>(3.0 * (aff[p] / aff_sum - 1.0 / kPaletteSize));

        // Texture scale preference: fine textures favor short-offset energy.
        const double s_pref = 3.0 * (1.0 - c.texture);
        for (int s = 0; s < 4; ++s) {
            const double g = det_exp(-(s - s_pref) * (s - s_pref));
            for (int o = 0; o < 4; ++o)
                row[30 + s * 4 + o] = static_cast<float>(0.10 * (g - 0.35));
        }
        // Busy styles also push overall contrast and high-frequency residual.
        for (int i = 3; i < 6; ++i) row[i] = 0.10f * (c.texture - 0.4f);
        for (int i = 74; i < 77; ++i) row[i] = 0.08f * (c.texture - 0.4f);
        // Mean color alignment: brighter anchors expect brighter channels.
        row[0] = 0.35f * (c.r - 0.5f);
        row[1] = 0.35f * (c.g - 0.5f);
        row[2] = 0.35f * (c.b - 0.5f);

        for (int i = 0; i < kStatsDim; ++i) row[i] += 0.02f * rng.gauss_f();
    }
    return w;
}

// ---------------------------------------------------------------------------
// Per-role builders.

Checkpoint build_encoder_text(uint64_t seed) {
    Checkpoint ck;
    ck.role = "encoder_text";
    ck.header = {{"dim", kEmbedDim},
                 {"max_tokens", 77},
                 {"concepts", concepts_json()},
                 {"semantic_gain", 1.0},
                 {"residual_gain", 0.25}};
    ck.blobs["P"] = build_concept_projection(seed);
    ck.blobs["b_T"] = modality_anchor(seed, "text-gap", 1.2f);
    return ck;
}

Checkpoint build_encoder_image(uint64_t seed) {
    Checkpoint ck;
    ck.role = "encoder_image";
    ck.header = {{"dim", kEmbedDim},
                 {"stats_dim", kStatsDim},
                 {"palette", palette_json()},
                 {"semantic_gain", 0.8},
                 {"residual_gain", 1.0},
                 {"probe_squash", 2.5}};
    ck.blobs["P"] = build_concept_projection(seed);
    ck.blobs["W_probe"] = build_probe(seed);
    Rng rng(derive_seed(seed, "image-residual"));
    ck.blobs["Q"] = gaussian_vec(rng, static_cast<size_t>(kEmbedDim) * kStatsDim, 0.002f);
    ck.blobs["b_I"] = modality_anchor(seed, "image-gap", 1.2f);
    std::vector<float> mu, sigma;
    stat_norms(mu, sigma);
    ck.blobs["mu_s"] = mu;
    ck.blobs["sigma_s"] = sigma;
    return ck;
}

Checkpoint build_generator(uint64_t seed) {
    Checkpoint ck;
    ck.role = "generator";
    ck.header = {{"generator_id", "objmst-gen-v1"},
                 {"latent_dim", kLatentDim},
                 {"hidden", kGenHidden},
                 {"num_basis", kGenBasis},
                 {"resolution", 512},
                 {"coeff_scale", 1.1}};

    Rng rng(derive_seed(seed, "mlp"));
    // Two-layer latent MLP; fan-in scaling keeps tanh activations healthy.
    ck.blobs["W1"] = gaussian_vec(rng, static_cast<size_t>(kGenHidden) * kLatentDim,
                                  1.0f / std::sqrt(static_cast<float>(kLatentDim)));
    ck.blobs["b1"] = gaussian_vec(rng, kGenHidden, 0.10f);
    ck.blobs["W2"] = gaussian_vec(rng, static_cast<size_t>(kGenTheta) * kGenHidden,
                                  0.55f / std::sqrt(static_cast<float>(kGenHidden)));
    std::vector<float> b2 = gaussian_vec(rng, kGenTheta, 0.25f);
    ck.blobs["b2"] = b2;
    ck.blobs["w_mean"] = gaussian_vec(rng, kLatentDim, 0.30f);

    // Analytic basis bank over normalized coords u,v in [-1,1]. Each row is
    // [type, p0..p5]; see Generator::render for the evaluation rules.
    Rng brng(derive_seed(seed, "basis"));
    std::vector<float> basis;
    basis.reserve(kGenBasis * 7);
    for (int m = 0; m < kGenBasis; ++m) {
        const int type = m % 4;
        float p[6] = {0, 0, 0, 0, 0, 0};
        switch (type) {
            case 0:  // stripe: sin(a*u + b*v + phase)
                p[0] = brng.uniform_f(1.0f, 9.0f) * (brng.uniform_f() < 0.5f ? -1.0f : 1.0f);
                p[1] = brng.uniform_f(1.0f, 9.0f) * (brng.uniform_f() < 0.5f ? -1.0f : 1.0f);
                p[2] = brng.uniform_f(0.0f, 6.2831853f);
                break;
            case 1:  // blob: exp(-((u-cx)^2+(v-cy)^2) / (2*s^2))
                p[0] = brng.uniform_f(-0.8f, 0.8f);
                p[1] = brng.uniform_f(-0.8f, 0.8f);
                p[2] = brng.uniform_f(0.15f, 0.50f);
                break;
            case 2:  // ramp: tanh(a*(u-cx) + b*(v-cy))
                p[0] = brng.uniform_f(1.0f, 4.0f) * (brng.uniform_f() < 0.5f ? -1.0f : 1.0f);
                p[1] = brng.uniform_f(1.0f, 4.0f) * (brng.uniform_f() < 0.5f ? -1.0f : 1.0f);
                p[2] = brng.uniform_f(-0.5f, 0.5f);
                p[3] = brng.uniform_f(-0.5f, 0.5f);
                break;
            case 3:  // ring: exp(-(r - r0)^2 / (2*s^2)) around (cx, cy)
                p[0] = brng.uniform_f(-0.4f, 0.4f);
                p[1] = brng.uniform_f(-0.4f, 0.4f);
                p[2] = brng.uniform_f(0.2f, 0.9f);
                p[3] = brng.uniform_f(0.08f, 0.30f);
                break;
        }
        basis.push_back(static_cast<float>(type));
        for (float x : p) basis.push_back(x);
    }
    ck.blobs["basis"] = basis;
    return ck;
}

// Multiscale feature pyramid: three linear patchify stages that mirror the
// relu3_1/relu4_1/relu5_1 geometry (channels 256/512/512, strides 4/8/16).
// Stage 1 has orthonormal columns so its transpose inverts it exactly; the
// deeper stages have orthonormal rows (lossy but energy preserving).
void pyramid_matrices(uint64_t seed, std::vector<float>& w1, std::vector<float>& w2,
                      std::vector<float>& w3) {
    Rng rng(derive_seed(seed, "pyramid"));
    // W1: 256 x 48. Orthonormalize the 48 columns (as rows of the transpose).
    std::vector<float> w1t = gaussian_vec(rng, static_cast<size_t>(48) * 256);
    orthonormalize_rows(w1t, 48, 256);
    w1.assign(static_cast<size_t>(256) * 48, 0.0f);
    for (int i = 0; i < 48; ++i)
        for (int j = 0; j < 256; ++j)
            w1[static_cast<size_t>(j) * 48 + i] = w1t[static_cast<size_t>(i) * 256 + j];

    w2 = gaussian_vec(rng, static_cast<size_t>(512) * 1024);
    orthonormalize_rows(w2, 512, 1024);
    w3 = gaussian_vec(rng, static_cast<size_t>(512) * 2048);
    orthonormalize_rows(w3, 512, 2048);
}

Checkpoint build_vgg_encoder(uint64_t seed) {
    Checkpoint ck;
    ck.role = "vgg_encoder";
    ck.header = {{"levels", 3},
                 {"channels", {256, 512, 512}},
                 {"strides", {4, 8, 16}}};
    std::vector<float> w1, w2, w3;
    pyramid_matrices(seed, w1, w2, w3);
    ck.blobs["W1"] = std::move(w1);
    ck.blobs["W2"] = std::move(w2);
    ck.blobs["W3"] = std::move(w3);
    return ck;
}

Checkpoint build_decoder(uint64_t seed) {
    Checkpoint ck;
    ck.role = "decoder";
    ck.header = {{"levels", 3}, {"merge_alpha", {0.40, 0.40}}};
    std::vector<float> w1, w2, w3;
    pyramid_matrices(seed, w1, w2, w3);
    auto transpose = [](const std::vector<float>& m, int rows, int cols) {
        std::vector<float> t(static_cast<size_t>(cols) * rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                t[static_cast<size_t>(j) * rows + i] = m[static_cast<size_t>(i) * cols + j];
        return t;
    };
    ck.blobs["U1"] = transpose(w1, 256, 48);
    ck.blobs["U2"] = transpose(w2, 512, 1024);
    ck.blobs["U3"] = transpose(w3, 512, 2048);
    return ck;
}

Checkpoint build_s2k_mapper(uint64_t seed) {
    Checkpoint ck;
    ck.role = "s2k_mapper";
    ck.header = {{"attn_dim", kAttnDim},
                 {"levels", 3},
                 {"region_grid", 4},
                 {"prior_gain", 1.5}};
    Rng rng(derive_seed(seed, "s2k"));
    const int channels[3] = {256, 512, 512};
    for (int l = 0; l < 3; ++l) {
        const float sc = 1.0f / std::sqrt(static_cast<float>(channels[l]));
        ck.blobs["Wq" + std::to_string(l + 1)] =
            gaussian_vec(rng, static_cast<size_t>(kAttnDim) * channels[l], sc);
        ck.blobs["Wk" + std::to_string(l + 1)] =
            gaussian_vec(rng, static_cast<size_t>(kAttnDim) * channels[l], sc);
    }
    return ck;
}

Checkpoint build_harmonizer(uint64_t seed) {
    Checkpoint ck;
    ck.role = "harmonizer";
    ck.header = {{"strength", 0.7}, {"feather_px", 5}};
    Rng rng(derive_seed(seed, "harmonizer"));
    // Near-identity residual mix applied after the statistics transfer.
    std::vector<float> mix(9, 0.0f);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            mix[static_cast<size_t>(i) * 3 + j] = (i == j ? 1.0f : 0.0f) + 0.02f * rng.gauss_f();
    ck.blobs["color_mix"] = mix;
    return ck;
}

Checkpoint build_segmenter(uint64_t seed) {
    Checkpoint ck;
    ck.role = "segmenter";
    ck.header = {{"center_sigma", 0.38},
                 {"contrast_gain", 7.0},
                 {"blur_radius", 6},
                 {"threshold", 0.5},
                 {"area_floor", 0.01}};
    Rng rng(derive_seed(seed, "segmenter"));
    // Channel weighting for the color-contrast term, near uniform.
    std::vector<float> wc(3);
    for (auto& x : wc) x = 1.0f + 0.05f * rng.gauss_f();
    ck.blobs["channel_gain"] = wc;
    return ck;
}

Checkpoint build_nima(uint64_t seed) {
    Checkpoint ck;
    ck.role = "nima";
    ck.header = {{"bins", 10}, {"stats_dim", kStatsDim}};
    Rng rng(derive_seed(seed, "nima"));
    ck.blobs["W"] = gaussian_vec(rng, static_cast<size_t>(10) * kStatsDim, 0.18f);
    // Bias forms a bell over the score bins so typical images score mid-range.
    std::vector<float> b(10);
    for (int i = 0; i < 10; ++i) {
        const float d = static_cast<float>(i) - 4.5f;
        b[i] = -0.22f * d * d + 0.05f * rng.gauss_f();
    }
    ck.blobs["b"] = b;
    std::vector<float> mu, sigma;
    stat_norms(mu, sigma);
    ck.blobs["mu_s"] = mu;
    ck.blobs["sigma_s"] = sigma;
    return ck;
}

Checkpoint build_contrique(uint64_t seed) {
    Checkpoint ck;
    ck.role = "contrique";
    ck.header = {{"feature_dim", 128},
                 {"stats_dim", kStatsDim},
                 {"nr_scale", 9.0},
                 {"nr_offset", 50.0}};
    Rng rng(derive_seed(seed, "contrique"));
    ck.blobs["R"] = gaussian_vec(rng, static_cast<size_t>(128) * kStatsDim,
                                 1.0f / std::sqrt(static_cast<float>(kStatsDim)));
    ck.blobs["w_nr"] = gaussian_vec(rng, kStatsDim, 0.18f);
    std::vector<float> mu, sigma;
    stat_norms(mu, sigma);
    ck.blobs["mu_s"] = mu;
    ck.blobs["sigma_s"] = sigma;
    return ck;
}

Checkpoint build_lpips(uint64_t seed) {
    Checkpoint ck;
    ck.role = "lpips";
    ck.header = {{"scales", 3}, {"channels", kLpipsChannels}, {"kernel", 3}};
    Rng rng(derive_seed(seed, "lpips"));
    for (int s = 0; s < 3; ++s) {
        // 3x3x3 -> 16 conv filters, plus nonnegative per-channel weights.
        ck.blobs["W" + std::to_string(s)] =
            gaussian_vec(rng, static_cast<size_t>(kLpipsChannels) * 27,
                         1.0f / std::sqrt(27.0f));
        std::vector<float> a(kLpipsChannels);
        for (auto& x : a) {
            const float g = rng.gauss_f();
            x = 0.3f + 0.2f * (g > 0 ? g : -g);
        }
        ck.blobs["a" + std::to_string(s)] = a;
    }
    return ck;
}

}  // namespace

Checkpoint build_checkpoint(const std::string& role, uint64_t seed) {
    if (role == "encoder_text") return build_encoder_text(seed);
    if (role == "encoder_image") return build_encoder_image(seed);
    if (role == "generator") return build_generator(seed);
    if (role == "vgg_encoder") return build_vgg_encoder(seed);
    if (role == "s2k_mapper") return build_s2k_mapper(seed);
    if (role == "decoder") return build_decoder(seed);
    if (role == "harmonizer") return build_harmonizer(seed);
    if (role == "segmenter") return build_segmenter(seed);
    if (role == "nima") return build_nima(seed);
    if (role == "contrique") return build_contrique(seed);
    if (role == "lpips") return build_lpips(seed);
    raise(ErrorKind::CheckpointMissing, "no builtin builder for role '" + role + "'");
}

}  // namespace objmst
