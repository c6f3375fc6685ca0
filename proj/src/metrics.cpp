// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "objmst/common.hpp"
#include "objmst/stats.hpp"

namespace objmst::metrics {

namespace {

double dot(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    require(a.size() == b.size(), ErrorKind::SizeMismatch,
            "cosine of vectors with different dimensions");
    const double na = dot(a, a), nb = dot(b, b);
    require(na > 0.0 && nb > 0.0, ErrorKind::DegenerateDirection,
            "cosine of a zero vector");
    return dot(a, b) / std::sqrt(na * nb);
}

double cosine_d(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    require(aa > 0.0 && bb > 0.0, ErrorKind::DegenerateDirection,
            "cosine of zero quality features");
    return ab / std::sqrt(aa * bb);
}

// 2x2 mean pooling; odd trailing row/column is dropped.
Image avg_pool2(const Image& img) {
    Image out(img.height / 2, img.width / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) =
                    0.25f * (img.at(2 * y, 2 * x, c) + img.at(2 * y, 2 * x + 1, c) +
                             img.at(2 * y + 1, 2 * x, c) + img.at(2 * y + 1, 2 * x + 1, c));
    return out;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::filesystem::path resolve(const std::filesystem::path& run_dir,
                              const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : run_dir / path;
}

}  // namespace

const char* eval_mode_name(EvalMode mode) {
    return mode == EvalMode::style_reps ? "style_reps" : "stylized";
}

Metrics::Metrics(WeightsStore& store) : text_enc_(store), image_enc_(store) {
    Checkpoint nima_ck, ctq_ck, lp_ck;
    try {
        nima_ck = store.load("nima");
        ctq_ck = store.load("contrique");
        lp_ck = store.load("lpips");
    } catch (const Error& e) {
        raise(ErrorKind::MetricUnavailable,
              std::string("metric checkpoint unusable: ") + e.what());
    }
    try {
        bins_ = nima_ck.header.at("bins").get<int>();
        const int nd = nima_ck.header.at("stats_dim").get<int>();
        require(nd == kStatsDim && bins_ > 1, ErrorKind::MetricUnavailable,
                "aesthetic head dimensions unsupported");
        nima_w_ = nima_ck.blob("W");
        nima_b_ = nima_ck.blob("b");
        nima_mu_ = nima_ck.blob("mu_s");
        nima_sigma_ = nima_ck.blob("sigma_s");
        require(nima_w_.size() == static_cast<size_t>(bins_) * kStatsDim &&
                    nima_b_.size() == static_cast<size_t>(bins_),
                ErrorKind::MetricUnavailable, "aesthetic head blobs malformed");

        feat_dim_ = ctq_ck.header.at("feature_dim").get<int>();
        nr_scale_ = ctq_ck.header.at("nr_scale").get<double>();
        nr_offset_ = ctq_ck.header.at("nr_offset").get<double>();
        ctq_r_ = ctq_ck.blob("R");
        ctq_wnr_ = ctq_ck.blob("w_nr");
        ctq_mu_ = ctq_ck.blob("mu_s");
        ctq_sigma_ = ctq_ck.blob("sigma_s");
        require(ctq_r_.size() == static_cast<size_t>(feat_dim_) * kStatsDim &&
                    ctq_wnr_.size() == static_cast<size_t>(kStatsDim),
                ErrorKind::MetricUnavailable, "quality head blobs malformed");

        lpips_scales_ = lp_ck.header.at("scales").get<int>();
        lpips_channels_ = lp_ck.header.at("channels").get<int>();
        lpips_kernel_ = lp_ck.header.at("kernel").get<int>();
        require(lpips_scales_ >= 1 && lpips_channels_ >= 1 && lpips_kernel_ == 3,
                ErrorKind::MetricUnavailable, "perceptual head config unsupported");
        for (int s = 0; s < lpips_scales_; ++s) {
            lpips_w_.push_back(lp_ck.blob("W" + std::to_string(s)));
            lpips_a_.push_back(lp_ck.blob("a" + std::to_string(s)));
            require(lpips_w_.back().size() ==
                            static_cast<size_t>(lpips_channels_) * 27 &&
                        lpips_a_.back().size() ==
                            static_cast<size_t>(lpips_channels_),
                    ErrorKind::MetricUnavailable, "perceptual head blobs malformed");
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::MetricUnavailable,
              std::string("metric checkpoint header malformed: ") + e.what());
    }
}

std::vector<double> Metrics::squashed_stats(const Image& image) const {
    // nima and contrique carry identical normalization tables; the aesthetic
    // head's copy is used for both and cross-checked at load time.
    const auto s = image_stats(image, image_enc_.palette());
    std::vector<double> sq(kStatsDim);
    for (int i = 0; i < kStatsDim; ++i)
        sq[i] = squash_z((static_cast<double>(s[i]) - nima_mu_[i]) / nima_sigma_[i]);
    return sq;
}

double Metrics::clipscore(const Image& image, const std::string& reference_text) const {
    return cosine(image_enc_.encode(image).values,
                  text_enc_.encode(reference_text).values);
}

double Metrics::clipscore(const Image& image, const Image& reference) const {
    return cosine(image_enc_.encode(image).values,
                  image_enc_.encode(reference).values);
}

double Metrics::nima(const Image& image) const {
    image.validate("nima input");
    const auto sq = squashed_stats(image);
    std::vector<double> logits(bins_);
    for (int k = 0; k < bins_; ++k) {
        double acc = nima_b_[k];
        const float* row = nima_w_.data() + static_cast<size_t>(k) * kStatsDim;
        for (int i = 0; i < kStatsDim; ++i) acc += row[i] * sq[i];
        logits[k] = acc;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0, score = 0.0;
    for (int k = 0; k < bins_; ++k) {
        const double p = std::exp(logits[k] - peak);
        z += p;
        score += (k + 1) * p;
    }
    return score / z;
}

std::vector<double> Metrics::quality_features(const Image& image) const {
    const auto sq = squashed_stats(image);
    std::vector<double> f(feat_dim_);
    for (int k = 0; k < feat_dim_; ++k) {
        double acc = 0.0;
        const float* row = ctq_r_.data() + static_cast<size_t>(k) * kStatsDim;
        for (int i = 0; i < kStatsDim; ++i) acc += row[i] * sq[i];
        f[k] = acc;
    }
    return f;
}

double Metrics::contrique(const Image& image, ContriqueMode mode,
                          const Image* reference) const {
    image.validate("contrique input");
    if (mode == ContriqueMode::full_reference) {
        require(reference != nullptr, ErrorKind::MissingReference,
                "full-reference quality score needs a reference image");
        reference->validate("contrique reference");
        return cosine_d(quality_features(image), quality_features(*reference));
    }
    const auto sq = squashed_stats(image);
    double acc = 0.0;
    for (int i = 0; i < kStatsDim; ++i) acc += ctq_wnr_[i] * sq[i];
    return nr_offset_ + nr_scale_ * acc;
}

// One pyramid scale: valid 3x3 convolution to `lpips_channels_` maps (weight
// layout: filter-major, then input channel, kernel row, kernel column), each
// position's channel vector unit-normalized, then the weighted squared
// difference averaged over positions.
double Metrics::lpips_scale(const Image& a, const Image& b, int scale) const {
    const int hc = a.height - 2, wc = a.width - 2;
    const float* w = lpips_w_[scale].data();
    const float* aw = lpips_a_[scale].data();
    const int nch = lpips_channels_;
    std::vector<double> fa(nch), fb(nch);
    double acc = 0.0;
    for (int y = 0; y < hc; ++y)
        for (int x = 0; x < wc; ++x) {
            double na = 0.0, nb = 0.0;
            for (int c = 0; c < nch; ++c) {
                const float* k = w + static_cast<size_t>(c) * 27;
                double va = 0.0, vb = 0.0;
                int t = 0;
                for (int ch = 0; ch < 3; ++ch)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx, ++t) {
                            va += k[t] * a.at(y + ky, x + kx, ch);
                            vb += k[t] * b.at(y + ky, x + kx, ch);
                        }
                fa[c] = va;
                fb[c] = vb;
                na += va * va;
                nb += vb * vb;
            }
            na = std::sqrt(na + 1e-10);
            nb = std::sqrt(nb + 1e-10);
            for (int c = 0; c < nch; ++c) {
                const double d = fa[c] / na - fb[c] / nb;
                acc += aw[c] * d * d;
            }
        }
    return acc / (static_cast<double>(hc) * wc);
}

double Metrics::lpips(const Image& image, const Image& reference) const {
    image.validate("lpips input");
    reference.validate("lpips reference");
    Image a = image;
    Image b = reference.height == image.height && reference.width == image.width
                  ? reference
                  : resize_bilinear(reference, image.height, image.width);
    double total = 0.0;
    for (int s = 0; s < lpips_scales_; ++s) {
        if (s > 0) {
            a = avg_pool2(a);
            b = avg_pool2(b);
        }
        require(a.height >= 3 && a.width >= 3, ErrorKind::DimensionMismatch,
                "image too small for the perceptual pyramid");
        total += lpips_scale(a, b, s);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Report harness.

std::string MetricReport::to_csv() const {
    std::string s =
        "image_id,method,mode,clipscore_text,clipscore_image,lpips,nima,"
        "contrique_fr,contrique_nr\n";
    for (const auto& r : per_image) {
        s += r.image_id + "," + r.method + "," + r.mode;
        for (double v : {r.clipscore_text, r.clipscore_image, r.lpips, r.nima,
                         r.contrique_fr, r.contrique_nr})
            s += "," + format_value(v);
        s += "\n";
    }
    return s;
}

std::string MetricReport::table_text() const {
    static constexpr const char* kNames[] = {"clipscore_text", "clipscore_image",
                                             "lpips",          "nima",
                                             "contrique_fr",   "contrique_nr"};
    std::string s = "metric          ";
    for (const auto& m : aggregate) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %14s", m.method.c_str());
        s += buf;
    }
    s += "\n";
    for (int row = 0; row < 6; ++row) {
        char name[32];
        std::snprintf(name, sizeof(name), "%-16s", kNames[row]);
        s += name;
        for (const auto& m : aggregate) {
            const double vals[] = {m.clipscore_text, m.clipscore_image, m.lpips,
                                   m.nima,           m.contrique_fr,    m.contrique_nr};
            char buf[32];
            std::snprintf(buf, sizeof(buf), " %14.4f", vals[row]);
            s += buf;
        }
        s += "\n";
    }
    s += "count           ";
    for (const auto& m : aggregate) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %14zu", m.count);
        s += buf;
    }
    s += "\n";
    return s;
}

MetricReport evaluate_table(const Metrics& metrics,
                            const std::filesystem::path& run_dir, EvalMode mode,
                            const nlohmann::json& manifest) {
    require(manifest.is_array(), ErrorKind::ManifestMismatch,
            "evaluation manifest must be a JSON array");
    MetricReport report;
    report.per_image.resize(manifest.size());
    if (manifest.empty()) return report;

    std::atomic<size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < manifest.size();
             i = next.fetch_add(1)) {
            try {
                const auto& e = manifest[i];
                require(e.is_object() && e.contains("output"),
                        ErrorKind::ManifestMismatch,
                        "manifest entry lacks an output field");
                const auto output = e.at("output").get<std::string>();
                const auto target = e.value("target", std::string("fg"));
                require(target == "fg" || target == "bg",
                        ErrorKind::ManifestMismatch,
                        "manifest target must be fg or bg, got '" + target + "'");
                const std::string text_key = "style_text_" + target;
                const std::string image_key = "style_image_" + target;
                require(e.contains(text_key) && e.contains(image_key),
                        ErrorKind::ManifestMismatch,
                        "output '" + output + "' lacks " + target +
                            " reference entries");

                MetricRow row;
                row.image_id = std::filesystem::path(output).stem().string();
                row.method = e.value("method", std::string("objmst"));
                row.mode = eval_mode_name(mode);
                require(row.image_id.find(',') == std::string::npos &&
                            row.method.find(',') == std::string::npos,
                        ErrorKind::ManifestMismatch,
                        "identifiers must not contain commas");

                const Image out = load_image_raw(resolve(run_dir, output));
                const Image sref = load_image_raw(
                    resolve(run_dir, e.at(image_key).get<std::string>()));
                row.clipscore_text =
                    metrics.clipscore(out, e.at(text_key).get<std::string>());
                row.clipscore_image = metrics.clipscore(out, sref);
                row.lpips = metrics.lpips(out, sref);
                row.nima = metrics.nima(out);
                row.contrique_fr = metrics.contrique_fr(out, sref);
                row.contrique_nr = metrics.contrique_nr(out);
                report.per_image[i] = std::move(row);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const size_t n_workers = std::min<size_t>(
        manifest.size(),
        std::max<size_t>(1, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    for (const auto& r : report.per_image) {
        auto it = std::find_if(report.aggregate.begin(), report.aggregate.end(),
                               [&](const MethodAggregate& m) {
                                   return m.method == r.method;
                               });
        if (it == report.aggregate.end()) {
            report.aggregate.push_back({r.method, 0, 0, 0, 0, 0, 0, 0});
            it = std::prev(report.aggregate.end());
        }
        it->count += 1;
        it->clipscore_text += r.clipscore_text;
        it->clipscore_image += r.clipscore_image;
        it->lpips += r.lpips;
        it->nima += r.nima;
        it->contrique_fr += r.contrique_fr;
        it->contrique_nr += r.contrique_nr;
    }
    for (auto& m : report.aggregate) {
        const double n = static_cast<double>(m.count);
        m.clipscore_text /= n;
        m.clipscore_image /= n;
        m.lpips /= n;
        m.nima /= n;
        m.contrique_fr /= n;
        m.contrique_nr /= n;
    }
    return report;
}

MetricReport evaluate_table(const Metrics& metrics,
                            const std::filesystem::path& run_dir, EvalMode mode,
                            const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    require(in.good(), ErrorKind::FileNotFound,
            "evaluation manifest not found: " + manifest_path.string());
    nlohmann::json parsed;
    try {
        in >> parsed;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::ManifestMismatch,
              std::string("evaluation manifest unparsable: ") + e.what());
    }
    return evaluate_table(metrics, run_dir, mode, parsed);
}

}  // namespace objmst::metrics
