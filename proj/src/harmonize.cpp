// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/harmonize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <opencv2/imgproc.hpp>

namespace objmst::harmonize {

namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Symmetric positive-semidefinite square root, eigenvalues clamped at zero.
Mat3 spd_sqrt(const Mat3& m) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    Vec3 lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Mat3 spd_inv_sqrt(const Mat3& m) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    Vec3 lam = es.eigenvalues().cwiseMax(1e-9);
    Vec3 inv = lam.cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Mean and covariance of the pixels selected by `want` (mask value 0 or 1).
size_t region_stats(const Image& img, const Mask& mask, uint8_t want, Vec3& mean,
                    Mat3& cov) {
    mean.setZero();
    Mat3 second = Mat3::Zero();
    size_t n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (mask.at(y, x) != want) continue;
            const Vec3 p(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
            mean += p;
            second += p * p.transpose();
            ++n;
        }
    if (n == 0) return 0;
    mean /= static_cast<double>(n);
    cov = second / static_cast<double>(n) - mean * mean.transpose();
    return n;
}

}  // namespace

Composite composite_background(const Image& fg_stylized, const Mask& mask,
                               const std::vector<inversion::StyleRepresentation>& bg_reps,
                               const CompositeConfig& cfg) {
    require(mask.height == fg_stylized.height && mask.width == fg_stylized.width,
            ErrorKind::DimensionMismatch, "mask and foreground dims differ");
    require(mask.is_binary(), ErrorKind::EmptyMask, "mask must be strictly binary");
    require(!bg_reps.empty(), ErrorKind::EmptyBgReps,
            "composite_background needs at least one background representation");
    for (const auto& rep : bg_reps)
        require(rep.target == "bg", ErrorKind::EmptyBgReps,
                "composite_background expects bg-target representations, got '" +
                    rep.target + "'");
    const Image& rep = bg_reps.front().image;
    rep.validate("composite_background representation");

    Composite out;
    out.mask = mask;
    out.fg_source = "fg_stylized";
    out.image = Image(fg_stylized.height, fg_stylized.width);

    if (cfg.tile_bg) {
        out.bg_source = "bg_rep[0] tiled";
        for (int y = 0; y < out.image.height; ++y)
            for (int x = 0; x < out.image.width; ++x) {
                if (mask.at(y, x)) continue;
                for (int c = 0; c < 3; ++c)
                    out.image.at(y, x, c) = rep.at(y % rep.height, x % rep.width, c);
            }
    } else {
        out.bg_source = "bg_rep[0] resized";
        const Image bg = rep.height == out.image.height && rep.width == out.image.width
                             ? rep
                             : resize_bilinear(rep, out.image.height, out.image.width);
        for (int y = 0; y < out.image.height; ++y)
            for (int x = 0; x < out.image.width; ++x) {
                if (mask.at(y, x)) continue;
                for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = bg.at(y, x, c);
            }
    }
    for (int y = 0; y < out.image.height; ++y)
        for (int x = 0; x < out.image.width; ++x) {
            if (!mask.at(y, x)) continue;
            for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = fg_stylized.at(y, x, c);
        }
    return out;
}

Harmonizer::Harmonizer(WeightsStore& store) {
    const Checkpoint* ck = nullptr;
    try {
        ck = &store.load("harmonizer");
    } catch (const Error& e) {
        raise(ErrorKind::HarmonizerUnavailable,
              std::string("harmonizer checkpoint unavailable (") + e.what() + ")");
    }
    try {
        strength_ = ck->header.at("strength").get<float>();
        feather_px_ = ck->header.at("feather_px").get<int>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::HarmonizerUnavailable,
              std::string("harmonizer header malformed: ") + e.what());
    }
    const auto& mix = ck->blob("color_mix");
    require(mix.size() == 9, ErrorKind::HarmonizerUnavailable,
            "harmonizer color_mix malformed");
    std::copy(mix.begin(), mix.end(), color_mix_);
}

Image Harmonizer::harmonize(const Composite& composite) const {
    const Image& img = composite.image;
    const Mask& mask = composite.mask;
    require(mask.height == img.height && mask.width == img.width,
            ErrorKind::DimensionMismatch, "composite mask and image dims differ");
    require(mask.is_binary(), ErrorKind::EmptyMask, "mask must be strictly binary");

    Vec3 mu_f, mu_b;
    Mat3 cov_f, cov_b;
    const size_t nf = region_stats(img, mask, 1, mu_f, cov_f);
    const size_t nb = region_stats(img, mask, 0, mu_b, cov_b);
    if (nf < 16 || nb < 16) return img;  // nothing to harmonize toward

    // Covariance-matching map from the foreground distribution onto the
    // background's, regularized for flat regions.
    const Mat3 reg = 1e-6 * Mat3::Identity();
    const Mat3 sf_half = spd_sqrt(cov_f + reg);
    const Mat3 sf_inv_half = spd_inv_sqrt(cov_f + reg);
    const Mat3 t =
        sf_inv_half * spd_sqrt(sf_half * (cov_b + reg) * sf_half) * sf_inv_half;

    Eigen::Map<const Eigen::Matrix<float, 3, 3, Eigen::RowMajor>> mix(color_mix_);
    const Mat3 mixd = mix.cast<double>();

    // Feathered foreground weight: 1 deep inside, 0 far outside, smooth seam.
    cv::Mat alpha(img.height, img.width, CV_32F);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            alpha.at<float>(y, x) = mask.at(y, x) ? 1.0f : 0.0f;
    const int k = 2 * feather_px_ + 1;
    cv::GaussianBlur(alpha, alpha, cv::Size(k, k), feather_px_ / 2.0);

    Image out(img.height, img.width);
    const double s = strength_;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const Vec3 p(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
            const Vec3 mapped = mu_b + t * (p - mu_f);
            const Vec3 adjusted = mixd * ((1.0 - s) * p + s * mapped);
            const double a = alpha.at<float>(y, x);
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = static_cast<float>(
                    std::clamp(a * adjusted[c] + (1.0 - a) * p[c], 0.0, 1.0));
        }
    return out;
}

}  // namespace objmst::harmonize
