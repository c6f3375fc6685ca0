// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <opencv2/imgproc.hpp>

#include "objmst/common.hpp"
#include "objmst/ingest.hpp"
#include "objmst/rng.hpp"

namespace objmst::ingest {

Mask segment_salient(const Image& img, WeightsStore& store) {
    const Checkpoint* ck = nullptr;
    try {
        ck = &store.load("segmenter");
    } catch (const Error& e) {
        raise(ErrorKind::SegmenterUnavailable,
              std::string("segmenter checkpoint unavailable (") + e.what() +
                  "); supply a mask file instead");
    }
    const double center_sigma = ck->header.value("center_sigma", 0.38);
    const int blur_radius = ck->header.value("blur_radius", 6);
    const double threshold = ck->header.value("threshold", 0.5);
    const double area_floor = ck->header.value("area_floor", 0.01);
    const auto& gain = ck->blob("channel_gain");

    const int H = img.height, W = img.width;

    // Color-contrast saliency: distance between the local (blurred) color and
    // the global mean color, weighted per channel.
    cv::Mat f(H, W, CV_32FC3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            f.at<cv::Vec3f>(y, x) = {img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
    cv::Mat blurred;
    const int k = 2 * blur_radius + 1;
    cv::blur(f, blurred, cv::Size(k, k));
    const cv::Scalar mean = cv::mean(f);

    cv::Mat sal(H, W, CV_32F);
    const double cy = (H - 1) * 0.5, cx = (W - 1) * 0.5;
    const double rnorm = std::sqrt(cy * cy + cx * cx);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const cv::Vec3f& v = blurred.at<cv::Vec3f>(y, x);
            double d = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double dc = gain[c] * (v[c] - mean[c]);
                d += dc * dc;
            }
            const double r = std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx)) / rnorm;
            const double prior = det_exp(-r * r / (2.0 * center_sigma * center_sigma));
            sal.at<float>(y, x) = static_cast<float>(d * prior);
        }

    double smax = 0.0;
    cv::minMaxLoc(sal, nullptr, &smax);
    require(smax > 1e-12, ErrorKind::EmptyMask, "image has no color contrast to segment");

    cv::Mat bin(H, W, CV_8U);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            bin.at<uint8_t>(y, x) = sal.at<float>(y, x) / smax >= threshold ? 255 : 0;

    // Keep only the largest connected proposal.
    cv::Mat labels, stats, centroids;
    const int n = cv::connectedComponentsWithStats(bin, labels, stats, centroids, 8);
    int best = -1, best_area = 0;
    for (int i = 1; i < n; ++i) {
        const int area = stats.at<int>(i, cv::CC_STAT_AREA);
        if (area > best_area) {
            best_area = area;
            best = i;
        }
    }
    require(best >= 0 && best_area >= area_floor * H * W, ErrorKind::EmptyMask,
            "no salient proposal above the area floor");

    Mask m(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            m.values[static_cast<size_t>(y) * W + x] = labels.at<int>(y, x) == best ? 1 : 0;
    return m;
}

Mask acquire_mask(const Image& img, WeightsStore& store,
                  const std::optional<std::filesystem::path>& mask_path,
                  int working_resolution) {
    Mask m = mask_path ? load_mask(*mask_path, working_resolution)
                       : segment_salient(img, store);
    require(m.height == img.height && m.width == img.width, ErrorKind::DimensionMismatch,
            "mask geometry does not match the image");
    require(m.is_binary(), ErrorKind::EmptyMask, "mask must be strictly binary");
    require(m.area_fraction() >= 0.01, ErrorKind::EmptyMask,
            "mask covers less than 1% of the image");
    return m;
}

}  // namespace objmst::ingest
