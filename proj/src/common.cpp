// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/common.hpp"
#include "objmst/rng.hpp"

#include <cmath>

namespace objmst {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::FileNotFound: return "FileNotFound";
        case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorKind::CorruptImage: return "CorruptImage";
        case ErrorKind::SegmenterUnavailable: return "SegmenterUnavailable";
        case ErrorKind::EmptyMask: return "EmptyMask";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ImageTooSmall: return "ImageTooSmall";
        case ErrorKind::TextTooLong: return "TextTooLong";
        case ErrorKind::EncoderUnavailable: return "EncoderUnavailable";
        case ErrorKind::DegenerateDirection: return "DegenerateDirection";
        case ErrorKind::SizeMismatch: return "SizeMismatch";
        case ErrorKind::GeneratorUnavailable: return "GeneratorUnavailable";
        case ErrorKind::LatentShapeMismatch: return "LatentShapeMismatch";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::DecoderUnavailable: return "DecoderUnavailable";
        case ErrorKind::LevelMismatch: return "LevelMismatch";
        case ErrorKind::CheckpointMissing: return "CheckpointMissing";
        case ErrorKind::HarmonizerUnavailable: return "HarmonizerUnavailable";
        case ErrorKind::EmptyBgReps: return "EmptyBgReps";
        case ErrorKind::MetricUnavailable: return "MetricUnavailable";
        case ErrorKind::MissingReference: return "MissingReference";
        case ErrorKind::ManifestMismatch: return "ManifestMismatch";
        case ErrorKind::DigestMismatch: return "DigestMismatch";
        case ErrorKind::DownloadFailed: return "DownloadFailed";
        case ErrorKind::InvalidJobSpec: return "InvalidJobSpec";
        case ErrorKind::StageFailed: return "StageFailed";
    }
    return "UnknownError";
}

ErrorClass error_class(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::FileNotFound:
        case ErrorKind::UnsupportedFormat:
        case ErrorKind::CorruptImage:
        case ErrorKind::ImageTooSmall:
        case ErrorKind::EmptyMask:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::SizeMismatch:
        case ErrorKind::TextTooLong:
        case ErrorKind::LatentShapeMismatch:
        case ErrorKind::EmptyBgReps:
        case ErrorKind::MissingReference:
        case ErrorKind::ManifestMismatch:
        case ErrorKind::InvalidJobSpec:
            return ErrorClass::Validation;
        case ErrorKind::SegmenterUnavailable:
        case ErrorKind::EncoderUnavailable:
        case ErrorKind::GeneratorUnavailable:
        case ErrorKind::DecoderUnavailable:
        case ErrorKind::HarmonizerUnavailable:
        case ErrorKind::MetricUnavailable:
        case ErrorKind::CheckpointMissing:
        case ErrorKind::DigestMismatch:
        case ErrorKind::DownloadFailed:
            return ErrorClass::Weights;
        default:
            return ErrorClass::Stage;
    }
}

uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index) {
    // FNV-1a over the tag, then two splitmix rounds folding in the index.
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    SplitMix64 sm(master ^ h);
    uint64_t s = sm.next();
    sm.state ^= index * 0x9E3779B97F4A7C15ULL;
    return s ^ sm.next();
}

double det_exp(double x) {
    // exp(x) = 2^(x/ln2); split into integer power of two and a polynomial
    // remainder on [-0.5ln2, 0.5ln2]. Only +,*,/ and ldexp, so the result is
    // identical on every IEEE-754 host.
    if (x > 700.0) x = 700.0;
    if (x < -745.0) return 0.0;
    const double inv_ln2 = 1.4426950408889634;
    const double ln2_hi = 0.6931471805599453;
    double k = x * inv_ln2;
    // round-half-away via truncation of k +/- 0.5 (deterministic)
    long long ki = static_cast<long long>(k >= 0 ? k + 0.5 : k - 0.5);
    double r = x - static_cast<double>(ki) * ln2_hi;
    // degree-8 Taylor on the small remainder
    double term = 1.0, sum = 1.0;
    for (int i = 1; i <= 8; ++i) {
        term *= r / static_cast<double>(i);
        sum += term;
    }
    return std::ldexp(sum, static_cast<int>(ki));
}

}  // namespace objmst
