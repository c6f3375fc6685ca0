// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace objmst {

// Exit-code classes used by the CLI: 2 validation, 3 stage failure, 4 weights.
enum class ErrorClass : int {
    Validation = 2,
    Stage = 3,
    Weights = 4,
};

enum class ErrorKind {
    // ingest
    FileNotFound,
    UnsupportedFormat,
    CorruptImage,
    SegmenterUnavailable,
    EmptyMask,
    DimensionMismatch,
    ImageTooSmall,
    // clip_direction
    TextTooLong,
    EncoderUnavailable,
    DegenerateDirection,
    SizeMismatch,
    // inversion
    GeneratorUnavailable,
    LatentShapeMismatch,
    NonFiniteLoss,
    // s2k_transfer
    DecoderUnavailable,
    LevelMismatch,
    CheckpointMissing,
    // harmonize
    HarmonizerUnavailable,
    EmptyBgReps,
    // metrics
    MetricUnavailable,
    MissingReference,
    ManifestMismatch,
    // weights
    DigestMismatch,
    DownloadFailed,
    // cli
    InvalidJobSpec,
    StageFailed,
};

const char* error_kind_name(ErrorKind kind);
ErrorClass error_class(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(error_class(kind_)); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
    if (!cond) raise(kind, message);
}

}  // namespace objmst
