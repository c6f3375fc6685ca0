// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "objmst/checkpoint.hpp"

namespace objmst {

// One pinned checkpoint. `source` is either "builtin:<seed>" (generated
// procedurally and bit-stable across runs), an http(s) URL, or a file:// path.
struct WeightsEntry {
    std::string role;
    std::string file;
    std::string sha256;
    std::string source;
};

struct WeightsManifest {
    std::vector<WeightsEntry> entries;

    const WeightsEntry& entry(const std::string& role) const;
    bool has(const std::string& role) const;
    nlohmann::json to_json() const;

    static WeightsManifest from_json(const nlohmann::json& j);
    static WeightsManifest load(const std::filesystem::path& path);
    static WeightsManifest default_manifest();
};

// All roles the pipeline can load, in manifest order.
const std::vector<std::string>& all_weight_roles();

// Procedural builders for the builtin checkpoints. Deterministic in `seed`.
Checkpoint build_checkpoint(const std::string& role, uint64_t seed);

// $OBJMST_WEIGHTS_DIR if set, else ~/.cache/objmst/weights, else ./weights.
std::filesystem::path default_weights_dir();

// Materializes checkpoints on demand and verifies their digests.
class WeightsStore {
  public:
    explicit WeightsStore(std::filesystem::path dir = default_weights_dir(),
                          WeightsManifest manifest = WeightsManifest::default_manifest());

    // Returns the on-disk path for `role`, generating or downloading the file
    // if missing. Throws DigestMismatch if the bytes do not match the pin.
    std::filesystem::path ensure(const std::string& role);

    // ensure() + parse, with an in-process cache so repeated loads are cheap.
    const Checkpoint& load(const std::string& role);

    const WeightsManifest& manifest() const { return manifest_; }
    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path fetch(const WeightsEntry& entry);

    std::filesystem::path dir_;
    WeightsManifest manifest_;
    std::map<std::string, Checkpoint> cache_;
};

}  // namespace objmst
