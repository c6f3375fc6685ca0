// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace objmst {

// Container for pinned model weights. Binary layout (little-endian):
//   magic "OBJW1\n"
//   u32 role_len, role bytes
//   u32 header_len, header JSON bytes
//   u32 blob_count
//   per blob: u32 name_len, name bytes, u64 float_count, float32 data
struct Checkpoint {
    std::string role;
    nlohmann::json header;
    std::map<std::string, std::vector<float>> blobs;

    const std::vector<float>& blob(const std::string& name) const;
    std::vector<uint8_t> serialize() const;

    static Checkpoint deserialize(const std::vector<uint8_t>& bytes);
    static Checkpoint load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

std::string sha256_hex(const std::vector<uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace objmst
