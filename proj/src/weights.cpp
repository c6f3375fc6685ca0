// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/weights.hpp"

#include <cstdlib>
#include <fstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "objmst/common.hpp"

namespace objmst {

namespace {

// Digest pins for the builtin checkpoints. Regenerate with tools/gen-weights
// --print-manifest after any change to the builders; the release gate refuses
// unpinned entries.
struct DefaultEntry {
    const char* role;
    uint64_t seed;
    const char* sha256;
};

#include "weights_pins.inc"

std::string builtin_file_name(const std::string& role) { return role + ".objw"; }

}  // namespace

const std::vector<std::string>& all_weight_roles() {
    static const std::vector<std::string> roles = [] {
        std::vector<std::string> r;
        for (const auto& d : kDefaultEntries) r.push_back(d.role);
        return r;
    }();
    return roles;
}

const WeightsEntry& WeightsManifest::entry(const std::string& role) const {
    for (const auto& e : entries)
        if (e.role == role) return e;
    raise(ErrorKind::CheckpointMissing, "manifest has no entry for role '" + role + "'");
}

bool WeightsManifest::has(const std::string& role) const {
    for (const auto& e : entries)
        if (e.role == role) return true;
    return false;
}

nlohmann::json WeightsManifest::to_json() const {
    nlohmann::json j;
    j["weights"] = nlohmann::json::array();
    for (const auto& e : entries) {
        j["weights"].push_back({{"role", e.role},
                                {"file", e.file},
                                {"sha256", e.sha256},
                                {"source", e.source}});
    }
    return j;
}

WeightsManifest WeightsManifest::from_json(const nlohmann::json& j) {
    require(j.contains("weights") && j["weights"].is_array(), ErrorKind::InvalidJobSpec,
            "weights manifest must contain a 'weights' array");
    WeightsManifest m;
    for (const auto& item : j["weights"]) {
        WeightsEntry e;
        e.role = item.at("role").get<std::string>();
        e.file = item.value("file", builtin_file_name(e.role));
        e.sha256 = item.value("sha256", std::string());
        e.source = item.value("source", std::string());
        require(!e.source.empty(), ErrorKind::InvalidJobSpec,
                "manifest entry '" + e.role + "' has no source");
        m.entries.push_back(std::move(e));
    }
    return m;
}

WeightsManifest WeightsManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::FileNotFound, "cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::InvalidJobSpec, "bad manifest JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

WeightsManifest WeightsManifest::default_manifest() {
    WeightsManifest m;
    for (const auto& d : kDefaultEntries) {
        WeightsEntry e;
        e.role = d.role;
        e.file = builtin_file_name(d.role);
        e.sha256 = d.sha256;
        e.source = "builtin:" + std::to_string(d.seed);
        m.entries.push_back(std::move(e));
    }
    return m;
}

std::filesystem::path default_weights_dir() {
    if (const char* env = std::getenv("OBJMST_WEIGHTS_DIR"); env && *env)
        return std::filesystem::path(env);
    if (const char* home = std::getenv("HOME"); home && *home)
        return std::filesystem::path(home) / ".cache" / "objmst" / "weights";
    return std::filesystem::path("weights");
}

WeightsStore::WeightsStore(std::filesystem::path dir, WeightsManifest manifest)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {}

std::filesystem::path WeightsStore::fetch(const WeightsEntry& entry) {
    std::filesystem::create_directories(dir_);
    const auto dest = dir_ / entry.file;
    const std::string& src = entry.source;

    if (src.rfind("builtin:", 0) == 0) {
        const uint64_t seed = std::stoull(src.substr(8));
        build_checkpoint(entry.role, seed).save(dest);
        return dest;
    }
    if (src.rfind("file://", 0) == 0) {
        const std::filesystem::path from(src.substr(7));
        require(std::filesystem::exists(from), ErrorKind::DownloadFailed,
                "source file missing: " + from.string());
        std::filesystem::copy_file(from, dest,
                                   std::filesystem::copy_options::overwrite_existing);
        return dest;
    }
    if (src.rfind("http://", 0) == 0 || src.rfind("https://", 0) == 0) {
        const bool tls = src[4] == 's';
        const size_t host_at = tls ? 8 : 7;
        const size_t slash = src.find('/', host_at);
        const std::string host = src.substr(host_at, slash - host_at);
        const std::string path = slash == std::string::npos ? "/" : src.substr(slash);
        const std::string origin = (tls ? "https://" : "http://") + host;

        httplib::Client client(origin);
        client.set_follow_location(true);
        client.set_connection_timeout(15);
        client.set_read_timeout(60);
        auto res = client.Get(path);
        require(res && res->status == 200, ErrorKind::DownloadFailed,
                "GET " + src + " failed" +
                    (res ? " with status " + std::to_string(res->status) : ""));
        const auto tmp = dest.string() + ".part";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            require(out.good(), ErrorKind::DownloadFailed, "cannot write " + tmp);
            out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
        }
        std::filesystem::rename(tmp, dest);
        return dest;
    }
    raise(ErrorKind::InvalidJobSpec, "unsupported weights source '" + src + "'");
}

std::filesystem::path WeightsStore::ensure(const std::string& role) {
    const WeightsEntry& entry = manifest_.entry(role);
    const auto dest = dir_ / entry.file;

    auto verified = [&](const std::filesystem::path& p) {
        if (entry.sha256.empty()) return true;  // unpinned manifest: trust the source
        return sha256_file(p) == entry.sha256;
    };

    if (std::filesystem::exists(dest) && verified(dest)) return dest;
    fetch(entry);
    require(std::filesystem::exists(dest), ErrorKind::CheckpointMissing,
            "fetch produced no file for role '" + role + "'");
    if (!verified(dest)) {
        const std::string got = sha256_file(dest);
        std::filesystem::remove(dest);
        raise(ErrorKind::DigestMismatch, "digest mismatch for role '" + role + "': expected " +
                                             entry.sha256 + ", got " + got);
    }
    return dest;
}

const Checkpoint& WeightsStore::load(const std::string& role) {
    auto it = cache_.find(role);
    if (it != cache_.end()) return it->second;
    Checkpoint ck = Checkpoint::load(ensure(role));
    require(ck.role == role, ErrorKind::CheckpointMissing,
            "checkpoint role '" + ck.role + "' does not match requested '" + role + "'");
    return cache_.emplace(role, std::move(ck)).first->second;
}

}  // namespace objmst
