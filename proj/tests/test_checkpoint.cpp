// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "objmst/checkpoint.hpp"
#include "objmst/common.hpp"
#include "objmst/weights.hpp"

using namespace objmst;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("checkpoint serialize/deserialize round trips") {
    Checkpoint ck;
    ck.role = "demo";
    ck.header = {{"alpha", 0.5}, {"n", 3}};
    ck.blobs["a"] = {1.0f, -2.5f, 3.25f};
    ck.blobs["b"] = std::vector<float>(1000, 0.125f);

    const auto bytes = ck.serialize();
    const Checkpoint back = Checkpoint::deserialize(bytes);
    CHECK(back.role == "demo");
    CHECK(back.header["alpha"].get<double>() == 0.5);
    CHECK(back.blob("a") == ck.blob("a"));
    CHECK(back.blob("b") == ck.blob("b"));
    CHECK(sha256_hex(back.serialize()) == sha256_hex(bytes));
}

TEST_CASE("truncated checkpoint bytes are rejected") {
    Checkpoint ck;
    ck.role = "demo";
    ck.header = {{"n", 1}};
    ck.blobs["a"] = {1.0f, 2.0f};
    auto bytes = ck.serialize();
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_AS(Checkpoint::deserialize(bytes), Error);
}

TEST_CASE("sha256 matches a known vector") {
    // sha256("abc")
    const std::vector<uint8_t> abc = {'a', 'b', 'c'};
    CHECK(sha256_hex(abc) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("builtin builders are deterministic in the seed") {
    for (const auto& role : all_weight_roles()) {
        const auto a = build_checkpoint(role, 1234).serialize();
        const auto b = build_checkpoint(role, 1234).serialize();
        CHECK(sha256_hex(a) == sha256_hex(b));
        const auto c = build_checkpoint(role, 1235).serialize();
        CHECK(sha256_hex(a) != sha256_hex(c));
    }
}

TEST_CASE("default manifest digests are pinned and reproducible") {
    const WeightsManifest m = WeightsManifest::default_manifest();
    REQUIRE(m.entries.size() == all_weight_roles().size());
    for (const auto& e : m.entries) {
        CAPTURE(e.role);
        REQUIRE_MESSAGE(!e.sha256.empty(), "unpinned digest for " << e.role);
        REQUIRE(e.source.rfind("builtin:", 0) == 0);
        const uint64_t seed = std::stoull(e.source.substr(8));
        const auto bytes = build_checkpoint(e.role, seed).serialize();
        CHECK(sha256_hex(bytes) == e.sha256);
    }
}

TEST_CASE("weights store generates, verifies and caches checkpoints") {
    const auto dir = fresh_dir("objmst_test_weights");
    WeightsStore store(dir);

    const auto path = store.ensure("generator");
    CHECK(std::filesystem::exists(path));
    const Checkpoint& ck = store.load("generator");
    CHECK(ck.role == "generator");
    CHECK(&store.load("generator") == &ck);  // cached

    // Corrupt the file; ensure() must detect and regenerate it.
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "garbage";
    }
    const auto again = store.ensure("generator");
    CHECK(sha256_file(again) == store.manifest().entry("generator").sha256);
}

TEST_CASE("digest mismatch is a hard error") {
    const auto dir = fresh_dir("objmst_test_weights_bad");
    WeightsManifest m = WeightsManifest::default_manifest();
    for (auto& e : m.entries)
        if (e.role == "lpips") e.sha256.assign(64, '0');
    WeightsStore store(dir, m);
    CHECK_THROWS_WITH_AS(static_cast<void>(store.ensure("lpips")),
                         doctest::Contains("DigestMismatch"), Error);
}

TEST_CASE("file source copies and verifies") {
    const auto srcdir = fresh_dir("objmst_test_weights_src");
    const auto dstdir = fresh_dir("objmst_test_weights_dst");

    const Checkpoint ck = build_checkpoint("nima", 9009);
    const auto src = srcdir / "nima.objw";
    ck.save(src);

    WeightsManifest m;
    m.entries.push_back({"nima", "nima.objw", sha256_hex(ck.serialize()),
                         "file://" + src.string()});
    WeightsStore store(dstdir, m);
    const auto path = store.ensure("nima");
    CHECK(std::filesystem::exists(path));
    CHECK(store.load("nima").role == "nima");
}
