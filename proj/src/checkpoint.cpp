// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <openssl/evp.h>

#include "objmst/common.hpp"

namespace objmst {

namespace {

constexpr char kMagic[] = "OBJW1\n";
constexpr size_t kMagicLen = 6;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;

    void need(size_t n) const {
        require(pos + n <= buf.size(), ErrorKind::CheckpointMissing,
                "checkpoint truncated at offset " + std::to_string(pos));
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str(uint32_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

const std::vector<float>& Checkpoint::blob(const std::string& name) const {
    auto it = blobs.find(name);
    require(it != blobs.end(), ErrorKind::CheckpointMissing,
            "checkpoint '" + role + "' has no blob '" + name + "'");
    return it->second;
}

std::vector<uint8_t> Checkpoint::serialize() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + kMagicLen);
    put_u32(out, static_cast<uint32_t>(role.size()));
    out.insert(out.end(), role.begin(), role.end());
    const std::string hdr = header.dump();
    put_u32(out, static_cast<uint32_t>(hdr.size()));
    out.insert(out.end(), hdr.begin(), hdr.end());
    put_u32(out, static_cast<uint32_t>(blobs.size()));
    for (const auto& [name, data] : blobs) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u64(out, static_cast<uint64_t>(data.size()));
        const size_t at = out.size();
        out.resize(at + data.size() * sizeof(float));
        std::memcpy(out.data() + at, data.data(), data.size() * sizeof(float));
    }
    return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    r.need(kMagicLen);
    require(std::memcmp(bytes.data(), kMagic, kMagicLen) == 0, ErrorKind::CheckpointMissing,
            "bad checkpoint magic");
    r.pos = kMagicLen;

    Checkpoint ck;
    ck.role = r.str(r.u32());
    const std::string hdr = r.str(r.u32());
    try {
        ck.header = nlohmann::json::parse(hdr);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::CheckpointMissing, std::string("bad checkpoint header: ") + e.what());
    }
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = r.str(r.u32());
        const uint64_t n = r.u64();
        r.need(n * sizeof(float));
        std::vector<float> data(n);
        std::memcpy(data.data(), bytes.data() + r.pos, n * sizeof(float));
        r.pos += n * sizeof(float);
        ck.blobs.emplace(std::move(name), std::move(data));
    }
    return ck;
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::CheckpointMissing, "cannot open checkpoint " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::filesystem::create_directories(path.parent_path());
    const auto bytes = serialize();
    // Write to a temp name then rename so a crash never leaves a torn file.
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorKind::CheckpointMissing, "cannot write " + tmp);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::string sha256_hex(const std::vector<uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::CheckpointMissing, "cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

}  // namespace objmst
