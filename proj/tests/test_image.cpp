// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "objmst/common.hpp"
#include "objmst/image.hpp"
#include "objmst/rng.hpp"

using namespace objmst;

namespace {

Image random_image(int h, int w, uint64_t seed) {
    Image img(h, w);
    Rng rng(seed);
    for (auto& x : img.data) x = rng.uniform_f();
    return img;
}

}  // namespace

TEST_CASE("apply_mask zeroes exactly the outside and keeps the inside") {
    Image img = random_image(40, 40, 7);
    Mask m(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) m.values[y * 40 + x] = (x >= 20) ? 1 : 0;

    const Image out = apply_mask(img, m);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            for (int c = 0; c < 3; ++c) {
                if (x >= 20)
                    CHECK(out.at(y, x, c) == img.at(y, x, c));
                else
                    CHECK(out.at(y, x, c) == 0.0f);
            }
}

TEST_CASE("apply_mask rejects mismatched shapes") {
    Image img = random_image(32, 32, 1);
    Mask m(32, 33);
    CHECK_THROWS_AS(apply_mask(img, m), Error);
}

TEST_CASE("png round trip is exact at 8-bit quantization") {
    const auto dir = std::filesystem::temp_directory_path() / "objmst_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "rt.png";

    Image img(33, 47);
    Rng rng(99);
    for (auto& x : img.data) x = static_cast<float>(rng.uniform_int(256)) / 255.0f;
    save_png(img, path);
    const Image back = load_image_raw(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(max_abs_diff(img, back) == 0.0f);
}

TEST_CASE("load_image enforces format, existence and minimum size") {
    const auto dir = std::filesystem::temp_directory_path() / "objmst_test_io";
    std::filesystem::create_directories(dir);

    CHECK_THROWS_WITH_AS(static_cast<void>(load_image(dir / "missing.png", 256)),
                         doctest::Contains("FileNotFound"), Error);

    const auto txt = dir / "notes.txt";
    { std::ofstream(txt) << "hello"; }
    CHECK_THROWS_WITH_AS(static_cast<void>(load_image(txt, 256)),
                         doctest::Contains("UnsupportedFormat"), Error);

    const auto bad = dir / "bad.png";
    { std::ofstream(bad) << "not a png"; }
    CHECK_THROWS_WITH_AS(static_cast<void>(load_image(bad, 256)),
                         doctest::Contains("CorruptImage"), Error);

    const auto tiny = dir / "tiny.png";
    save_png(random_image(8, 8, 3), tiny);
    CHECK_THROWS_WITH_AS(static_cast<void>(load_image(tiny, 256)),
                         doctest::Contains("ImageTooSmall"), Error);
}

TEST_CASE("load_image resizes to the working resolution preserving aspect") {
    const auto dir = std::filesystem::temp_directory_path() / "objmst_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "wide.png";
    save_png(random_image(64, 128, 5), path);

    const Image out = load_image(path, 96);
    CHECK(out.height == 96);
    CHECK(out.width == 96);
}

TEST_CASE("mask load thresholds to binary and matches image geometry") {
    const auto dir = std::filesystem::temp_directory_path() / "objmst_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "mask.png";

    Image gray(64, 128);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 128; ++x)
            for (int c = 0; c < 3; ++c) gray.at(y, x, c) = (x >= 64) ? 0.9f : 0.1f;
    save_png(gray, path);

    const Mask m = load_mask(path, 96);
    CHECK(m.height == 96);
    CHECK(m.width == 96);
    CHECK(m.is_binary());
    // Right half bright -> inside.
    CHECK(m.values[40 * 96 + 90] == 1);
    CHECK(m.values[40 * 96 + 5] == 0);
}

TEST_CASE("resize_bilinear reproduces constant images exactly") {
    Image img(32, 32);
    for (auto& x : img.data) x = 0.25f;
    const Image out = resize_bilinear(img, 57, 41);
    CHECK(out.height == 57);
    CHECK(out.width == 41);
    CHECK(max_abs_diff(out, [&] {
              Image c(57, 41);
              for (auto& x : c.data) x = 0.25f;
              return c;
          }()) < 1e-6f);
}
