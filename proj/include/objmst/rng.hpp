// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace objmst {

// splitmix64; the project-wide seed derivation primitive. Every stage seed is
// derived from the master seed through derive_seed so stages can be re-run
// independently yet reproducibly.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// Stage seed = splitmix chain over (master, fnv1a(tag), index).
uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index = 0);

// Deterministic generator used everywhere randomness is needed. Gaussian
// draws use an Irwin-Hall sum of 12 uniforms: add/sub only, so the byte
// stream of generated weights does not depend on libm.
class Rng {
public:
    explicit Rng(uint64_t seed) : sm_(seed) {}

    uint64_t next_u64() { return sm_.next(); }

    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniform_f() { return static_cast<float>(uniform()); }
    float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

    // integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        // modulo bias negligible for n << 2^64 and irrelevant here
        return next_u64() % n;
    }

    // approximately N(0,1), Irwin-Hall with k=12
    double gauss() {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += uniform();
        return s - 6.0;
    }

    float gauss_f() { return static_cast<float>(gauss()); }

private:
    SplitMix64 sm_;
};

// exp approximation built from add/mul only; used when generating checkpoint
// bytes so digests do not depend on the host libm. Accurate to ~1e-6 rel on
// [-20, 20], exact monotone.
double det_exp(double x);

}  // namespace objmst
