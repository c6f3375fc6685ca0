// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0
//
// Regenerates the builtin checkpoints and prints their digests. Used to
// refresh src/weights_pins.inc after a builder change.

#include <cstring>
#include <iostream>

#include "objmst/checkpoint.hpp"
#include "objmst/weights.hpp"

int main(int argc, char** argv) {
    using namespace objmst;
    const bool print_manifest = argc > 1 && std::strcmp(argv[1], "--print-manifest") == 0;

    const WeightsManifest manifest = WeightsManifest::default_manifest();
    for (const auto& e : manifest.entries) {
        const uint64_t seed = std::stoull(e.source.substr(8));
        const Checkpoint ck = build_checkpoint(e.role, seed);
        const std::string digest = sha256_hex(ck.serialize());
        if (print_manifest) {
            std::cout << "    {\"" << e.role << "\", " << seed << ",\n     \"" << digest
                      << "\"},\n";
        } else {
            std::cout << e.role << "  " << digest << "\n";
        }
    }
    return 0;
}
