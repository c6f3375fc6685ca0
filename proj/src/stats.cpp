// Copyright (C) 2026 ObjMST contributors
// SPDX-License-Identifier: Apache-2.0

#include "objmst/stats.hpp"

#include <cmath>

#include "objmst/common.hpp"
#include "objmst/rng.hpp"

namespace objmst {

namespace {

constexpr double kBeta = 12.0;       // palette softmax sharpness
constexpr double kEps = 1e-8;        // smooth-abs / variance floor
constexpr double kSkewEps = 1e-6;
constexpr float kLumR = 0.299f, kLumG = 0.587f, kLumB = 0.114f;

struct Offsets {
    int dx, dy;
};
// Four directions per scale: horizontal, vertical, diagonal, anti-diagonal.
constexpr int kScales[4] = {1, 2, 4, 8};

Offsets dir_offset(int scale, int dir) {
    switch (dir) {
        case 0: return {scale, 0};
        case 1: return {0, scale};
        case 2: return {scale, scale};
        default: return {scale, -scale};
    }
}

inline double smooth_abs(double g) { return std::sqrt(g * g + kEps); }

inline float lum(const Image& img, int y, int x) {
    return kLumR * img.at(y, x, 0) + kLumG * img.at(y, x, 1) + kLumB * img.at(y, x, 2);
}

// Region row/col bounds for the 2x2 layout grid.
inline int region_lo(int extent, int r) { return (r * extent) / 2; }
inline int region_hi(int extent, int r) { return ((r + 1) * extent) / 2; }

// Per-pixel palette softmax, shared by forward and backward.
void palette_softmax(const float* px, const std::vector<float>& palette, double* s) {
    double d[kPaletteBins];
    double dmin = 1e30;
    for (int b = 0; b < kPaletteBins; ++b) {
        const double dr = px[0] - palette[b * 3 + 0];
        const double dg = px[1] - palette[b * 3 + 1];
        const double db = px[2] - palette[b * 3 + 2];
        d[b] = dr * dr + dg * dg + db * db;
        if (d[b] < dmin) dmin = d[b];
    }
    double z = 0.0;
    for (int b = 0; b < kPaletteBins; ++b) {
        s[b] = det_exp(-kBeta * (d[b] - dmin));
        z += s[b];
    }
    for (int b = 0; b < kPaletteBins; ++b) s[b] /= z;
}

}  // namespace

std::vector<float> image_stats(const Image& img, const std::vector<float>& palette) {
    require(static_cast<int>(palette.size()) == kPaletteBins * 3, ErrorKind::SizeMismatch,
            "palette must be 24x3");
    require(img.height >= 18 && img.width >= 18, ErrorKind::ImageTooSmall,
            "image statistics need at least 18x18");
    const int H = img.height, W = img.width;
    const double N = static_cast<double>(H) * W;
    std::vector<float> s(kStatsDim, 0.0f);

    // Mean and std per channel.
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c);
                sum[c] += v;
                sq[c] += v * v;
            }
    double mean[3], sd[3];
    for (int c = 0; c < 3; ++c) {
        mean[c] = sum[c] / N;
        const double var = sq[c] / N - mean[c] * mean[c];
        sd[c] = std::sqrt((var > 0 ? var : 0) + kEps);
        s[c] = static_cast<float>(mean[c]);
        s[3 + c] = static_cast<float>(sd[c]);
    }

    // Soft palette histogram.
    {
        double acc[kPaletteBins] = {};
        double sm[kPaletteBins];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                palette_softmax(&img.data[(static_cast<size_t>(y) * W + x) * 3], palette, sm);
                for (int b = 0; b < kPaletteBins; ++b) acc[b] += sm[b];
            }
        for (int b = 0; b < kPaletteBins; ++b) s[6 + b] = static_cast<float>(acc[b] / N);
    }

    // Directional gradient energies on luminance.
    for (int si = 0; si < 4; ++si)
        for (int dir = 0; dir < 4; ++dir) {
            const Offsets o = dir_offset(kScales[si], dir);
            double acc = 0.0;
            long cnt = 0;
            for (int y = 0; y < H; ++y) {
                const int yy = y + o.dy;
                if (yy < 0 || yy >= H) continue;
                for (int x = 0; x + o.dx < W; ++x) {
                    acc += smooth_abs(lum(img, yy, x + o.dx) - lum(img, y, x));
                    ++cnt;
                }
            }
            s[30 + si * 4 + dir] = static_cast<float>(acc / static_cast<double>(cnt));
        }

    // 2x2 region RGB means.
    for (int ry = 0; ry < 2; ++ry)
        for (int rx = 0; rx < 2; ++rx) {
            double acc[3] = {0, 0, 0};
            long cnt = 0;
            for (int y = region_lo(H, ry); y < region_hi(H, ry); ++y)
                for (int x = region_lo(W, rx); x < region_hi(W, rx); ++x) {
                    for (int c = 0; c < 3; ++c) acc[c] += img.at(y, x, c);
                    ++cnt;
                }
            for (int c = 0; c < 3; ++c)
                s[46 + (ry * 2 + rx) * 3 + c] = static_cast<float>(acc[c] / cnt);
        }

    // 2x2 region gradient energy at offset 2 (horizontal + vertical halves).
    for (int ry = 0; ry < 2; ++ry)
        for (int rx = 0; rx < 2; ++rx) {
            double acc = 0.0;
            long cnt = 0;
            for (int y = region_lo(H, ry); y < region_hi(H, ry); ++y)
                for (int x = region_lo(W, rx); x < region_hi(W, rx); ++x) {
                    if (x + 2 < W) {
                        acc += smooth_abs(lum(img, y, x + 2) - lum(img, y, x));
                        ++cnt;
                    }
                    if (y + 2 < H) {
                        acc += smooth_abs(lum(img, y + 2, x) - lum(img, y, x));
                        ++cnt;
                    }
                }
            s[58 + ry * 2 + rx] = static_cast<float>(acc / static_cast<double>(cnt));
        }

    // Center-minus-border contrast.
    {
        double ctr[3] = {0, 0, 0}, brd[3] = {0, 0, 0};
        long nc = 0, nb = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const bool center =
                    y >= H / 4 && y < (3 * H) / 4 && x >= W / 4 && x < (3 * W) / 4;
                for (int c = 0; c < 3; ++c)
                    (center ? ctr : brd)[c] += img.at(y, x, c);
                (center ? nc : nb) += 1;
            }
        for (int c = 0; c < 3; ++c)
            s[62 + c] = static_cast<float>(ctr[c] / nc - brd[c] / nb);
    }

    // Row / column profile slopes.
    {
        double denom_y = 0.0, denom_x = 0.0;
        for (int y = 0; y < H; ++y) denom_y += (y - (H - 1) * 0.5) * (y - (H - 1) * 0.5);
        for (int x = 0; x < W; ++x) denom_x += (x - (W - 1) * 0.5) * (x - (W - 1) * 0.5);
        double sy[3] = {0, 0, 0}, sx[3] = {0, 0, 0};
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v = img.at(y, x, c);
                    sy[c] += (y - (H - 1) * 0.5) * v;
                    sx[c] += (x - (W - 1) * 0.5) * v;
                }
        for (int c = 0; c < 3; ++c) {
            s[65 + c] = static_cast<float>(sy[c] / (denom_y * W));
            s[68 + c] = static_cast<float>(sx[c] / (denom_x * H));
        }
    }

    // Luminance moments.
    {
        double sl = 0.0, sl2 = 0.0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double l = lum(img, y, x);
                sl += l;
                sl2 += l * l;
            }
        const double mu = sl / N;
        const double var = sl2 / N - mu * mu;
        const double sdl = std::sqrt((var > 0 ? var : 0) + kEps);
        double m3 = 0.0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double d = lum(img, y, x) - mu;
                m3 += d * d * d;
            }
        m3 /= N;
        s[71] = static_cast<float>(mu);
        s[72] = static_cast<float>(sdl);
        s[73] = static_cast<float>(m3 / (sdl * sdl * sdl + kSkewEps));
    }

    // Smooth mean absolute Laplacian per channel over interior pixels.
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        long cnt = 0;
        for (int y = 1; y + 1 < H; ++y)
            for (int x = 1; x + 1 < W; ++x) {
                const double lap = 4.0 * img.at(y, x, c) - img.at(y - 1, x, c) -
                                   img.at(y + 1, x, c) - img.at(y, x - 1, c) -
                                   img.at(y, x + 1, c);
                acc += smooth_abs(lap);
                ++cnt;
            }
        s[74 + c] = static_cast<float>(acc / static_cast<double>(cnt));
    }

    return s;
}

void image_stats_backward(const Image& img, const std::vector<float>& palette,
                          const float* g, std::vector<float>& grad) {
    require(grad.size() == img.data.size(), ErrorKind::SizeMismatch,
            "grad buffer shape mismatch");
    const int H = img.height, W = img.width;
    const double N = static_cast<double>(H) * W;

    auto add = [&](int y, int x, int c, double v) {
        grad[(static_cast<size_t>(y) * W + x) * 3 + c] += static_cast<float>(v);
    };
    auto add_lum = [&](int y, int x, double v) {
        add(y, x, 0, v * kLumR);
        add(y, x, 1, v * kLumG);
        add(y, x, 2, v * kLumB);
    };

    // Recompute the shared reductions needed by the chain rules.
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    double sl = 0.0, sl2 = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c);
                sum[c] += v;
                sq[c] += v * v;
            }
            const double l = lum(img, y, x);
            sl += l;
            sl2 += l * l;
        }
    double mean[3], sd[3];
    for (int c = 0; c < 3; ++c) {
        mean[c] = sum[c] / N;
        const double var = sq[c] / N - mean[c] * mean[c];
        sd[c] = std::sqrt((var > 0 ? var : 0) + kEps);
    }
    const double muL = sl / N;
    const double varL = sl2 / N - muL * muL;
    const double sdL = std::sqrt((varL > 0 ? varL : 0) + kEps);
    double m3 = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double d = lum(img, y, x) - muL;
            m3 += d * d * d;
        }
    m3 /= N;
    const double sd3 = sdL * sdL * sdL + kSkewEps;

    // Mean and std.
    for (int c = 0; c < 3; ++c) {
        const double gm = g[c] / N;
        const double gs = g[3 + c];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                add(y, x, c, gm + gs * (img.at(y, x, c) - mean[c]) / (N * sd[c]));
    }

    // Palette histogram.
    {
        double sm[kPaletteBins];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const float* px = &img.data[(static_cast<size_t>(y) * W + x) * 3];
                palette_softmax(px, palette, sm);
                double gdot = 0.0;
                for (int b = 0; b < kPaletteBins; ++b) gdot += g[6 + b] * sm[b];
                for (int c = 0; c < 3; ++c) {
                    double t1 = 0.0, v = 0.0;
                    for (int b = 0; b < kPaletteBins; ++b) {
                        const double u = 2.0 * (px[c] - palette[b * 3 + c]);
                        t1 += g[6 + b] * sm[b] * u;
                        v += sm[b] * u;
                    }
                    add(y, x, c, (-kBeta / N) * (t1 - gdot * v));
                }
            }
    }

    // Directional gradient energies.
    for (int si = 0; si < 4; ++si)
        for (int dir = 0; dir < 4; ++dir) {
            const double gw = g[30 + si * 4 + dir];
            if (gw == 0.0) continue;
            const Offsets o = dir_offset(kScales[si], dir);
            long cnt = 0;
            for (int y = 0; y < H; ++y) {
                const int yy = y + o.dy;
                if (yy < 0 || yy >= H) continue;
                for (int x = 0; x + o.dx < W; ++x) ++cnt;
            }
            const double k = gw / static_cast<double>(cnt);
            for (int y = 0; y < H; ++y) {
                const int yy = y + o.dy;
                if (yy < 0 || yy >= H) continue;
                for (int x = 0; x + o.dx < W; ++x) {
                    const double gd = lum(img, yy, x + o.dx) - lum(img, y, x);
                    const double d = k * gd / smooth_abs(gd);
                    add_lum(yy, x + o.dx, d);
                    add_lum(y, x, -d);
                }
            }
        }

    // Region means.
    for (int ry = 0; ry < 2; ++ry)
        for (int rx = 0; rx < 2; ++rx) {
            const long cnt = static_cast<long>(region_hi(H, ry) - region_lo(H, ry)) *
                             (region_hi(W, rx) - region_lo(W, rx));
            for (int c = 0; c < 3; ++c) {
                const double k = g[46 + (ry * 2 + rx) * 3 + c] / cnt;
                if (k == 0.0) continue;
                for (int y = region_lo(H, ry); y < region_hi(H, ry); ++y)
                    for (int x = region_lo(W, rx); x < region_hi(W, rx); ++x)
                        add(y, x, c, k);
            }
        }

    // Region gradient energies.
    for (int ry = 0; ry < 2; ++ry)
        for (int rx = 0; rx < 2; ++rx) {
            const double gw = g[58 + ry * 2 + rx];
            if (gw == 0.0) continue;
            long cnt = 0;
            for (int y = region_lo(H, ry); y < region_hi(H, ry); ++y)
                for (int x = region_lo(W, rx); x < region_hi(W, rx); ++x) {
                    if (x + 2 < W) ++cnt;
                    if (y + 2 < H) ++cnt;
                }
            const double k = gw / static_cast<double>(cnt);
            for (int y = region_lo(H, ry); y < region_hi(H, ry); ++y)
                for (int x = region_lo(W, rx); x < region_hi(W, rx); ++x) {
                    if (x + 2 < W) {
                        const double gd = lum(img, y, x + 2) - lum(img, y, x);
                        const double d = k * gd / smooth_abs(gd);
                        add_lum(y, x + 2, d);
                        add_lum(y, x, -d);
                    }
                    if (y + 2 < H) {
                        const double gd = lum(img, y + 2, x) - lum(img, y, x);
                        const double d = k * gd / smooth_abs(gd);
                        add_lum(y + 2, x, d);
                        add_lum(y, x, -d);
                    }
                }
        }

    // Center-minus-border contrast.
    {
        long nc = 0, nb = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const bool center =
                    y >= H / 4 && y < (3 * H) / 4 && x >= W / 4 && x < (3 * W) / 4;
                (center ? nc : nb) += 1;
            }
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const bool center =
                    y >= H / 4 && y < (3 * H) / 4 && x >= W / 4 && x < (3 * W) / 4;
                for (int c = 0; c < 3; ++c)
                    add(y, x, c, g[62 + c] * (center ? 1.0 / nc : -1.0 / nb));
            }
    }

    // Row / column slopes.
    {
        double denom_y = 0.0, denom_x = 0.0;
        for (int y = 0; y < H; ++y) denom_y += (y - (H - 1) * 0.5) * (y - (H - 1) * 0.5);
        for (int x = 0; x < W; ++x) denom_x += (x - (W - 1) * 0.5) * (x - (W - 1) * 0.5);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c)
                    add(y, x, c,
                        g[65 + c] * (y - (H - 1) * 0.5) / (denom_y * W) +
                            g[68 + c] * (x - (W - 1) * 0.5) / (denom_x * H));
    }

    // Luminance moments.
    {
        const double gmu = g[71], gsd = g[72], gsk = g[73];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double d = lum(img, y, x) - muL;
                const double dsd = d / (N * sdL);
                const double dm3 = (3.0 / N) * (d * d - varL);
                const double dskew = dm3 / sd3 - m3 * 3.0 * sdL * sdL * dsd / (sd3 * sd3);
                add_lum(y, x, gmu / N + gsd * dsd + gsk * dskew);
            }
    }

    // Laplacian residual.
    for (int c = 0; c < 3; ++c) {
        const double gw = g[74 + c];
        if (gw == 0.0) continue;
        const long cnt = static_cast<long>(H - 2) * (W - 2);
        const double k = gw / static_cast<double>(cnt);
        for (int y = 1; y + 1 < H; ++y)
            for (int x = 1; x + 1 < W; ++x) {
                const double lap = 4.0 * img.at(y, x, c) - img.at(y - 1, x, c) -
                                   img.at(y + 1, x, c) - img.at(y, x - 1, c) -
                                   img.at(y, x + 1, c);
                const double d = k * lap / smooth_abs(lap);
                add(y, x, c, 4.0 * d);
                add(y - 1, x, c, -d);
                add(y + 1, x, c, -d);
                add(y, x - 1, c, -d);
                add(y, x + 1, c, -d);
            }
    }
}

}  // namespace objmst
