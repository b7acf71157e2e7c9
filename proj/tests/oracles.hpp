#pragma once

// Brute-force reference implementations used by the property suites. They
// are written per pixel, in long double where sums are involved, and do not
// call the library routines they check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "erp/changedet.hpp"
#include "erp/raster.hpp"
#include "erp/refstore.hpp"

namespace oracle {

using erp::Band;
using erp::PixelMask;

inline Band random_band(std::mt19937_64& rng, int h, int w) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Band b(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) b(y, x) = u(rng);
    return b;
}

inline PixelMask random_mask(std::mt19937_64& rng, int h, int w, double p_true) {
    std::bernoulli_distribution d(p_true);
    PixelMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m(y, x) = d(rng);
    return m;
}

// Per-pixel accumulation into tile bins.
inline std::vector<std::vector<double>> tile_mean_abs_diff(const Band& a, const Band& b, int tile,
                                                           const PixelMask& valid) {
    const int h = static_cast<int>(a.rows()), w = static_cast<int>(a.cols());
    const int rows = (h + tile - 1) / tile, cols = (w + tile - 1) / tile;
    std::vector<std::vector<long double>> sum(rows, std::vector<long double>(cols, 0.0L));
    std::vector<std::vector<long>> n(rows, std::vector<long>(cols, 0));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!valid(y, x)) continue;
            sum[y / tile][x / tile] += std::fabs(static_cast<long double>(a(y, x)) - static_cast<long double>(b(y, x)));
            ++n[y / tile][x / tile];
        }
    }
    std::vector<std::vector<double>> out(rows, std::vector<double>(cols, erp::kNotObservable));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (n[r][c] > 0) out[r][c] = static_cast<double>(sum[r][c] / n[r][c]);
    return out;
}

inline long double sse(const Band& a, const Band& b, const PixelMask& valid, long& n) {
    long double s = 0.0L;
    for (int y = 0; y < a.rows(); ++y) {
        for (int x = 0; x < a.cols(); ++x) {
            if (!valid(y, x)) continue;
            const long double e = static_cast<long double>(a(y, x)) - static_cast<long double>(b(y, x));
            s += e * e;
            ++n;
        }
    }
    return s;
}

inline double psnr(const erp::Image& a, const erp::Image& b, const PixelMask& valid) {
    long double s = 0.0L;
    long n = 0;
    for (int k = 0; k < a.band_count(); ++k) s += sse(a.bands[k], b.bands[k], valid, n);
    if (s == 0.0L) return erp::kInfDb;
    return static_cast<double>(10.0L * std::log10(static_cast<long double>(n) / s));
}

struct Line {
    double k = 1.0, d = 0.0;
    long n = 0;
};

// Closed-form OLS from raw moment sums.
inline std::optional<Line> ols(const Band& c, const Band& r, const PixelMask& m) {
    long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int y = 0; y < c.rows(); ++y) {
        for (int x = 0; x < c.cols(); ++x) {
            if (!m(y, x)) continue;
            const long double X = r(y, x), Y = c(y, x);
            n += 1;
            sx += X;
            sy += Y;
            sxx += X * X;
            sxy += X * Y;
        }
    }
    const long double den = n * sxx - sx * sx;
    if (n < 2 || !(den > 1e-24L * n * n)) return std::nullopt;
    Line l;
    l.k = static_cast<double>((n * sxy - sx * sy) / den);
    l.d = static_cast<double>((sy - static_cast<long double>(l.k) * sx) / n);
    l.n = static_cast<long>(n);
    return l;
}

// Block index of pixel p on one axis of the tile-nested grid.
inline int nested_block(int p, int length, int tile, int factor, int& block_tile) {
    int before = 0;
    for (int t = 0; t * tile < length; ++t) {
        const int start = t * tile, len = std::min(tile, length - start);
        const int n = std::max(1, len / factor);
        if (p < start + len) {
            block_tile = t;
            const int o = p - start;
            int i = 0;
            while (i + 1 < n && (static_cast<long>(i + 1) * len) / n <= o) ++i;
            return before + i;
        }
        before += n;
    }
    return -1;
}

inline int nested_count(int length, int tile, int factor) {
    int n = 0;
    for (int start = 0; start < length; start += tile) n += std::max(1, std::min(tile, length - start) / factor);
    return n;
}

inline Band nested_block_mean(const Band& band, int tile, int factor) {
    const int h = static_cast<int>(band.rows()), w = static_cast<int>(band.cols());
    const int br = nested_count(h, tile, factor), bc = nested_count(w, tile, factor);
    std::vector<long double> sum(static_cast<std::size_t>(br) * bc, 0.0L);
    std::vector<long> n(sum.size(), 0);
    int t = 0;
    std::vector<int> col(w);
    for (int x = 0; x < w; ++x) col[x] = nested_block(x, w, tile, factor, t);
    for (int y = 0; y < h; ++y) {
        const int r = nested_block(y, h, tile, factor, t);
        for (int x = 0; x < w; ++x) {
            const int c = col[x];
            sum[static_cast<std::size_t>(r) * bc + c] += band(y, x);
            ++n[static_cast<std::size_t>(r) * bc + c];
        }
    }
    Band out(br, bc);
    for (int r = 0; r < br; ++r)
        for (int c = 0; c < bc; ++c) {
            const long double m = sum[static_cast<std::size_t>(r) * bc + c] / n[static_cast<std::size_t>(r) * bc + c];
            out(r, c) = static_cast<float>(std::clamp(m, 0.0L, 1.0L));
        }
    return out;
}

// Consensus line as documented on fit_illumination_consensus: up to 64
// evenly strided clear samples propose lines through every pair (plus the
// identity); the line with most inliers wins, ties to the smaller summed
// residual, earlier candidates first.
inline Line consensus(const Band& c, const Band& r, const PixelMask& clear, double tol, bool& degenerate) {
    std::vector<std::pair<int, int>> pts;
    for (int y = 0; y < c.rows(); ++y)
        for (int x = 0; x < c.cols(); ++x)
            if (clear(y, x)) pts.emplace_back(y, x);
    degenerate = false;
    if (pts.size() < 2) {
        degenerate = true;
        return {};
    }
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / 64);
    std::vector<std::pair<int, int>> cand;
    for (std::size_t i = 0; i < pts.size() && cand.size() < 64; i += stride) cand.push_back(pts[i]);
    auto score = [&](double k, double d, long& n, double& spread) {
        n = 0;
        spread = 0;
        for (auto [y, x] : pts) {
            const double e = std::abs(c(y, x) - (k * r(y, x) + d));
            if (e <= tol) {
                ++n;
                spread += e;
            }
        }
    };
    double bk = 1.0, bd = 0.0, bs = 0.0;
    long bn = 0;
    score(1.0, 0.0, bn, bs);
    for (std::size_t a = 0; a < cand.size(); ++a) {
        for (std::size_t b = a + 1; b < cand.size(); ++b) {
            const auto [ya, xa] = cand[a];
            const auto [yb, xb] = cand[b];
            const double dr = static_cast<double>(r(yb, xb)) - r(ya, xa);
            if (std::abs(dr) < 1e-6) continue;
            const double k = (static_cast<double>(c(yb, xb)) - c(ya, xa)) / dr;
            const double d = c(ya, xa) - k * r(ya, xa);
            long n;
            double s;
            score(k, d, n, s);
            if (n > bn || (n == bn && s < bs)) {
                bn = n;
                bs = s;
                bk = k;
                bd = d;
            }
        }
    }
    PixelMask in = PixelMask::Constant(c.rows(), c.cols(), false);
    for (auto [y, x] : pts) in(y, x) = std::abs(c(y, x) - (bk * r(y, x) + bd)) <= tol;
    const auto l = ols(c, r, in);
    if (!l) {
        degenerate = true;
        return {};
    }
    return *l;
}

struct DetectOut {
    std::vector<erp::TileState> states;  // band-major
    std::vector<double> diffs;
    std::vector<bool> degenerate;
};

inline DetectOut detect(const erp::Image& img, const std::vector<const Band*>& refs,
                        const erp::TilePlane<bool>& cloudy, const erp::DetectionConfig& cfg) {
    const int h = img.height(), w = img.width(), T = cfg.tile_size, f = cfg.reference_downsample;
    const int tr = (h + T - 1) / T, tc = (w + T - 1) / T;
    DetectOut out;
    out.states.assign(static_cast<std::size_t>(img.band_count()) * tr * tc, erp::TileState::NotObservable);
    out.diffs.assign(out.states.size(), erp::kNotObservable);
    out.degenerate.assign(img.band_count(), false);
    const int br = nested_count(h, T, f), bc = nested_count(w, T, f);
    // block -> owning tile, block areas, clear flags
    std::vector<int> row_tile(br), col_tile(bc), row_len(br, 0), col_len(bc, 0);
    int t = 0;
    for (int y = 0; y < h; ++y) {
        const int r = nested_block(y, h, T, f, t);
        row_tile[r] = t;
        ++row_len[r];
    }
    for (int x = 0; x < w; ++x) {
        const int c = nested_block(x, w, T, f, t);
        col_tile[c] = t;
        ++col_len[c];
    }
    PixelMask clear(br, bc);
    for (int r = 0; r < br; ++r)
        for (int c = 0; c < bc; ++c) clear(r, c) = !cloudy(row_tile[r], col_tile[c]);

    for (int b = 0; b < img.band_count(); ++b) {
        if (!refs[b]) continue;
        const Band low = nested_block_mean(img.bands[b], T, f);
        bool degenerate = false;
        const Line fit = consensus(low, *refs[b], clear, cfg.align_tolerance, degenerate);
        out.degenerate[b] = degenerate;
        std::vector<long double> sum(static_cast<std::size_t>(tr) * tc, 0.0L), area(sum.size(), 0.0L);
        for (int r = 0; r < br; ++r) {
            for (int c = 0; c < bc; ++c) {
                if (!clear(r, c)) continue;
                const double aligned = std::clamp(fit.k * (*refs[b])(r, c) + fit.d, 0.0, 1.0);
                const float af = static_cast<float>(aligned);
                const long double a = static_cast<long double>(row_len[r]) * col_len[c];
                const std::size_t k = static_cast<std::size_t>(row_tile[r]) * tc + col_tile[c];
                sum[k] += a * std::fabs(static_cast<long double>(low(r, c)) - static_cast<long double>(af));
                area[k] += a;
            }
        }
        for (std::size_t k = 0; k < sum.size(); ++k) {
            if (area[k] == 0) continue;
            const double d = static_cast<double>(sum[k] / area[k]);
            const std::size_t i = static_cast<std::size_t>(b) * tr * tc + k;
            out.diffs[i] = d;
            out.states[i] = d > cfg.theta ? erp::TileState::Changed : erp::TileState::Unchanged;
        }
    }
    return out;
}

// Tiles (row-major) with any block sample differing bitwise; every tile
// when nothing is cached.
inline std::vector<std::uint32_t> diff_tiles(const Band& ground, const Band* cached, int h, int w, int tile,
                                             int factor) {
    const int tr = (h + tile - 1) / tile, tc = (w + tile - 1) / tile;
    auto axis = [&](int length, int blocks) {
        std::vector<int> owner(blocks, -1);
        int t = 0;
        for (int p = 0; p < length; ++p) {
            const int b = nested_block(p, length, tile, factor, t);
            owner[b] = t;
        }
        return owner;
    };
    const auto row_tile = axis(h, static_cast<int>(ground.rows()));
    const auto col_tile = axis(w, static_cast<int>(ground.cols()));
    std::vector<bool> hit(static_cast<std::size_t>(tr) * tc, cached == nullptr);
    if (cached) {
        for (int r = 0; r < ground.rows(); ++r)
            for (int c = 0; c < ground.cols(); ++c)
                if (std::bit_cast<std::uint32_t>(ground(r, c)) != std::bit_cast<std::uint32_t>((*cached)(r, c)))
                    hit[static_cast<std::size_t>(row_tile[r]) * tc + col_tile[c]] = true;
    }
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < hit.size(); ++i)
        if (hit[i]) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

inline std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 0x100000001b3ull;
    return h;
}

}  // namespace oracle
