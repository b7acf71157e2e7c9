#include "erp/raster.hpp"

#include <algorithm>
#include <string>

namespace erp {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::NoObservablePixels: return "no-observable-pixels";
        case ErrorCode::InvalidModel: return "invalid-model";
        case ErrorCode::DegenerateFit: return "degenerate-fit";
        case ErrorCode::InvalidReference: return "invalid-reference";
        case ErrorCode::CalibrationFailed: return "calibration-failed";
        case ErrorCode::RateInfeasible: return "rate-infeasible";
        case ErrorCode::BootstrapRequired: return "bootstrap-required";
        case ErrorCode::FormatError: return "format-error";
        case ErrorCode::ReconstructionImpossible: return "reconstruction-impossible";
        case ErrorCode::BudgetViolation: return "budget-violation";
        case ErrorCode::Usage: return "usage";
    }
    return "unknown";
}

void validate(const Image& image) {
    if (!(image.captured_at >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "captured_at must be >= 0");
    }
    for (const Band& b : image.bands) {
        if (b.rows() != image.height() || b.cols() != image.width()) {
            throw Error(ErrorCode::InvalidArgument, "bands differ in size");
        }
        if (b.size() > 0 && (!(b.minCoeff() >= 0.0f) || !(b.maxCoeff() <= 1.0f))) {
            throw Error(ErrorCode::InvalidArgument, "sample outside [0,1]");
        }
    }
}

TileGrid::TileGrid(int height, int width, int tile_size)
    : height_(height), width_(width), tile_(tile_size) {
    if (height < 0 || width < 0 || tile_size <= 0) {
        throw Error(ErrorCode::InvalidArgument, "bad tile grid geometry");
    }
    rows_ = (height + tile_size - 1) / tile_size;
    cols_ = (width + tile_size - 1) / tile_size;
}

Rect TileGrid::tile(int row, int col) const {
    const int y = row * tile_;
    const int x = col * tile_;
    return {y, x, std::min(tile_, height_ - y), std::min(tile_, width_ - x)};
}

namespace {

void uniform_axis(int length, int factor, int tile, std::vector<int>& edges, std::vector<int>& owner) {
    edges.clear();
    owner.clear();
    for (int p = 0; p < length; p += factor) {
        edges.push_back(p);
        // owner tile: the one holding the block's first pixel
        owner.push_back(p / tile);
    }
    edges.push_back(length);
}

void nested_axis(int length, int tile, int factor, std::vector<int>& edges, std::vector<int>& owner) {
    edges.clear();
    owner.clear();
    for (int start = 0, t = 0; start < length; start += tile, ++t) {
        const int len = std::min(tile, length - start);
        const int n = std::max(1, len / factor);
        for (int i = 0; i < n; ++i) {
            edges.push_back(start + (i * len) / n);
            owner.push_back(t);
        }
    }
    edges.push_back(length);
}

}  // namespace

BlockGrid BlockGrid::uniform(int height, int width, int factor, int tile_size) {
    if (factor <= 0 || (factor > height && factor > width)) {
        throw Error(ErrorCode::InvalidArgument, "downsample factor out of range");
    }
    BlockGrid g;
    uniform_axis(height, factor, tile_size, g.row_edges, g.row_tile);
    uniform_axis(width, factor, tile_size, g.col_edges, g.col_tile);
    return g;
}

BlockGrid BlockGrid::nested(const TileGrid& tiles, int factor) {
    if (factor <= 0) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
    BlockGrid g;
    nested_axis(tiles.height(), tiles.tile_size(), factor, g.row_edges, g.row_tile);
    nested_axis(tiles.width(), tiles.tile_size(), factor, g.col_edges, g.col_tile);
    return g;
}

Band block_mean(const Band& band, const BlockGrid& grid) {
    if (grid.row_edges.back() != band.rows() || grid.col_edges.back() != band.cols()) {
        throw Error(ErrorCode::InvalidArgument, "block grid does not match band");
    }
    Band out(grid.rows(), grid.cols());
    for (int r = 0; r < grid.rows(); ++r) {
        for (int c = 0; c < grid.cols(); ++c) {
            const Rect b = grid.block(r, c);
            double sum = 0.0;
            for (int y = b.y; y < b.y + b.h; ++y) {
                const float* row = band.data() + static_cast<long>(y) * band.cols() + b.x;
                for (int x = 0; x < b.w; ++x) sum += row[x];
            }
            out(r, c) = static_cast<float>(std::clamp(sum / static_cast<double>(b.area()), 0.0, 1.0));
        }
    }
    return out;
}

Band downsample(const Band& band, int factor) {
    if (factor == 1) return band;
    return block_mean(band, BlockGrid::uniform(static_cast<int>(band.rows()), static_cast<int>(band.cols()), factor));
}

Band downsample_tiled(const Band& band, const TileGrid& tiles, int factor) {
    if (band.rows() != tiles.height() || band.cols() != tiles.width()) {
        throw Error(ErrorCode::InvalidArgument, "tile grid does not match band");
    }
    return block_mean(band, BlockGrid::nested(tiles, factor));
}

PixelMask full_mask(int height, int width, bool value) {
    return PixelMask::Constant(height, width, value);
}

TilePlane<double> tile_mean_abs_diff(const Band& a, const Band& b, const TileGrid& grid,
                                     const PixelMask& valid) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != valid.rows() ||
        a.cols() != valid.cols() || a.rows() != grid.height() || a.cols() != grid.width()) {
        throw Error(ErrorCode::InvalidArgument, "dimension mismatch in tile_mean_abs_diff");
    }
    TilePlane<double> out(grid.rows(), grid.cols());
    for (int t = 0; t < grid.count(); ++t) {
        const Rect r = grid.tile(t);
        double sum = 0.0;
        long n = 0;
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                if (!valid(y, x)) continue;
                sum += std::abs(static_cast<double>(a(y, x)) - static_cast<double>(b(y, x)));
                ++n;
            }
        }
        out(t / grid.cols(), t % grid.cols()) = n == 0 ? kNotObservable : sum / static_cast<double>(n);
    }
    return out;
}

PsnrReport psnr(const Image& original, const Image& reconstructed, const PixelMask& valid) {
    if (original.band_count() != reconstructed.band_count() || original.height() != reconstructed.height() ||
        original.width() != reconstructed.width() || valid.rows() != original.height() ||
        valid.cols() != original.width()) {
        throw Error(ErrorCode::InvalidArgument, "dimension mismatch in psnr");
    }
    if (!valid.any()) throw Error(ErrorCode::NoObservablePixels, "empty valid mask");
    PsnrReport report;
    double total = 0.0;
    long total_n = 0;
    for (int b = 0; b < original.band_count(); ++b) {
        long n = 0;
        const double sse = masked_squared_error(original.bands[b], reconstructed.bands[b], valid, n);
        report.per_band.push_back(psnr_from_mse(sse / static_cast<double>(n)));
        total += sse;
        total_n += n;
    }
    report.aggregate = psnr_from_mse(total / static_cast<double>(total_n));
    return report;
}

}  // namespace erp
