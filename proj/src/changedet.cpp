#include "erp/changedet.hpp"

#include <algorithm>
#include <cmath>

namespace erp {

long ChangeMap::count(TileState s) const { return std::count(states.begin(), states.end(), s); }

long ChangeMap::count(TileState s, int band) const {
    const auto first = states.begin() + static_cast<long>(band) * grid.count();
    return std::count(first, first + grid.count(), s);
}

void DetectionConfig::validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorCode::InvalidArgument, "theta must lie in (0,1)");
    if (reference_downsample < 1) throw Error(ErrorCode::InvalidArgument, "reference_downsample must be >= 1");
    if (tile_size < 1) throw Error(ErrorCode::InvalidArgument, "tile_size must be >= 1");
}

bool Detection::any_degenerate() const {
    return std::any_of(degenerate_fit.begin(), degenerate_fit.end(), [](bool b) { return b; });
}

BlockGrid reference_grid(int height, int width, const DetectionConfig& cfg) {
    return BlockGrid::nested(TileGrid(height, width, cfg.tile_size), cfg.reference_downsample);
}

Band make_reference_raster(const Band& full, const DetectionConfig& cfg) {
    return block_mean(full, reference_grid(static_cast<int>(full.rows()), static_cast<int>(full.cols()), cfg));
}

Detection detect_changes(const Image& capture, std::span<const Band* const> references, const CloudMask& cloud,
                         const DetectionConfig& cfg) {
    cfg.validate();
    const TileGrid tiles(capture.height(), capture.width(), cfg.tile_size);
    if (static_cast<int>(references.size()) != capture.band_count()) {
        throw Error(ErrorCode::InvalidArgument, "one reference slot per band required");
    }
    if (cloud.cloudy.rows() != tiles.rows() || cloud.cloudy.cols() != tiles.cols()) {
        throw Error(ErrorCode::InvalidArgument, "cloud mask does not match tile grid");
    }
    const BlockGrid blocks = BlockGrid::nested(tiles, cfg.reference_downsample);

    PixelMask clear_blocks(blocks.rows(), blocks.cols());
    for (int r = 0; r < blocks.rows(); ++r) {
        for (int c = 0; c < blocks.cols(); ++c) clear_blocks(r, c) = !cloud.cloudy(blocks.row_tile[r], blocks.col_tile[c]);
    }

    Detection out;
    out.map = ChangeMap(tiles, capture.band_count(), TileState::NotObservable);
    out.fits.assign(capture.band_count(), IlluminationFit::identity());
    out.degenerate_fit.assign(capture.band_count(), false);
    out.diffs.assign(capture.band_count(), TilePlane<double>::Constant(tiles.rows(), tiles.cols(), kNotObservable));

    for (int b = 0; b < capture.band_count(); ++b) {
        const Band* ref = references[b];
        if (ref == nullptr) continue;
        if (ref->rows() != blocks.rows() || ref->cols() != blocks.cols()) {
            throw Error(ErrorCode::InvalidReference, "reference raster is " + std::to_string(ref->rows()) + "x" +
                                                         std::to_string(ref->cols()) + ", expected " +
                                                         std::to_string(blocks.rows()) + "x" +
                                                         std::to_string(blocks.cols()));
        }
        const Band low = block_mean(capture.bands[b], blocks);
        IlluminationFit fit;
        try {
            fit = fit_illumination_consensus(low, *ref, clear_blocks, cfg.align_tolerance);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateFit) throw;
            fit = IlluminationFit::identity();
            out.degenerate_fit[b] = true;
        }
        out.fits[b] = fit;
        const Band aligned = align(*ref, fit);

        TilePlane<double> sum = TilePlane<double>::Zero(tiles.rows(), tiles.cols());
        TilePlane<double> area = TilePlane<double>::Zero(tiles.rows(), tiles.cols());
        for (int r = 0; r < blocks.rows(); ++r) {
            for (int c = 0; c < blocks.cols(); ++c) {
                if (!clear_blocks(r, c)) continue;
                const double a = static_cast<double>(blocks.block(r, c).area());
                const int tr = blocks.row_tile[r], tc = blocks.col_tile[c];
                sum(tr, tc) += a * std::abs(static_cast<double>(low(r, c)) - static_cast<double>(aligned(r, c)));
                area(tr, tc) += a;
            }
        }
        for (int t = 0; t < tiles.count(); ++t) {
            const int tr = t / tiles.cols(), tc = t % tiles.cols();
            if (area(tr, tc) == 0.0) continue;
            const double d = sum(tr, tc) / area(tr, tc);
            out.diffs[b](tr, tc) = d;
            out.map.at(b, t) = d > cfg.theta ? TileState::Changed : TileState::Unchanged;
        }
    }
    return out;
}

ChangeMap threshold_diffs(const std::vector<TilePlane<double>>& diffs, const TileGrid& grid, double theta) {
    ChangeMap map(grid, static_cast<int>(diffs.size()), TileState::NotObservable);
    for (int b = 0; b < map.bands; ++b) {
        for (int t = 0; t < grid.count(); ++t) {
            const double d = diffs[b](t / grid.cols(), t % grid.cols());
            if (d == kNotObservable) continue;
            map.at(b, t) = d > theta ? TileState::Changed : TileState::Unchanged;
        }
    }
    return map;
}

std::vector<double> ThetaSweep::grid() const {
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) g.push_back(lo + step * i);
    return g;
}

CalibrationResult evaluate_theta(std::span<const CalibrationSample> samples, double theta) {
    long changed = 0, unchanged = 0, fp = 0, miss = 0, flagged = 0;
    for (const auto& s : samples) {
        const bool flag = s.diff > theta;
        flagged += flag;
        if (s.truly_changed) {
            ++changed;
            miss += !flag;
        } else {
            ++unchanged;
            fp += flag;
        }
    }
    CalibrationResult r;
    r.theta = theta;
    r.false_positive_rate = unchanged ? static_cast<double>(fp) / unchanged : 0.0;
    r.miss_rate = changed ? static_cast<double>(miss) / changed : 0.0;
    r.changed_fraction = samples.empty() ? 0.0 : static_cast<double>(flagged) / samples.size();
    return r;
}

CalibrationResult calibrate_theta(std::span<const CalibrationSample> history, const ThetaSweep& sweep,
                                  double fp_budget) {
    if (history.empty()) throw Error(ErrorCode::CalibrationFailed, "empty profiling history");
    const auto grid = sweep.grid();
    const bool any_change = std::any_of(history.begin(), history.end(), [](const auto& s) { return s.truly_changed; });
    if (!any_change) return evaluate_theta(history, grid.back());
    for (double theta : grid) {
        const CalibrationResult r = evaluate_theta(history, theta);
        if (r.false_positive_rate <= fp_budget) return r;
    }
    throw Error(ErrorCode::CalibrationFailed, "no theta in the sweep meets the false-positive budget");
}

namespace {

template <bool kMiss>
double rate(const ChangeMap& map, const std::vector<TilePlane<bool>>& truth) {
    if (static_cast<int>(truth.size()) != map.bands) throw Error(ErrorCode::InvalidArgument, "truth band count mismatch");
    long denom = 0, num = 0;
    for (int b = 0; b < map.bands; ++b) {
        for (int t = 0; t < map.grid.count(); ++t) {
            const TileState s = map.at(b, t);
            if (s == TileState::NotObservable) continue;
            const bool changed = truth[b](t / map.grid.cols(), t % map.grid.cols());
            if (changed != kMiss) continue;
            ++denom;
            if constexpr (kMiss) {
                num += s == TileState::Unchanged;
            } else {
                num += s == TileState::Changed;
            }
        }
    }
    return denom ? static_cast<double>(num) / denom : 0.0;
}

}  // namespace

double miss_rate(const ChangeMap& map, const std::vector<TilePlane<bool>>& truth) { return rate<true>(map, truth); }

double false_positive_rate(const ChangeMap& map, const std::vector<TilePlane<bool>>& truth) {
    return rate<false>(map, truth);
}

}  // namespace erp
