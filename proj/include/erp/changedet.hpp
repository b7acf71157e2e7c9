#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "erp/preprocess.hpp"
#include "erp/raster.hpp"

namespace erp {

enum class TileState : std::uint8_t { Unchanged = 0, Changed = 1, NotObservable = 2 };

/// Per (band, tile) change state, band-major.
struct ChangeMap {
    TileGrid grid;
    int bands = 0;
    std::vector<TileState> states;

    ChangeMap() = default;
    ChangeMap(const TileGrid& g, int band_count, TileState fill = TileState::Unchanged)
        : grid(g), bands(band_count), states(static_cast<std::size_t>(g.count()) * band_count, fill) {}

    TileState& at(int band, int tile) { return states[static_cast<std::size_t>(band) * grid.count() + tile]; }
    TileState at(int band, int tile) const { return states[static_cast<std::size_t>(band) * grid.count() + tile]; }

    long count(TileState s) const;
    long count(TileState s, int band) const;
    double fraction(TileState s) const {
        return states.empty() ? 0.0 : static_cast<double>(count(s)) / static_cast<double>(states.size());
    }

    bool operator==(const ChangeMap&) const = default;
};

struct DetectionConfig {
    double theta = 0.01;
    int reference_downsample = 51;
    int tile_size = 64;
    double align_tolerance = 0.005;

    void validate() const;
};

/// Outcome of one capture's detection, including the per-band fits the codec
/// transmits and the per-tile downsampled differences.
struct Detection {
    ChangeMap map;
    std::vector<IlluminationFit> fits;
    std::vector<bool> degenerate_fit;      // fell back to identity
    std::vector<TilePlane<double>> diffs;  // kNotObservable where not observable

    bool any_degenerate() const;
};

/// Grid used for reference rasters of an H x W cell under `cfg`.
BlockGrid reference_grid(int height, int width, const DetectionConfig& cfg);

/// Downsampled reference raster for one full-resolution band.
Band make_reference_raster(const Band& full, const DetectionConfig& cfg);

/// `references[b]` is the onboard downsampled reference for band b, or
/// nullptr when none is cached (that band's tiles become NotObservable).
Detection detect_changes(const Image& capture, std::span<const Band* const> references, const CloudMask& cloud,
                         const DetectionConfig& cfg);

/// Re-thresholds previously computed per-tile differences.
ChangeMap threshold_diffs(const std::vector<TilePlane<double>>& diffs, const TileGrid& grid, double theta);

struct CalibrationSample {
    double diff = 0.0;  // downsampled-domain tile difference
    bool truly_changed = false;
};

struct ThetaSweep {
    double lo = 0.001;
    double hi = 0.02;
    double step = 0.0005;

    std::vector<double> grid() const;
};

struct CalibrationResult {
    double theta = 0.0;
    double false_positive_rate = 0.0;
    double miss_rate = 0.0;
    double changed_fraction = 0.0;  // share of samples marked changed at theta
};

/// Rates for a fixed theta over a sample set.
CalibrationResult evaluate_theta(std::span<const CalibrationSample> samples, double theta);

/// Smallest sweep theta whose unchanged-tile false-positive rate stays within
/// `fp_budget`; the sweep top when the history holds no truly changed tile.
CalibrationResult calibrate_theta(std::span<const CalibrationSample> history, const ThetaSweep& sweep = {},
                                  double fp_budget = 0.01);

/// Truly changed, observable tiles marked Unchanged, over truly changed observable tiles.
double miss_rate(const ChangeMap& map, const std::vector<TilePlane<bool>>& truth);

/// Truly unchanged, observable tiles marked Changed, over truly unchanged observable tiles.
double false_positive_rate(const ChangeMap& map, const std::vector<TilePlane<bool>>& truth);

}  // namespace erp
