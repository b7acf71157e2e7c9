#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "erp/changedet.hpp"
#include "erp/preprocess.hpp"
#include "erp/raster.hpp"

namespace erp {

/// Per-changed-tile rate: gamma bits per pixel, split over quality layers.
/// Layer fractions act as cumulative byte caps (layers 1..l may use at most
/// sum(fractions[0..l]) of the tile budget).
struct RateConfig {
    double gamma = 1.0;
    std::vector<double> layer_fractions{0.5, 0.3, 0.2};

    int layers() const { return static_cast<int>(layer_fractions.size()); }
    void validate() const;
};

/// Whole-image bits per pixel when a `changed_fraction` of tiles is coded at gamma.
inline double whole_image_bpp(double gamma, double changed_fraction) { return gamma * changed_fraction; }

/// Layer-data byte budget of one tile (the per-tile directory entry is extra).
long tile_budget_bytes(double gamma, long pixels);

/// Directory entry size per coded tile for `layers` layers.
inline std::size_t tile_header_bytes(int layers) { return 1 + 4 + 1 + 2 * static_cast<std::size_t>(layers); }

/// One coded (band, tile): a step exponent and one deflated stream per layer.
struct TileCode {
    std::uint8_t band = 0;
    std::uint32_t tile = 0;
    std::int8_t step_exp = 0;  // finest quantizer step is 2^(step_exp/4)
    std::vector<std::vector<std::uint8_t>> layers;

    bool operator==(const TileCode&) const = default;
};

struct BandHeader {
    std::uint8_t band_id = 0;
    double reference_time = -1.0;  // source capture of the reference used; < 0 when none
    double k = 1.0;
    double d = 0.0;

    bool operator==(const BandHeader&) const = default;
};

/// Downlink payload ("ERPD"). Layout, little-endian:
///   "ERPD" u16 version | u8 flags | u8 layer_count | u64 cell_id | f64 captured_at |
///   u32 height | u32 width | u16 tile_size | u8 band_count | f32 gamma |
///   band_count x (u8 band_id, f64 reference_time, f64 k, f64 d) |
///   change-map bitmap, 2 bits per (band, tile), band-major, LSB first |
///   u32 block_count | block_count x (u8 band, u32 tile, i8 step_exp, u16 size[layer_count]) |
///   layer 1 streams of every block in directory order | layer 2 ... | layer L
/// A payload truncated at a layer-section boundary is itself a valid payload.
struct EncodedPayload {
    static constexpr std::uint16_t kVersion = 1;
    static constexpr std::uint8_t kFullDownload = 1;

    std::uint64_t cell_id = 0;
    double captured_at = 0.0;
    int height = 0;
    int width = 0;
    int tile_size = 64;
    float gamma = 0.0f;
    std::uint8_t flags = 0;
    int layer_count = 1;
    int kept_layers = 1;
    std::vector<BandHeader> bands;
    ChangeMap map;
    std::vector<TileCode> blocks;

    bool full_download() const { return (flags & kFullDownload) != 0; }

    std::size_t header_bytes() const;
    std::size_t layer_bytes(int layer) const;  // 1-based
    std::size_t total_bytes() const;

    std::vector<std::uint8_t> serialize() const;
    static EncodedPayload parse(std::span<const std::uint8_t> bytes);

    bool operator==(const EncodedPayload&) const = default;
};

/// Tiles coded by default: every Changed tile.
std::vector<bool> changed_selection(const ChangeMap& map);

/// Codes the selected (band, tile) pairs of `image`. `selection` is band-major
/// over the tile grid and must include every Changed tile. `reference_times`
/// holds one entry per band (< 0 when no reference was used).
EncodedPayload encode(const Image& image, const ChangeMap& map, const std::vector<IlluminationFit>& fits,
                      const RateConfig& rate, const std::vector<bool>& selection,
                      const std::vector<double>& reference_times, std::uint8_t flags = 0);

inline EncodedPayload encode(const Image& image, const ChangeMap& map, const std::vector<IlluminationFit>& fits,
                             const RateConfig& rate) {
    return encode(image, map, fits, rate, changed_selection(map),
                  std::vector<double>(static_cast<std::size_t>(image.band_count()), -1.0));
}

/// Keeps the first `keep` layers (1 <= keep <= layer_count). A payload without
/// coded blocks has nothing to drop and is returned unchanged.
EncodedPayload truncate_layers(const EncodedPayload& payload, int keep);

/// Coded tiles at the payload's kept layers; everything else left at 0 and
/// excluded from the returned validity mask.
struct DecodedTiles {
    Image image;
    PixelMask valid;
};
DecodedTiles decode_tiles(const EncodedPayload& payload);

/// Ground-side rebuild. Coded tiles come from the payload, Unchanged tiles
/// from clamp(k * R + d) over the band's full-resolution ground reference.
/// Tiles that are neither stay invalid. Throws ReconstructionImpossible when
/// an Unchanged tile needs a reference that is absent.
struct Reconstruction {
    Image image;
    PixelMask valid;
};
Reconstruction reconstruct(const EncodedPayload& payload, std::span<const Band* const> ground_references);
Reconstruction reconstruct(const EncodedPayload& payload, const Image* ground_reference);

/// Lower-level tile coder, exposed for tests.
TileCode encode_tile(const Band& band, const Rect& rect, const RateConfig& rate);
void decode_tile(const TileCode& code, int kept_layers, int layer_count, const Rect& rect, Band& out);
double quantizer_step(std::int8_t step_exp, int layer, int layer_count);

/// Orthonormal 2D Haar transform of a square power-of-two block (in place).
void haar_forward(std::vector<double>& block, int size);
void haar_inverse(std::vector<double>& block, int size);

}  // namespace erp
