#include "erp/raster_io.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include "erp/bytes.hpp"

namespace erp {

std::vector<std::uint8_t> encode_erp1(const Image& image) {
    validate(image);
    ByteWriter w;
    w.magic("ERP1");
    w.u32(static_cast<std::uint32_t>(image.height()));
    w.u32(static_cast<std::uint32_t>(image.width()));
    w.u32(static_cast<std::uint32_t>(image.band_count()));
    w.u64(image.cell_id);
    w.f64(image.captured_at);
    w.bytes().reserve(w.size() + 4ull * image.band_count() * image.height() * image.width());
    for (const Band& b : image.bands) {
        for (Eigen::Index i = 0; i < b.size(); ++i) w.f32(b.data()[i]);
    }
    return w.take();
}

Image decode_erp1(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("ERP1");
    const std::uint32_t h = r.u32();
    const std::uint32_t w = r.u32();
    const std::uint32_t nb = r.u32();
    Image img;
    img.cell_id = r.u64();
    img.captured_at = r.f64();
    if (!(img.captured_at >= 0.0)) throw Error(ErrorCode::FormatError, "negative or NaN capture time");
    const std::uint64_t per_band = static_cast<std::uint64_t>(h) * w;
    if (per_band * nb * 4 != r.remaining()) {
        throw Error(ErrorCode::FormatError, "payload size does not match header");
    }
    img.bands.reserve(nb);
    for (std::uint32_t b = 0; b < nb; ++b) {
        Band band(h, w);
        for (std::uint64_t i = 0; i < per_band; ++i) {
            const float v = r.f32();
            if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::FormatError, "sample outside [0,1]");
            band.data()[i] = v;
        }
        img.bands.push_back(std::move(band));
    }
    return img;
}

void write_raster(const std::filesystem::path& path, const Image& image) {
    const auto bytes = encode_erp1(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FormatError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::FormatError, "short write to " + path.string());
}

Image read_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FormatError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_erp1(bytes);
}

}  // namespace erp
