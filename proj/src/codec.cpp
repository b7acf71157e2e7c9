#include "erp/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "erp/bytes.hpp"
#include "erp/parallel.hpp"

namespace erp {

namespace {

constexpr int kMinStepExp = -60;
constexpr int kMaxStepExp = 28;

class Deflater {
public:
    Deflater() {
        if (deflateInit2(&zs_, 6, Z_DEFLATED, -12, 8, Z_RLE) != Z_OK) {
            throw Error(ErrorCode::InvalidArgument, "zlib deflateInit2 failed");
        }
    }
    ~Deflater() { deflateEnd(&zs_); }
    Deflater(const Deflater&) = delete;
    Deflater& operator=(const Deflater&) = delete;

    std::vector<std::uint8_t> run(const std::vector<std::uint8_t>& in) {
        deflateReset(&zs_);
        std::vector<std::uint8_t> out(deflateBound(&zs_, static_cast<uLong>(in.size())));
        zs_.next_in = const_cast<Bytef*>(in.data());
        zs_.avail_in = static_cast<uInt>(in.size());
        zs_.next_out = out.data();
        zs_.avail_out = static_cast<uInt>(out.size());
        if (deflate(&zs_, Z_FINISH) != Z_STREAM_END) throw Error(ErrorCode::InvalidArgument, "deflate failed");
        out.resize(zs_.total_out);
        return out;
    }

private:
    z_stream zs_{};
};

class Inflater {
public:
    Inflater() {
        if (inflateInit2(&zs_, -15) != Z_OK) throw Error(ErrorCode::FormatError, "zlib inflateInit2 failed");
    }
    ~Inflater() { inflateEnd(&zs_); }
    Inflater(const Inflater&) = delete;
    Inflater& operator=(const Inflater&) = delete;

    std::vector<std::uint8_t> run(std::span<const std::uint8_t> in, std::size_t limit) {
        inflateReset(&zs_);
        std::vector<std::uint8_t> out(limit);
        zs_.next_in = const_cast<Bytef*>(in.data());
        zs_.avail_in = static_cast<uInt>(in.size());
        zs_.next_out = out.data();
        zs_.avail_out = static_cast<uInt>(out.size());
        const int rc = inflate(&zs_, Z_FINISH);
        if (rc != Z_STREAM_END) throw Error(ErrorCode::FormatError, "corrupt layer stream");
        out.resize(zs_.total_out);
        return out;
    }

private:
    z_stream zs_{};
};

Deflater& deflater() {
    thread_local Deflater d;
    return d;
}

Inflater& inflater() {
    thread_local Inflater i;
    return i;
}

int next_pow2(int n) { return static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(1, n)))); }

// Coarse-to-fine coefficient order: Haar level first, then row-major.
const std::vector<int>& scan_order(int size) {
    thread_local std::vector<std::vector<int>> cache(16);
    const int lvl = std::countr_zero(static_cast<unsigned>(size));
    auto& order = cache[lvl];
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(size) * size);
        std::iota(order.begin(), order.end(), 0);
        auto key = [size](int idx) {
            const int i = idx / size, j = idx % size;
            return std::max(std::bit_width(static_cast<unsigned>(i)), std::bit_width(static_cast<unsigned>(j)));
        };
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
    }
    return order;
}

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint64_t get_varint(std::span<const std::uint8_t> in, std::size_t& pos) {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        if (pos >= in.size()) throw Error(ErrorCode::FormatError, "truncated varint");
        const std::uint8_t b = in[pos++];
        v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
        if (!(b & 0x80)) return v;
    }
    throw Error(ErrorCode::FormatError, "varint too long");
}

std::vector<std::uint8_t>& scratch_symbols() {
    thread_local std::vector<std::uint8_t> buf;
    return buf;
}

std::uint64_t zigzag(std::int64_t v) { return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63); }
std::int64_t unzigzag(std::uint64_t v) { return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1); }

// Half away from zero, like llround, without the libm call.
inline std::int64_t round_half_away(double v) {
    const auto t = static_cast<std::int64_t>(v);
    const double f = v - static_cast<double>(t);
    return t + (f >= 0.5) - (f <= -0.5);
}

std::vector<double> padded_block(const Band& band, const Rect& rect, int size) {
    std::vector<double> block(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i) {
        const int y = rect.y + std::min(i, rect.h - 1);
        for (int j = 0; j < size; ++j) {
            const int x = rect.x + std::min(j, rect.w - 1);
            block[static_cast<std::size_t>(i) * size + j] = band(y, x);
        }
    }
    return block;
}

// Layer l of a code with step exponent e, packed into `out`. Layer 1
// carries zigzag varints, refinement layers one byte (s+1) per coefficient;
// both drop trailing zero symbols behind a varint count. `prev` holds layer
// l-1's quantized coefficients on entry and layer l's on exit.
void pack_layer(const std::vector<double>& scanned, int step_exp, int layer, int layers,
                std::vector<std::int64_t>& prev, std::vector<std::uint8_t>& out) {
    const double inv = 1.0 / quantizer_step(static_cast<std::int8_t>(step_exp), layer, layers);
    const std::size_t n = scanned.size();
    prev.resize(n);
    std::size_t last = 0;  // one past the last nonzero symbol
    out.clear();
    if (layer == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            prev[i] = round_half_away(scanned[i] * inv);
            if (prev[i] != 0) last = i + 1;
        }
        put_varint(out, last);
        for (std::size_t i = 0; i < last; ++i) put_varint(out, zigzag(prev[i]));
        return;
    }
    std::vector<std::uint8_t>& sym = scratch_symbols();
    sym.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t q = round_half_away(scanned[i] * inv);
        const auto s = static_cast<std::int8_t>(q - 2 * prev[i]);
        prev[i] = q;
        sym[i] = static_cast<std::uint8_t>(s + 1);
        if (s != 0) last = i + 1;
    }
    put_varint(out, last);
    out.insert(out.end(), sym.begin(), sym.begin() + static_cast<long>(last));
}

void write_map(ByteWriter& w, const ChangeMap& map) {
    std::vector<std::uint8_t> bits((map.states.size() * 2 + 7) / 8, 0);
    for (std::size_t i = 0; i < map.states.size(); ++i) {
        bits[i / 4] |= static_cast<std::uint8_t>(static_cast<unsigned>(map.states[i]) << (2 * (i % 4)));
    }
    w.raw(bits);
}

void read_map(ByteReader& r, ChangeMap& map) {
    const auto bits = r.raw((map.states.size() * 2 + 7) / 8);
    for (std::size_t i = 0; i < map.states.size(); ++i) {
        const unsigned v = (bits[i / 4] >> (2 * (i % 4))) & 3u;
        if (v > 2) throw Error(ErrorCode::FormatError, "invalid tile state in change map");
        map.states[i] = static_cast<TileState>(v);
    }
}

}  // namespace

void RateConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
    if (layer_fractions.empty() || layer_fractions.size() > 8) {
        throw Error(ErrorCode::InvalidArgument, "layer count must lie in 1..8");
    }
    double sum = 0.0;
    for (double f : layer_fractions) {
        if (!(f > 0.0)) throw Error(ErrorCode::InvalidArgument, "layer fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "layer fractions must sum to 1");
}

long tile_budget_bytes(double gamma, long pixels) {
    return static_cast<long>(std::floor(gamma * static_cast<double>(pixels) / 8.0));
}

double quantizer_step(std::int8_t step_exp, int layer, int layer_count) {
    return std::exp2(step_exp / 4.0 + (layer_count - layer));
}

void haar_forward(std::vector<double>& block, int size) {
    const double s = std::sqrt(0.5);
    std::vector<double> tmp(size);
    for (int n = size; n >= 2; n /= 2) {
        const int h = n / 2;
        for (int i = 0; i < n; ++i) {
            double* row = &block[static_cast<std::size_t>(i) * size];
            for (int j = 0; j < h; ++j) {
                tmp[j] = (row[2 * j] + row[2 * j + 1]) * s;
                tmp[h + j] = (row[2 * j] - row[2 * j + 1]) * s;
            }
            std::copy_n(tmp.begin(), n, row);
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < h; ++i) {
                const double a = block[static_cast<std::size_t>(2 * i) * size + j];
                const double b = block[static_cast<std::size_t>(2 * i + 1) * size + j];
                tmp[i] = (a + b) * s;
                tmp[h + i] = (a - b) * s;
            }
            for (int i = 0; i < n; ++i) block[static_cast<std::size_t>(i) * size + j] = tmp[i];
        }
    }
}

void haar_inverse(std::vector<double>& block, int size) {
    const double s = std::sqrt(0.5);
    std::vector<double> tmp(size);
    for (int n = 2; n <= size; n *= 2) {
        const int h = n / 2;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < h; ++i) {
                const double a = block[static_cast<std::size_t>(i) * size + j];
                const double b = block[static_cast<std::size_t>(h + i) * size + j];
                tmp[2 * i] = (a + b) * s;
                tmp[2 * i + 1] = (a - b) * s;
            }
            for (int i = 0; i < n; ++i) block[static_cast<std::size_t>(i) * size + j] = tmp[i];
        }
        for (int i = 0; i < n; ++i) {
            double* row = &block[static_cast<std::size_t>(i) * size];
            for (int j = 0; j < h; ++j) {
                tmp[2 * j] = (row[j] + row[h + j]) * s;
                tmp[2 * j + 1] = (row[j] - row[h + j]) * s;
            }
            std::copy_n(tmp.begin(), n, row);
        }
    }
}

TileCode encode_tile(const Band& band, const Rect& rect, const RateConfig& rate) {
    const int layers = rate.layers();
    const long budget = tile_budget_bytes(rate.gamma, rect.area());
    std::vector<long> caps(layers);
    double cum = 0.0;
    for (int l = 0; l < layers; ++l) {
        cum += rate.layer_fractions[l];
        caps[l] = static_cast<long>(std::floor(cum * static_cast<double>(budget) + 1e-9));
    }

    const int size = next_pow2(std::max(rect.h, rect.w));
    std::vector<double> block = padded_block(band, rect, size);
    haar_forward(block, size);
    const auto& order = scan_order(size);
    std::vector<double> scanned(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) scanned[i] = block[order[i]];

    auto& z = deflater();
    std::vector<std::int64_t> prev;
    std::vector<std::uint8_t> raw;
    // Layers are deflated lazily: a failing cap stops the check early.
    // A feasible attempt leaves its streams in `got`.
    std::vector<std::vector<std::uint8_t>> got;
    auto attempt = [&](int e) {
        got.clear();
        long total = 0;
        for (int l = 0; l < layers; ++l) {
            pack_layer(scanned, e, l + 1, layers, prev, raw);
            got.push_back(z.run(raw));
            total += static_cast<long>(got.back().size());
            if (total > caps[l] || got.back().size() > 0xffff) return false;
        }
        return true;
    };

    TileCode code;
    int lo = kMinStepExp, hi = kMaxStepExp;
    if (!attempt(hi)) {
        throw Error(ErrorCode::RateInfeasible, "gamma " + std::to_string(rate.gamma) +
                                                   " cannot code even the coarsest quantizer");
    }
    code.layers = got;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (attempt(mid)) {
            hi = mid;
            code.layers = std::move(got);
        } else {
            lo = mid + 1;
        }
    }
    code.step_exp = static_cast<std::int8_t>(hi);
    return code;
}

void decode_tile(const TileCode& code, int kept_layers, int layer_count, const Rect& rect, Band& out) {
    const int size = next_pow2(std::max(rect.h, rect.w));
    const std::size_t n = static_cast<std::size_t>(size) * size;
    const std::size_t limit = 10 * n + 16;
    auto& z = inflater();

    std::vector<std::int64_t> q(n, 0);
    {
        const auto raw = z.run(code.layers.at(0), limit);
        std::size_t pos = 0;
        const std::uint64_t count = get_varint(raw, pos);
        if (count > n) throw Error(ErrorCode::FormatError, "too many coefficients");
        for (std::uint64_t i = 0; i < count; ++i) q[i] = unzigzag(get_varint(raw, pos));
        if (pos != raw.size()) throw Error(ErrorCode::FormatError, "trailing bytes in base layer");
    }
    for (int l = 1; l < kept_layers; ++l) {
        const auto raw = z.run(code.layers.at(l), limit);
        std::size_t pos = 0;
        const std::uint64_t count = get_varint(raw, pos);
        if (count > n || raw.size() - pos != count) throw Error(ErrorCode::FormatError, "bad refinement layer");
        for (std::size_t i = 0; i < n; ++i) {
            int s = 0;
            if (i < count) {
                s = static_cast<int>(raw[pos + i]) - 1;
                if (s < -1 || s > 1) throw Error(ErrorCode::FormatError, "bad refinement symbol");
            }
            q[i] = 2 * q[i] + s;
        }
    }

    const double step = quantizer_step(code.step_exp, kept_layers, layer_count);
    const auto& order = scan_order(size);
    std::vector<double> block(n);
    for (std::size_t i = 0; i < n; ++i) block[order[i]] = static_cast<double>(q[i]) * step;
    haar_inverse(block, size);
    for (int i = 0; i < rect.h; ++i) {
        for (int j = 0; j < rect.w; ++j) {
            out(rect.y + i, rect.x + j) =
                static_cast<float>(std::clamp(block[static_cast<std::size_t>(i) * size + j], 0.0, 1.0));
        }
    }
}

std::vector<bool> changed_selection(const ChangeMap& map) {
    std::vector<bool> sel(map.states.size());
    for (std::size_t i = 0; i < sel.size(); ++i) sel[i] = map.states[i] == TileState::Changed;
    return sel;
}

EncodedPayload encode(const Image& image, const ChangeMap& map, const std::vector<IlluminationFit>& fits,
                      const RateConfig& rate, const std::vector<bool>& selection,
                      const std::vector<double>& reference_times, std::uint8_t flags) {
    rate.validate();
    const TileGrid& grid = map.grid;
    if (grid.height() != image.height() || grid.width() != image.width() || map.bands != image.band_count()) {
        throw Error(ErrorCode::InvalidArgument, "change map does not match image");
    }
    if (static_cast<int>(fits.size()) != image.band_count() ||
        static_cast<int>(reference_times.size()) != image.band_count()) {
        throw Error(ErrorCode::InvalidArgument, "one fit and one reference time per band required");
    }
    if (selection.size() != map.states.size()) throw Error(ErrorCode::InvalidArgument, "selection size mismatch");
    if (image.band_count() > 255) throw Error(ErrorCode::InvalidArgument, "at most 255 bands");

    EncodedPayload p;
    p.cell_id = image.cell_id;
    p.captured_at = image.captured_at;
    p.height = image.height();
    p.width = image.width();
    p.tile_size = grid.tile_size();
    p.gamma = static_cast<float>(rate.gamma);
    p.flags = flags;
    p.layer_count = rate.layers();
    p.kept_layers = p.layer_count;
    p.map = map;
    for (int b = 0; b < image.band_count(); ++b) {
        p.bands.push_back({static_cast<std::uint8_t>(b), reference_times[b], fits[b].k, fits[b].d});
    }

    std::vector<std::pair<int, int>> jobs;
    for (int b = 0; b < map.bands; ++b) {
        for (int t = 0; t < grid.count(); ++t) {
            const std::size_t i = static_cast<std::size_t>(b) * grid.count() + t;
            if (map.states[i] == TileState::Changed && !selection[i]) {
                throw Error(ErrorCode::InvalidArgument, "selection must include every changed tile");
            }
            if (selection[i]) jobs.emplace_back(b, t);
        }
    }
    p.blocks.resize(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), [&](int j) {
        const auto [b, t] = jobs[j];
        TileCode code = encode_tile(image.bands[b], grid.tile(t), rate);
        code.band = static_cast<std::uint8_t>(b);
        code.tile = static_cast<std::uint32_t>(t);
        p.blocks[j] = std::move(code);
    });
    return p;
}

std::size_t EncodedPayload::header_bytes() const {
    return 4 + 2 + 1 + 1 + 8 + 8 + 4 + 4 + 2 + 1 + 4 + bands.size() * (1 + 8 + 8 + 8) + (map.states.size() * 2 + 7) / 8 +
           4 + blocks.size() * tile_header_bytes(layer_count);
}

std::size_t EncodedPayload::layer_bytes(int layer) const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.layers.at(layer - 1).size();
    return n;
}

std::size_t EncodedPayload::total_bytes() const {
    std::size_t n = header_bytes();
    for (int l = 1; l <= kept_layers; ++l) n += layer_bytes(l);
    return n;
}

std::vector<std::uint8_t> EncodedPayload::serialize() const {
    ByteWriter w;
    w.magic("ERPD");
    w.u16(kVersion);
    w.u8(flags);
    w.u8(static_cast<std::uint8_t>(layer_count));
    w.u64(cell_id);
    w.f64(captured_at);
    w.u32(static_cast<std::uint32_t>(height));
    w.u32(static_cast<std::uint32_t>(width));
    w.u16(static_cast<std::uint16_t>(tile_size));
    w.u8(static_cast<std::uint8_t>(bands.size()));
    w.f32(gamma);
    for (const auto& b : bands) {
        w.u8(b.band_id);
        w.f64(b.reference_time);
        w.f64(b.k);
        w.f64(b.d);
    }
    write_map(w, map);
    w.u32(static_cast<std::uint32_t>(blocks.size()));
    for (const auto& blk : blocks) {
        w.u8(blk.band);
        w.u32(blk.tile);
        w.i8(blk.step_exp);
        for (int l = 0; l < layer_count; ++l) w.u16(static_cast<std::uint16_t>(blk.layers.at(l).size()));
    }
    for (int l = 0; l < kept_layers; ++l) {
        for (const auto& blk : blocks) w.raw(blk.layers[l]);
    }
    return w.take();
}

EncodedPayload EncodedPayload::parse(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("ERPD");
    if (r.u16() != kVersion) throw Error(ErrorCode::FormatError, "unsupported ERPD version");
    EncodedPayload p;
    p.flags = r.u8();
    p.layer_count = r.u8();
    if (p.layer_count < 1) throw Error(ErrorCode::FormatError, "layer count must be >= 1");
    p.cell_id = r.u64();
    p.captured_at = r.f64();
    p.height = static_cast<int>(r.u32());
    p.width = static_cast<int>(r.u32());
    p.tile_size = r.u16();
    const int band_count = r.u8();
    p.gamma = r.f32();
    if (p.height <= 0 || p.width <= 0 || p.tile_size <= 0) throw Error(ErrorCode::FormatError, "bad dimensions");
    for (int b = 0; b < band_count; ++b) {
        BandHeader h;
        h.band_id = r.u8();
        h.reference_time = r.f64();
        h.k = r.f64();
        h.d = r.f64();
        p.bands.push_back(h);
    }
    const TileGrid grid(p.height, p.width, p.tile_size);
    p.map = ChangeMap(grid, band_count, TileState::Unchanged);
    read_map(r, p.map);

    const std::uint32_t count = r.u32();
    if (count > static_cast<std::uint64_t>(grid.count()) * band_count) {
        throw Error(ErrorCode::FormatError, "more blocks than tiles");
    }
    std::vector<std::vector<std::size_t>> sizes(count, std::vector<std::size_t>(p.layer_count));
    std::vector<std::size_t> section(p.layer_count, 0);
    p.blocks.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto& blk = p.blocks[i];
        blk.band = r.u8();
        blk.tile = r.u32();
        blk.step_exp = r.i8();
        if (blk.band >= band_count || blk.tile >= static_cast<std::uint32_t>(grid.count())) {
            throw Error(ErrorCode::FormatError, "block index out of range");
        }
        for (int l = 0; l < p.layer_count; ++l) {
            sizes[i][l] = r.u16();
            section[l] += sizes[i][l];
        }
    }

    std::size_t rest = r.remaining();
    p.kept_layers = 0;
    if (count == 0) {
        if (rest != 0) throw Error(ErrorCode::FormatError, "trailing bytes");
        p.kept_layers = p.layer_count;
    } else {
        std::size_t acc = 0;
        for (int l = 0; l < p.layer_count && acc < rest; ++l) {
            acc += section[l];
            if (acc == rest) p.kept_layers = l + 1;
        }
        if (p.kept_layers == 0) throw Error(ErrorCode::FormatError, "payload does not end on a layer boundary");
    }
    for (auto& blk : p.blocks) blk.layers.resize(p.layer_count);
    for (int l = 0; l < p.kept_layers; ++l) {
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto s = r.raw(sizes[i][l]);
            p.blocks[i].layers[l].assign(s.begin(), s.end());
        }
    }
    // dropped layers keep their directory sizes but no data
    for (int l = p.kept_layers; l < p.layer_count; ++l) {
        for (std::uint32_t i = 0; i < count; ++i) p.blocks[i].layers[l].assign(sizes[i][l], 0);
    }
    return p;
}

EncodedPayload truncate_layers(const EncodedPayload& payload, int keep) {
    if (keep < 1 || keep > payload.layer_count) {
        throw Error(ErrorCode::InvalidArgument, "keep must lie in 1.." + std::to_string(payload.layer_count));
    }
    EncodedPayload out = payload;
    if (out.blocks.empty()) return out;
    out.kept_layers = std::min(keep, payload.kept_layers);
    for (auto& blk : out.blocks) {
        for (int l = out.kept_layers; l < out.layer_count; ++l) {
            std::fill(blk.layers[l].begin(), blk.layers[l].end(), std::uint8_t{0});
        }
    }
    return out;
}

DecodedTiles decode_tiles(const EncodedPayload& payload) {
    const TileGrid grid(payload.height, payload.width, payload.tile_size);
    DecodedTiles out;
    out.image.cell_id = payload.cell_id;
    out.image.captured_at = payload.captured_at;
    out.image.bands.assign(payload.bands.size(), Band::Zero(payload.height, payload.width));
    out.valid = full_mask(payload.height, payload.width, false);
    std::vector<PixelMask> band_valid(payload.bands.size(), full_mask(payload.height, payload.width, false));

    parallel_for(static_cast<int>(payload.blocks.size()), [&](int i) {
        const auto& blk = payload.blocks[i];
        const Rect rect = grid.tile(static_cast<int>(blk.tile));
        decode_tile(blk, payload.kept_layers, payload.layer_count, rect, out.image.bands[blk.band]);
    });
    for (const auto& blk : payload.blocks) {
        const Rect rect = grid.tile(static_cast<int>(blk.tile));
        band_valid[blk.band].block(rect.y, rect.x, rect.h, rect.w).setConstant(true);
    }
    if (!band_valid.empty()) {
        out.valid = band_valid[0];
        for (std::size_t b = 1; b < band_valid.size(); ++b) out.valid = out.valid && band_valid[b];
    }
    return out;
}

Reconstruction reconstruct(const EncodedPayload& payload, std::span<const Band* const> refs) {
    if (refs.size() != payload.bands.size()) throw Error(ErrorCode::InvalidArgument, "one reference slot per band");
    const TileGrid grid(payload.height, payload.width, payload.tile_size);
    DecodedTiles dec = decode_tiles(payload);

    std::vector<std::uint8_t> coded(payload.map.states.size(), 0);
    for (const auto& blk : payload.blocks) coded[static_cast<std::size_t>(blk.band) * grid.count() + blk.tile] = 1;

    Reconstruction out;
    out.image = std::move(dec.image);
    out.valid = full_mask(payload.height, payload.width, true);
    for (int b = 0; b < static_cast<int>(payload.bands.size()); ++b) {
        const BandHeader& h = payload.bands[b];
        const Band* ref = refs[b];
        if (ref && (ref->rows() != payload.height || ref->cols() != payload.width)) {
            throw Error(ErrorCode::InvalidReference, "ground reference size mismatch");
        }
        for (int t = 0; t < grid.count(); ++t) {
            const std::size_t i = static_cast<std::size_t>(b) * grid.count() + t;
            if (coded[i]) continue;
            const Rect rect = grid.tile(t);
            if (payload.map.states[i] == TileState::Unchanged) {
                if (!ref) {
                    throw Error(ErrorCode::ReconstructionImpossible,
                                "no ground reference for band " + std::to_string(b) + " of cell " +
                                    std::to_string(payload.cell_id));
                }
                out.image.bands[b].block(rect.y, rect.x, rect.h, rect.w) =
                    (ref->block(rect.y, rect.x, rect.h, rect.w).cast<double>() * h.k + h.d)
                        .max(0.0)
                        .min(1.0)
                        .cast<float>();
            } else {
                out.valid.block(rect.y, rect.x, rect.h, rect.w).setConstant(false);
            }
        }
    }
    return out;
}

Reconstruction reconstruct(const EncodedPayload& payload, const Image* ground_reference) {
    std::vector<const Band*> refs(payload.bands.size(), nullptr);
    if (ground_reference) {
        if (ground_reference->band_count() != static_cast<int>(refs.size())) {
            throw Error(ErrorCode::InvalidReference, "ground reference band count mismatch");
        }
        for (std::size_t b = 0; b < refs.size(); ++b) refs[b] = &ground_reference->bands[b];
    }
    return reconstruct(payload, refs);
}

}  // namespace erp
