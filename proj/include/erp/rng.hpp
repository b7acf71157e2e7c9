#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace erp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a key tuple.
inline std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

inline std::uint64_t time_bits(double t) { return std::bit_cast<std::uint64_t>(t); }

/// Counter-based stream: draw i is splitmix64(key + i).
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    std::uint64_t next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int below(int n) { return static_cast<int>(uniform() * n); }
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace erp
