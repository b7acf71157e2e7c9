#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace props {

struct Result {
    std::string name;
    long cases = 0;
    long failures = 0;
    std::string first_failure;

    bool ok() const { return cases > 0 && failures == 0; }
    void fail(const std::string& why) {
        if (failures++ == 0) first_failure = why;
    }
};

// Library vs brute-force oracle on randomized instances up to 256x256.
Result tile_diffs(std::uint64_t seed, int cases);
Result psnr(std::uint64_t seed, int cases);
Result ols(std::uint64_t seed, int cases);
Result detection(std::uint64_t seed, int cases);

// Bit-exact round trips.
Result erp1(std::uint64_t seed, int cases);
Result payload(std::uint64_t seed, int cases);
Result reference_diff(std::uint64_t seed, int cases);

std::vector<Result> oracle_suite(std::uint64_t seed, int cases);
std::vector<Result> roundtrip_suite(std::uint64_t seed, int cases);

}  // namespace props
