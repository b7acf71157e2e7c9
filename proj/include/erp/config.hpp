#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "erp/changedet.hpp"
#include "erp/codec.hpp"
#include "erp/ground.hpp"
#include "erp/preprocess.hpp"
#include "erp/synth.hpp"

namespace erp {

enum class Strategy { Constellation, SatLocal, FixedRef, NoncloudyAll };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct ScenarioConfig {
    int satellites = 16;
    int cells = 20;
    double revisit_min_days = 10.0;
    double revisit_max_days = 15.0;
    std::vector<double> periods;  // per satellite; drawn from the revisit range when empty
    std::vector<double> phases;   // per satellite; drawn from [0, period) when empty

    int contacts_per_day = 7;
    double contact_seconds = 600.0;
    double uplink_bps = 250e3;
    double downlink_bps = 200e6;

    double duration_days = 365.0;
    double warmup_days = 0.0;  // captures before this are simulated but not measured
    std::uint64_t seed = 1;
    Strategy strategy = Strategy::Constellation;

    DetectionConfig detection;
    RateConfig rate;
    std::uint64_t storage_budget_bytes = 360ull * 1000 * 1000 * 1000;
    double guaranteed_period_days = 30.0;
    double reference_max_cloud = 0.01;
    bool reconstructed_reference_eligible = true;
    UplinkPolicy uplink_policy = UplinkPolicy::OldestFirst;
    int control_bytes_per_cell = 12;

    WorldConfig world;
    std::optional<CloudDecisionTree> cloud_tree;

    std::uint64_t uplink_budget_bytes() const {
        return static_cast<std::uint64_t>(std::floor(uplink_bps * contact_seconds / 8.0));
    }
    std::uint64_t downlink_budget_bytes() const {
        return static_cast<std::uint64_t>(std::floor(downlink_bps * contact_seconds / 8.0));
    }
    void validate() const;
};

/// Parses a JSON scenario. Unknown keys, wrong types and syntax errors raise
/// Usage errors naming the line and field.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string to_json(const ScenarioConfig& cfg);

}  // namespace erp
