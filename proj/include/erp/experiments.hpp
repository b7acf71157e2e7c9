#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "erp/changedet.hpp"
#include "erp/sim.hpp"

namespace erp {

/// Plot-ready table; every experiment emits one.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    void write_csv(std::ostream& out) const;
};

std::string fmt(double v, int precision = 6);

// Preconfigured scenarios.
ScenarioConfig fig4_config(Strategy strategy);
ScenarioConfig staggered_age_config(int satellites, double period, bool clouds, std::uint64_t seed);
ScenarioConfig fig9_config();
ScenarioConfig fig12_config();
ScenarioConfig budget_config();

struct Fig4Outcome {
    Strategy strategy = Strategy::Constellation;
    std::vector<long> changed_tiles;  // per measured capture, time order
    long tiles_per_capture = 0;
    std::vector<double> ages;
    double mean_age() const;
    double mean_fraction() const;
};
Fig4Outcome run_fig4(Strategy strategy);

struct Fig8Outcome {
    CalibrationResult profile;  // calibrated on the profiling year
    CalibrationResult heldout;  // same theta on the next year
    long profile_samples = 0;
    long heldout_samples = 0;
};

/// Calibration samples from consecutive clear captures of `cells` cells,
/// `spacing_days` apart, over [t0, t1).
std::vector<CalibrationSample> fig8_samples(const WorldConfig& world, const DetectionConfig& det, int cells,
                                            double spacing_days, double t0, double t1);
Fig8Outcome run_fig8(std::uint64_t seed = 1);

Table experiment_fig4();
Table experiment_fig5(std::uint64_t seed);
Table experiment_fig8(std::uint64_t seed);
Table experiment_fig9(std::uint64_t seed);
Table experiment_fig12(std::uint64_t seed);
Table experiment_appendix_a();

/// Dispatches on fig4 | fig5 | fig8 | fig9 | fig12 | appendixA; Usage error otherwise.
Table run_experiment(const std::string& id, std::uint64_t seed);
const std::vector<std::string>& experiment_ids();

}  // namespace erp
