#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "erp/config.hpp"

namespace erp {

enum class EventKind : int { Contact = 0, Capture = 1 };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Capture;
    int satellite = 0;
    std::uint64_t cell_id = 0;  // captures only
    int index = 0;              // per-satellite contact number for contacts

    // contacts before captures at equal times, then by satellite, then cell
    bool operator<(const Event& o) const {
        if (time != o.time) return time < o.time;
        if (kind != o.kind) return kind < o.kind;
        if (satellite != o.satellite) return satellite < o.satellite;
        return cell_id < o.cell_id;
    }
};

/// Time-ordered capture and contact schedule.
class EventQueue {
public:
    explicit EventQueue(std::vector<Event> events);

    bool empty() const { return next_ == events_.size(); }
    const Event& pop() { return events_[next_++]; }
    std::size_t size() const { return events_.size(); }
    const std::vector<Event>& events() const { return events_; }

private:
    std::vector<Event> events_;
    std::size_t next_ = 0;
};

struct SatelliteSchedule {
    double period = 0.0;
    double phase = 0.0;
    double contact_phase = 0.0;  // fraction of a day
};

std::vector<SatelliteSchedule> make_schedule(const ScenarioConfig& cfg);

/// Captures at phase + (c / C) * period + k * period, contacts at
/// contact_phase + k / contacts_per_day.
EventQueue build_events(const ScenarioConfig& cfg, const std::vector<SatelliteSchedule>& schedule);

struct ImageRecord {
    int satellite = 0;
    std::uint64_t cell_id = 0;
    double captured_at = 0.0;
    bool measured = false;  // at or after the warm-up
    bool dropped = false;
    double onboard_cloud = 0.0;
    double true_cloud = 0.0;
    bool full_download = false;
    bool has_reference = false;
    double reference_age = 0.0;
    long tiles = 0;    // band-tiles
    long changed = 0;  // detected CHANGED band-tiles
    long coded = 0;    // band-tiles sent
    std::size_t payload_bytes = 0;
    bool delivered = false;
    double delivered_at = 0.0;
    int layers_delivered = 0;
    std::size_t delivered_bytes = 0;
    double psnr = 0.0;  // over reconstructed pixels, +inf when lossless
    bool psnr_valid = false;

    double coded_fraction() const { return tiles ? static_cast<double>(coded) / tiles : 0.0; }
};

struct ContactRecord {
    int satellite = 0;
    int index = 0;
    double time = 0.0;
    std::size_t downlink_bytes = 0;
    std::size_t uplink_bytes = 0;
    int payloads_sent = 0;
    int payloads_truncated = 0;
    int payloads_deferred = 0;
    std::uint64_t storage_bytes = 0;
    std::uint64_t reference_bytes = 0;
};

struct UplinkRecord {
    int satellite = 0;
    double time = 0.0;
    std::uint64_t cell_id = 0;
    int band = -1;
    std::size_t bytes = 0;
    std::size_t tiles = 0;
    bool admitted = false;
};

/// Aggregates over measured captures and contacts.
struct MetricsLedger {
    Strategy strategy = Strategy::Constellation;
    long captures = 0;
    long dropped = 0;
    long delivered = 0;
    long full_downloads = 0;
    double mean_downlink_bytes = 0.0;  // per contact
    double downlink_bandwidth_bps = 0.0;  // mean bytes per contact * 8 / contact time
    std::size_t max_downlink_bytes = 0;
    double mean_uplink_bytes = 0.0;
    std::size_t max_uplink_bytes = 0;
    double mean_psnr = 0.0;  // capped at kPsnrCapDb
    double min_psnr = 0.0;
    double mean_coded_fraction = 0.0;
    double mean_changed_fraction = 0.0;
    double mean_reference_age = 0.0;
    long reference_age_samples = 0;
    std::uint64_t storage_high_water = 0;
    std::uint64_t reference_high_water = 0;
    long budget_violations = 0;
    std::vector<double> per_band_changed_fraction;
};

struct RunResult {
    ScenarioConfig config;
    MetricsLedger ledger;
    std::vector<ImageRecord> images;
    std::vector<ContactRecord> contacts;
    std::vector<UplinkRecord> uplinks;
};

/// Runs one scenario. Throws BudgetViolation (carrying the ledger so far in
/// the message) when a link or storage budget is exceeded.
RunResult run(const ScenarioConfig& cfg);

MetricsLedger summarize(const ScenarioConfig& cfg, const std::vector<ImageRecord>& images,
                        const std::vector<ContactRecord>& contacts);

void write_metrics_csv(std::ostream& out, const RunResult& r);
void write_images_csv(std::ostream& out, const RunResult& r);
void write_contacts_csv(std::ostream& out, const RunResult& r);
void write_uplink_csv(std::ostream& out, const RunResult& r);
void write_outputs(const RunResult& r, const std::filesystem::path& dir);

/// Runs configs concurrently (one worker per config), results in input order.
std::vector<RunResult> run_many(const std::vector<ScenarioConfig>& configs);

struct AgeSamples {
    int satellites = 0;
    Strategy strategy = Strategy::Constellation;
    std::vector<double> ages;
    double mean() const;
};

/// Per-capture reference ages for SAT_LOCAL and constellation at each count.
std::vector<AgeSamples> reference_age_experiment(const ScenarioConfig& base, const std::vector<int>& satellite_counts);

struct CompressionPoint {
    int satellites = 0;
    double mean_changed_fraction = 0.0;
    double ratio = 0.0;
};

/// ratio = 1 / mean coded fraction of measured, kept captures, averaged over seeds.
std::vector<CompressionPoint> compression_vs_constellation(const ScenarioConfig& base,
                                                           const std::vector<int>& satellite_counts,
                                                           const std::vector<std::uint64_t>& seeds);

struct TradeoffPoint {
    Strategy strategy = Strategy::Constellation;
    double gamma = 0.0;
    double mean_psnr = 0.0;
    double bandwidth_bps = 0.0;
    double mean_downlink_bytes = 0.0;
};

std::vector<TradeoffPoint> downlink_quality_tradeoff(const ScenarioConfig& base, const std::vector<Strategy>& strategies,
                                                     const std::vector<double>& gammas);

}  // namespace erp
