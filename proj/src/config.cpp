#include "erp/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace erp {

using nlohmann::json;

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Constellation: return "constellation";
        case Strategy::SatLocal: return "sat_local";
        case Strategy::FixedRef: return "fixed_ref";
        case Strategy::NoncloudyAll: return "noncloudy_all";
    }
    return "?";
}

Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::Constellation, Strategy::SatLocal, Strategy::FixedRef, Strategy::NoncloudyAll}) {
        if (name == to_string(s)) return s;
    }
    throw Error(ErrorCode::Usage,
                "unknown strategy '" + name + "' (expected constellation, sat_local, fixed_ref or noncloudy_all)");
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::Usage, m); };
    if (satellites < 1) fail("satellites must be >= 1");
    if (cells < 1) fail("cells must be >= 1");
    if (!(revisit_min_days > 0) || revisit_max_days < revisit_min_days) fail("invalid revisit range");
    if (!periods.empty() && static_cast<int>(periods.size()) != satellites) fail("periods needs one entry per satellite");
    if (!phases.empty() && static_cast<int>(phases.size()) != satellites) fail("phases needs one entry per satellite");
    for (double p : periods) {
        if (!(p > 0)) fail("periods must be positive");
    }
    for (double p : phases) {
        if (p < 0) fail("phases must be >= 0");
    }
    if (contacts_per_day < 1) fail("contacts_per_day must be >= 1");
    if (!(contact_seconds > 0) || !(uplink_bps > 0) || !(downlink_bps > 0)) fail("link rates and durations must be positive");
    if (!(duration_days > 0)) fail("duration_days must be positive");
    if (warmup_days < 0) fail("warmup_days must be >= 0");
    if (storage_budget_bytes == 0) fail("storage_budget_bytes must be positive");
    if (control_bytes_per_cell < 0) fail("control_bytes_per_cell must be >= 0");
    if (world.tile_size != detection.tile_size) fail("world.tile_size must equal detection.tile_size");
    try {
        detection.validate();
        rate.validate();
        world.validate();
    } catch (const Error& e) {
        fail(e.what());
    }
    if (cloud_tree && cloud_tree->max_band() >= world.bands) fail("cloud_tree references a band the world lacks");
}

namespace {

std::size_t line_of(const std::string& text, std::size_t offset) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(offset, text.size()), '\n'));
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        // locate the last path component after its parents for a line number
        std::size_t pos = 0;
        std::string rest = path;
        while (!rest.empty()) {
            const auto dot = rest.find('.');
            const std::string key = rest.substr(0, dot);
            const auto hit = text_.find('"' + key + '"', pos);
            if (hit == std::string::npos) break;
            pos = hit;
            rest = dot == std::string::npos ? "" : rest.substr(dot + 1);
        }
        throw Error(ErrorCode::Usage, "config line " + std::to_string(line_of(text_, pos)) + ", field '" + path +
                                          "': " + msg);
    }

    template <typename T>
    void get(const json& obj, const std::string& key, const std::string& path, T& out) const {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        // nlohmann converts booleans and fractional numbers silently
        bool ok = true;
        if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
        else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
        else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
        if (!ok) fail(path + key, "expected " + type_name<T>() + ", got " + v.type_name());
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            fail(path + key, "expected " + type_name<T>() + ", got " + obj.at(key).type_name());
        }
    }

    void check_keys(const json& obj, const std::set<std::string>& known, const std::string& path) const {
        if (!obj.is_object()) fail(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "expected object");
        for (const auto& [k, v] : obj.items()) {
            if (!known.count(k)) fail(path + k, "unknown field");
        }
    }

private:
    template <typename T>
    static std::string type_name() {
        if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_integral_v<T>) return "integer";
        else if constexpr (std::is_floating_point_v<T>) return "number";
        else if constexpr (std::is_same_v<T, std::string>) return "string";
        else return "array";
    }

    const std::string& text_;
};

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Usage, "config line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) +
                                          ": " + e.what());
    }
    const Reader rd(text);
    ScenarioConfig c;
    rd.check_keys(j, {"satellites", "cells", "revisit_min_days", "revisit_max_days", "periods", "phases",
                      "contacts_per_day", "contact_seconds", "uplink_bps", "downlink_bps", "duration_days",
                      "warmup_days", "seed", "strategy", "detection", "rate", "storage_budget_bytes",
                      "guaranteed_period_days", "reference_max_cloud", "reconstructed_reference_eligible",
                      "uplink_policy", "control_bytes_per_cell", "world", "cloud_tree"},
                  "");
    rd.get(j, "satellites", "", c.satellites);
    rd.get(j, "cells", "", c.cells);
    rd.get(j, "revisit_min_days", "", c.revisit_min_days);
    rd.get(j, "revisit_max_days", "", c.revisit_max_days);
    rd.get(j, "periods", "", c.periods);
    rd.get(j, "phases", "", c.phases);
    rd.get(j, "contacts_per_day", "", c.contacts_per_day);
    rd.get(j, "contact_seconds", "", c.contact_seconds);
    rd.get(j, "uplink_bps", "", c.uplink_bps);
    rd.get(j, "downlink_bps", "", c.downlink_bps);
    rd.get(j, "duration_days", "", c.duration_days);
    rd.get(j, "warmup_days", "", c.warmup_days);
    rd.get(j, "seed", "", c.seed);
    rd.get(j, "storage_budget_bytes", "", c.storage_budget_bytes);
    rd.get(j, "guaranteed_period_days", "", c.guaranteed_period_days);
    rd.get(j, "reference_max_cloud", "", c.reference_max_cloud);
    rd.get(j, "reconstructed_reference_eligible", "", c.reconstructed_reference_eligible);
    rd.get(j, "control_bytes_per_cell", "", c.control_bytes_per_cell);
    if (j.contains("strategy")) {
        std::string s;
        rd.get(j, "strategy", "", s);
        try {
            c.strategy = parse_strategy(s);
        } catch (const Error& e) {
            rd.fail("strategy", e.what());
        }
    }
    if (j.contains("uplink_policy")) {
        std::string s;
        rd.get(j, "uplink_policy", "", s);
        if (s == "oldest_first") c.uplink_policy = UplinkPolicy::OldestFirst;
        else if (s == "random") c.uplink_policy = UplinkPolicy::Random;
        else rd.fail("uplink_policy", "expected oldest_first or random");
    }
    if (j.contains("detection")) {
        const json& d = j["detection"];
        rd.check_keys(d, {"theta", "reference_downsample", "tile_size", "align_tolerance"}, "detection.");
        rd.get(d, "theta", "detection.", c.detection.theta);
        rd.get(d, "reference_downsample", "detection.", c.detection.reference_downsample);
        rd.get(d, "tile_size", "detection.", c.detection.tile_size);
        rd.get(d, "align_tolerance", "detection.", c.detection.align_tolerance);
        c.world.tile_size = c.detection.tile_size;
    }
    if (j.contains("rate")) {
        const json& r = j["rate"];
        rd.check_keys(r, {"gamma", "layer_fractions"}, "rate.");
        rd.get(r, "gamma", "rate.", c.rate.gamma);
        rd.get(r, "layer_fractions", "rate.", c.rate.layer_fractions);
    }
    if (j.contains("world")) {
        const json& w = j["world"];
        const std::string p = "world.";
        rd.check_keys(w, {"height", "width", "bands", "terrain_octaves", "terrain_spacing", "change_rate", "change_min",
                          "change_max", "change_min_extent", "illumination", "k_min", "k_max", "d_min", "d_max",
                          "clouds", "clear_probability", "thin_clouds", "scripted"},
                      p);
        auto& wc = c.world;
        rd.get(w, "height", p, wc.height);
        rd.get(w, "width", p, wc.width);
        rd.get(w, "bands", p, wc.bands);
        rd.get(w, "terrain_octaves", p, wc.terrain_octaves);
        rd.get(w, "terrain_spacing", p, wc.terrain_spacing);
        rd.get(w, "change_rate", p, wc.change_rate);
        rd.get(w, "change_min", p, wc.change_min);
        rd.get(w, "change_max", p, wc.change_max);
        rd.get(w, "change_min_extent", p, wc.change_min_extent);
        rd.get(w, "illumination", p, wc.illumination);
        rd.get(w, "k_min", p, wc.k_min);
        rd.get(w, "k_max", p, wc.k_max);
        rd.get(w, "d_min", p, wc.d_min);
        rd.get(w, "d_max", p, wc.d_max);
        rd.get(w, "clouds", p, wc.clouds);
        rd.get(w, "clear_probability", p, wc.clear_probability);
        rd.get(w, "thin_clouds", p, wc.thin_clouds);
        if (w.contains("scripted")) {
            if (!w["scripted"].is_array()) rd.fail("world.scripted", "expected array");
            for (const json& s : w["scripted"]) {
                const std::string sp = "world.scripted.";
                rd.check_keys(s, {"cell", "tile", "time", "delta"}, sp);
                ScriptedChange sc;
                rd.get(s, "cell", sp, sc.cell_id);
                rd.get(s, "tile", sp, sc.tile);
                rd.get(s, "time", sp, sc.time);
                rd.get(s, "delta", sp, sc.delta);
                wc.scripted.push_back(sc);
            }
        }
    }
    if (j.contains("cloud_tree")) {
        try {
            c.cloud_tree = CloudDecisionTree::from_json(j["cloud_tree"].dump());
        } catch (const Error& e) {
            rd.fail("cloud_tree", e.what());
        }
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Usage, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const ScenarioConfig& c) {
    json j;
    j["satellites"] = c.satellites;
    j["cells"] = c.cells;
    j["revisit_min_days"] = c.revisit_min_days;
    j["revisit_max_days"] = c.revisit_max_days;
    if (!c.periods.empty()) j["periods"] = c.periods;
    if (!c.phases.empty()) j["phases"] = c.phases;
    j["contacts_per_day"] = c.contacts_per_day;
    j["contact_seconds"] = c.contact_seconds;
    j["uplink_bps"] = c.uplink_bps;
    j["downlink_bps"] = c.downlink_bps;
    j["duration_days"] = c.duration_days;
    j["warmup_days"] = c.warmup_days;
    j["seed"] = c.seed;
    j["strategy"] = to_string(c.strategy);
    j["detection"] = {{"theta", c.detection.theta},
                      {"reference_downsample", c.detection.reference_downsample},
                      {"tile_size", c.detection.tile_size},
                      {"align_tolerance", c.detection.align_tolerance}};
    j["rate"] = {{"gamma", c.rate.gamma}, {"layer_fractions", c.rate.layer_fractions}};
    j["storage_budget_bytes"] = c.storage_budget_bytes;
    j["guaranteed_period_days"] = c.guaranteed_period_days;
    j["reference_max_cloud"] = c.reference_max_cloud;
    j["reconstructed_reference_eligible"] = c.reconstructed_reference_eligible;
    j["uplink_policy"] = c.uplink_policy == UplinkPolicy::Random ? "random" : "oldest_first";
    j["control_bytes_per_cell"] = c.control_bytes_per_cell;
    const auto& w = c.world;
    j["world"] = {{"height", w.height},
                  {"width", w.width},
                  {"bands", w.bands},
                  {"terrain_octaves", w.terrain_octaves},
                  {"terrain_spacing", w.terrain_spacing},
                  {"change_rate", w.change_rate},
                  {"change_min", w.change_min},
                  {"change_max", w.change_max},
                  {"change_min_extent", w.change_min_extent},
                  {"illumination", w.illumination},
                  {"k_min", w.k_min},
                  {"k_max", w.k_max},
                  {"d_min", w.d_min},
                  {"d_max", w.d_max},
                  {"clouds", w.clouds},
                  {"clear_probability", w.clear_probability},
                  {"thin_clouds", w.thin_clouds}};
    if (!w.scripted.empty()) {
        json arr = json::array();
        for (const auto& s : w.scripted) {
            arr.push_back({{"cell", s.cell_id}, {"tile", s.tile}, {"time", s.time}, {"delta", s.delta}});
        }
        j["world"]["scripted"] = arr;
    }
    if (c.cloud_tree) j["cloud_tree"] = json::parse(c.cloud_tree->to_json());
    return j.dump(2);
}

}  // namespace erp
