#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "erp/config.hpp"
#include "erp/experiments.hpp"
#include "erp/parallel.hpp"
#include "erp/sim.hpp"

namespace fs = std::filesystem;

namespace {

struct RunManifest {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string strategy;
    std::string out_dir = "out";
    std::string experiment;
    bool force = false;
};

void prepare_out(const RunManifest& m) {
    const fs::path dir(m.out_dir);
    if (fs::exists(dir) && !fs::is_empty(dir) && !m.force) {
        throw erp::Error(erp::ErrorCode::Usage, "output directory " + dir.string() + " is not empty (use --force)");
    }
    fs::create_directories(dir);
}

int cmd_run(const RunManifest& m) {
    erp::ScenarioConfig cfg = m.config_path.empty() ? erp::ScenarioConfig{} : erp::load_config(m.config_path);
    if (m.seed) cfg.seed = *m.seed;
    if (!m.strategy.empty()) cfg.strategy = erp::parse_strategy(m.strategy);
    cfg.validate();
    prepare_out(m);
    {
        std::ofstream f(fs::path(m.out_dir) / "config.json");
        f << erp::to_json(cfg) << '\n';
    }
    try {
        const erp::RunResult r = erp::run(cfg);
        erp::write_outputs(r, m.out_dir);
        erp::write_metrics_csv(std::cout, r);
    } catch (const erp::Error& e) {
        if (e.code() != erp::ErrorCode::BudgetViolation) throw;
        std::ofstream f(fs::path(m.out_dir) / "violation.txt");
        f << e.what() << '\n';
        std::cerr << e.what() << '\n';
        return 3;
    }
    return 0;
}

int cmd_experiment(const RunManifest& m) {
    const erp::Table t = erp::run_experiment(m.experiment, m.seed.value_or(1));
    prepare_out(m);
    const fs::path path = fs::path(m.out_dir) / (m.experiment + ".csv");
    std::ofstream f(path);
    t.write_csv(f);
    t.write_csv(std::cout);
    return f ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference-based onboard compression simulator"};
    app.require_subcommand(1);
    RunManifest m;

    auto* run = app.add_subcommand("run", "simulate one scenario and write metrics, images, contacts and uplink CSVs");
    run->add_option("--config", m.config_path, "scenario JSON")->check(CLI::ExistingFile);
    run->add_option("--seed", m.seed, "PRNG seed");
    run->add_option("--strategy", m.strategy, "constellation | sat_local | fixed_ref | noncloudy_all");
    run->add_option("--out", m.out_dir, "output directory");
    run->add_flag("--force", m.force, "reuse a non-empty output directory");

    auto* exp = app.add_subcommand("experiment", "run a preconfigured sweep and write its report CSV");
    exp->add_option("--experiment", m.experiment, "fig4 | fig5 | fig8 | fig9 | fig12 | appendixA")->required();
    exp->add_option("--seed", m.seed, "PRNG seed");
    exp->add_option("--out", m.out_dir, "output directory");
    exp->add_flag("--force", m.force, "reuse a non-empty output directory");

    CLI11_PARSE(app, argc, argv);
    erp::tune_allocator();
    try {
        if (*run) return cmd_run(m);
        return cmd_experiment(m);
    } catch (const erp::Error& e) {
        std::cerr << "erp: " << e.what() << '\n';
        return e.code() == erp::ErrorCode::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "erp: " << e.what() << '\n';
        return 1;
    }
}
