// cuspwave: configuration-driven convergence experiments for plane-wave
// discretizations of periodic Coulomb Hamiltonians.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "cuspwave/experiment.hpp"
#include "cuspwave/version.hpp"

namespace fs = std::filesystem;
using namespace cuspwave;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_convergence = 3;
constexpr int exit_resources = 4;

ExperimentConfig resolve_config(const std::string& arg) {
    if (fs::exists(arg)) {
        return load_config(arg);
    }
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), arg) != names.end()) {
        return preset(arg);
    }
    throw ConfigError("no such config file or preset: " + arg);
}

RunMetadata make_metadata(const ExperimentConfig& cfg, const ExperimentResult& result) {
    RunMetadata meta;
    meta.version = version_string;
    meta.timestamp = [] {
        // emitted only into JSON; CSV stays byte-reproducible
        std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[40];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return std::string(buf);
    }();
    meta.config_json = config_to_json(cfg);
    meta.constants = result.stats;
    return meta;
}

void write_summary(const fs::path& dir, const ExperimentResult& result,
                   const RunMetadata& meta) {
    nlohmann::json j;
    j["version"] = meta.version;
    j["timestamp"] = meta.timestamp;
    j["config"] = nlohmann::json::parse(meta.config_json);
    j["stats"] = result.stats;
    j["failed_cutoffs"] = result.failed_cutoffs;
    j["fully_converged"] = result.fully_converged;
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out) throw IoError("cannot write summary.json");
    out << j.dump(2) << '\n';
}

void write_outputs(const fs::path& dir, const std::string& format,
                   const ExperimentConfig& cfg, const ExperimentResult& result) {
    const RunMetadata meta = make_metadata(cfg, result);
    const bool csv = format == "csv" || format == "both";
    const bool js = format == "json" || format == "both";

    auto emit_both = [&](const auto& rows, const char* stem) {
        if (rows.empty()) return;
        if (csv) emit_table(std::span(rows), TableFormat::Csv, dir / (std::string(stem) + ".csv"));
        if (js) {
            emit_table(std::span(rows), TableFormat::Json, dir / (std::string(stem) + ".json"),
                       &meta);
        }
    };
    emit_both(result.records, "records");
    emit_both(result.second_records, "records2");
    emit_both(result.cancellation, "cancellation");
    emit_both(result.shell_rows, "shells");
    write_summary(dir, result, meta);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plane-wave eigenvalue convergence experiments for periodic "
                 "Coulomb Hamiltonians"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    std::string config_arg;
    std::string out_dir = ".";
    std::string format = "both";
    int threads = 1;
    bool force = false;

    CLI::App* run = app.add_subcommand("run", "Run an experiment config (file path or preset)");
    run->add_option("config", config_arg, "Config file or preset name")->required();
    run->add_option("--out", out_dir, "Output directory (created if missing)");
    run->add_option("--threads", threads, "Concurrent solves")->check(CLI::PositiveNumber);
    run->add_flag("--force", force, "Lift the basis-size resource guard");
    run->add_option("--format", format, "Table formats to write")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    bool write_presets = false;
    std::string preset_dir = ".";
    CLI::App* presets = app.add_subcommand("presets", "List built-in experiment presets");
    presets->add_flag("--write", write_presets, "Write each preset as <name>.json");
    presets->add_option("--dir", preset_dir, "Directory for --write");

    CLI11_PARSE(app, argc, argv);

    if (presets->parsed()) {
        for (const std::string& name : preset_names()) {
            std::cout << name << '\n';
            if (write_presets) {
                fs::create_directories(preset_dir);
                std::ofstream out(fs::path(preset_dir) / (name + ".json"), std::ios::binary);
                out << config_to_json(preset(name)) << '\n';
            }
        }
        return exit_ok;
    }

    try {
        ExperimentConfig cfg = resolve_config(config_arg);
        if (force) cfg.max_basis = static_cast<std::size_t>(-1);

        fs::create_directories(out_dir);
        const ExperimentResult result = run_experiment(cfg, threads);
        write_outputs(out_dir, format, cfg, result);

        for (const auto& [key, value] : result.stats) {
            std::printf("%-28s %.12g\n", key.c_str(), value);
        }
        if (!result.fully_converged) {
            std::fprintf(stderr, "warning: %zu cutoff(s) did not converge; results are partial\n",
                         result.failed_cutoffs.size());
            return exit_convergence;
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const ResourceLimitError& e) {
        std::fprintf(stderr, "resource guard: %s (rerun with --force to override)\n", e.what());
        return exit_resources;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "solver did not converge: %s\n", e.what());
        return exit_convergence;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
