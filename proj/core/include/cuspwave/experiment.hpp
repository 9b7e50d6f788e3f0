#ifndef CUSPWAVE_EXPERIMENT_HPP
#define CUSPWAVE_EXPERIMENT_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cuspwave/analysis.hpp"

namespace cuspwave {

enum class ReferencePolicy { HighCutoff, Richardson };
enum class ExperimentKind { Convergence, Cancellation, CorrectionEfficiency, TailLaw };
enum class TableFormat { Csv, Json };

struct ExperimentConfig {
    std::string name = "experiment";
    double cell_edge = 2.0;
    std::vector<PointCharge> charges;
    /// Cosine terms of W_per: each (k, a) adds a*cos(K.x) (or the constant a
    /// for k = 0).
    std::vector<std::pair<Index3, double>> w_terms;
    std::vector<int> cutoffs;
    CutoffShape shape = CutoffShape::Cubic;
    SolverOptions solver;
    ReferencePolicy reference_policy = ReferencePolicy::HighCutoff;
    /// Reference cutoff for the HighCutoff policy; 0 selects max(3*Mmax, 48).
    int reference_cutoff = 0;
    ExperimentKind kind = ExperimentKind::Convergence;
    std::vector<PointCharge> second_charges;             // Cancellation only
    std::vector<std::pair<double, double>> shells;       // TailLaw only
    int min_cutoff = 6;
    std::size_t max_basis = 5'000'000;
    /// Solve the cutoff ladder in ascending order, seeding each solve with the
    /// previous eigenvectors. Disabling makes per-M solves independent (and
    /// parallelizable) at the cost of more iterations.
    bool warm_start = true;
};

const char* to_string(ReferencePolicy p) noexcept;
const char* to_string(ExperimentKind k) noexcept;

/// Parse / serialize the JSON config format (see README for the schema).
/// Throws ConfigError with a line/field diagnostic on bad input.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

/// Built-in experiment presets: fig1_z2, fig1_z3, fig2_z2, fig2_z3, fig3_z2,
/// fig3_z3 (two point charges Z at +-0.35 e1 in an L=2 cell, cubic cutoffs
/// 8..32, reference solve at M=48; fig2 compares against charges at +-0.375 e1).
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct ShellRow {
    double shell_lo = 0.0;
    double shell_hi = 0.0;
    double residual = 0.0;
};

struct ExperimentResult {
    std::vector<ConvergenceRecord> records;
    std::vector<ConvergenceRecord> second_records; // Cancellation
    std::vector<CancellationRow> cancellation;     // Cancellation
    std::vector<ShellRow> shell_rows;              // TailLaw
    /// Fitted slopes, reference energies, constants used, cross-checks.
    std::map<std::string, double> stats;
    std::vector<int> failed_cutoffs;
    bool fully_converged = true;
};

/// Runs the configured experiment. threads > 1 parallelizes independent
/// solves (per-M when warm_start is off, per-configuration otherwise).
/// Throws ResourceLimitError when a requested basis exceeds max_basis.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

/// Metadata block embedded in JSON outputs (never in CSV, which stays
/// byte-reproducible for a fixed config and seed).
struct RunMetadata {
    std::string version;
    std::string timestamp;
    std::string config_json;
    std::map<std::string, double> constants;
};

void emit_table(std::span<const ConvergenceRecord> records, TableFormat format,
                const std::filesystem::path& path, const RunMetadata* metadata = nullptr);
void emit_table(std::span<const CancellationRow> rows, TableFormat format,
                const std::filesystem::path& path, const RunMetadata* metadata = nullptr);
void emit_table(std::span<const ShellRow> rows, TableFormat format,
                const std::filesystem::path& path, const RunMetadata* metadata = nullptr);

/// Reads back a JSON records table (round-trip of emit_table).
std::vector<ConvergenceRecord> read_records_json(const std::filesystem::path& path);

} // namespace cuspwave

#endif
