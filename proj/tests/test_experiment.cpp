#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cuspwave/experiment.hpp"

using namespace cuspwave;
using Catch::Matchers::WithinRel;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "cuspwave_test_out";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_study() {
    ExperimentConfig cfg;
    cfg.name = "small";
    cfg.cell_edge = 2.0;
    cfg.charges = {{2.0, {0.35, 0, 0}}, {2.0, {-0.35, 0, 0}}};
    cfg.cutoffs = {3, 4, 5};
    cfg.reference_cutoff = 8;
    cfg.min_cutoff = 3;
    cfg.solver.residual_tol = 1e-9;
    return cfg;
}

} // namespace

TEST_CASE("config parsing and round trip", "[experiment]") {
    const ExperimentConfig cfg = preset("fig2_z3");
    const std::string text = config_to_json(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(back.name == cfg.name);
    CHECK(back.cell_edge == cfg.cell_edge);
    CHECK(back.charges.size() == cfg.charges.size());
    CHECK(back.charges[0].charge == 3.0);
    CHECK(back.cutoffs == cfg.cutoffs);
    CHECK(back.shape == cfg.shape);
    CHECK(back.kind == ExperimentKind::Cancellation);
    CHECK(back.second_charges.size() == 2);
    CHECK(back.second_charges[0].position[0] == 0.375);
    CHECK(back.reference_cutoff == 48);
    CHECK(back.solver.seed == cfg.solver.seed);
}

TEST_CASE("config validation errors", "[experiment]") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("{}"), ConfigError); // missing cell/cutoffs
    CHECK_THROWS_AS(parse_config(R"({"cell":{"L":2.0},"cutoffs":[]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"cell":{"L":2.0},"cutoffs":[4,4]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"cell":{"L":2.0},"cutoffs":[4],"shape":"oval"})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"cell":{"L":2.0},"cutoffs":[4],"experiment":{"type":"cancellation"}})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"cell":{"L":2.0},"cutoffs":[4],"reference":{"cutoff":3}})"),
        ConfigError);
    CHECK_THROWS_AS(preset("fig9_z9"), ConfigError);
}

TEST_CASE("emit tables", "[experiment]") {
    std::vector<ConvergenceRecord> records(1);
    records[0].cutoff = 8;
    records[0].energy = -0.77852837213601234;
    records[0].reference_energy = -0.78048856385901234;
    records[0].raw_error = records[0].energy - records[0].reference_energy;
    records[0].predicted_error = 2.105e-3;
    records[0].corrected_error = records[0].raw_error - records[0].predicted_error;
    records[0].psi_at_nuclei = {1.14342273, 1.14342273};
    records[0].residual_coupling = std::numeric_limits<double>::quiet_NaN();
    records[0].tail_fit = 0.031;

    const fs::path dir = temp_dir();

    SECTION("csv shape") {
        const fs::path p = dir / "one.csv";
        emit_table(std::span<const ConvergenceRecord>(records), TableFormat::Csv, p);
        const std::string text = slurp(p);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
        const std::string header = text.substr(0, text.find('\n'));
        CHECK(std::count(header.begin(), header.end(), ',') == 8); // 9 columns
        CHECK(header ==
              "cutoff,energy,reference_energy,raw_error,predicted_error,corrected_error,"
              "psi_at_nuclei,residual_coupling,tail_fit");
        const std::string row = text.substr(text.find('\n') + 1);
        CHECK(std::count(row.begin(), row.end(), ',') == 8);
        CHECK(row.find("1.14342273;1.14342273") != std::string::npos);
        CHECK(row.find("nan") != std::string::npos);
    }

    SECTION("json round trip is exact") {
        const fs::path p = dir / "one.json";
        RunMetadata meta;
        meta.version = "test";
        meta.timestamp = "2000-01-01T00:00:00Z";
        meta.config_json = config_to_json(small_study());
        emit_table(std::span<const ConvergenceRecord>(records), TableFormat::Json, p, &meta);
        const auto back = read_records_json(p);
        REQUIRE(back.size() == 1);
        CHECK(back[0].cutoff == records[0].cutoff);
        CHECK(back[0].energy == records[0].energy);
        CHECK(back[0].reference_energy == records[0].reference_energy);
        CHECK(back[0].raw_error == records[0].raw_error);
        CHECK(back[0].predicted_error == records[0].predicted_error);
        CHECK(back[0].corrected_error == records[0].corrected_error);
        CHECK(back[0].psi_at_nuclei == records[0].psi_at_nuclei);
        CHECK(std::isnan(back[0].residual_coupling));
        CHECK(back[0].tail_fit == records[0].tail_fit);
    }

    SECTION("error paths") {
        std::vector<ConvergenceRecord> empty;
        CHECK_THROWS_AS(emit_table(std::span<const ConvergenceRecord>(empty), TableFormat::Csv,
                                   dir / "empty.csv"),
                        DomainError);
        CHECK_THROWS_AS(emit_table(std::span<const ConvergenceRecord>(records), TableFormat::Csv,
                                   "/nonexistent-dir-xyz/out.csv"),
                        IoError);
    }
}

TEST_CASE("small convergence study end to end", "[experiment][slow]") {
    const ExperimentConfig cfg = small_study();
    const ExperimentResult result = run_experiment(cfg);

    REQUIRE(result.records.size() == 3);
    CHECK(result.fully_converged);
    for (const ConvergenceRecord& r : result.records) {
        CHECK(r.raw_error >= -1e-9); // variational bound
        CHECK(r.predicted_error >= 0.0);
        REQUIRE(r.psi_at_nuclei.size() == 2);
        CHECK(r.psi_at_nuclei[0] > 0.0);
        CHECK_THAT(r.psi_at_nuclei[0], WithinRel(r.psi_at_nuclei[1], 1e-6));
        CHECK(std::isfinite(r.residual_coupling));
    }
    // energies decrease with M (variational)
    CHECK(result.records[0].energy >= result.records[1].energy - 1e-10);
    CHECK(result.records[1].energy >= result.records[2].energy - 1e-10);
    CHECK(result.stats.count("reference_energy") == 1);
    CHECK(result.stats.at("reference_energy") < result.records[2].energy);

    SECTION("determinism: identical config gives byte-identical csv") {
        const fs::path dir = temp_dir();
        emit_table(std::span<const ConvergenceRecord>(result.records), TableFormat::Csv,
                   dir / "a.csv");
        const ExperimentResult again = run_experiment(cfg);
        emit_table(std::span<const ConvergenceRecord>(again.records), TableFormat::Csv,
                   dir / "b.csv");
        CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    }
}

TEST_CASE("resource guard", "[experiment]") {
    ExperimentConfig cfg = small_study();
    cfg.max_basis = 100;
    CHECK_THROWS_AS(run_experiment(cfg), ResourceLimitError);
}

TEST_CASE("cancellation experiment plumbing", "[experiment][slow]") {
    ExperimentConfig cfg = small_study();
    cfg.kind = ExperimentKind::Cancellation;
    cfg.second_charges = {{2.0, {0.375, 0, 0}}, {2.0, {-0.375, 0, 0}}};
    const ExperimentResult result = run_experiment(cfg);
    REQUIRE(result.cancellation.size() == 3);
    for (const CancellationRow& row : result.cancellation) {
        CHECK(row.difference_error <= row.total_error + 1e-15);
    }
    CHECK(result.second_records.size() == 3);
}

TEST_CASE("tail law experiment plumbing", "[experiment][slow]") {
    ExperimentConfig cfg;
    cfg.cell_edge = 2.0;
    cfg.charges = {{2.0, {0.0, 0.0, 0.0}}};
    cfg.cutoffs = {6, 10};
    cfg.kind = ExperimentKind::TailLaw;
    cfg.shells = {{2.0, 3.0}, {3.0, 5.0}};
    cfg.shape = CutoffShape::Spherical;
    const ExperimentResult result = run_experiment(cfg);
    REQUIRE(result.shell_rows.size() == 2);
    for (const ShellRow& row : result.shell_rows) CHECK(row.residual >= 0.0);
    CHECK(result.stats.count("psi_at_first_nucleus") == 1);
    CHECK(result.stats.at("psi_at_first_nucleus") > 0.0);
}
