#include "cuspwave/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cuspwave/version.hpp"

namespace cuspwave {

namespace {

using nlohmann::json;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- config (de)serialization -----------------------------------------------

CutoffShape parse_shape(const std::string& s) {
    if (s == "cubic") return CutoffShape::Cubic;
    if (s == "spherical") return CutoffShape::Spherical;
    throw ConfigError("config field 'shape' must be \"cubic\" or \"spherical\", got \"" + s +
                      "\"");
}

ReferencePolicy parse_policy(const std::string& s) {
    if (s == "high_cutoff") return ReferencePolicy::HighCutoff;
    if (s == "richardson") return ReferencePolicy::Richardson;
    throw ConfigError("config field 'reference.policy' must be \"high_cutoff\" or "
                      "\"richardson\", got \"" +
                      s + "\"");
}

ExperimentKind parse_kind(const std::string& s) {
    if (s == "convergence") return ExperimentKind::Convergence;
    if (s == "cancellation") return ExperimentKind::Cancellation;
    if (s == "correction_efficiency") return ExperimentKind::CorrectionEfficiency;
    if (s == "tail_law") return ExperimentKind::TailLaw;
    throw ConfigError("config field 'experiment.type' is unknown: \"" + s + "\"");
}

std::vector<PointCharge> parse_charges(const json& arr, const char* field) {
    std::vector<PointCharge> out;
    if (!arr.is_array()) {
        throw ConfigError(std::string("config field '") + field + "' must be an array");
    }
    for (const json& c : arr) {
        PointCharge pc;
        try {
            pc.charge = c.at("Z").get<double>();
            const json& r = c.at("R");
            pc.position = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config field '") + field +
                              "': each charge needs {\"Z\": number, \"R\": [x,y,z]} (" +
                              e.what() + ")");
        }
        out.push_back(pc);
    }
    return out;
}

json charges_to_json(const std::vector<PointCharge>& charges) {
    json arr = json::array();
    for (const PointCharge& c : charges) {
        arr.push_back({{"Z", c.charge}, {"R", {c.position[0], c.position[1], c.position[2]}}});
    }
    return arr;
}

} // namespace

const char* to_string(ReferencePolicy p) noexcept {
    return p == ReferencePolicy::HighCutoff ? "high_cutoff" : "richardson";
}

const char* to_string(ExperimentKind k) noexcept {
    switch (k) {
        case ExperimentKind::Convergence: return "convergence";
        case ExperimentKind::Cancellation: return "cancellation";
        case ExperimentKind::CorrectionEfficiency: return "correction_efficiency";
        case ExperimentKind::TailLaw: return "tail_law";
    }
    return "convergence";
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        cfg.name = j.value("name", std::string("experiment"));
        cfg.cell_edge = j.at("cell").at("L").get<double>();
        cfg.charges = parse_charges(j.value("charges", json::array()), "charges");
        for (const json& t : j.value("w_per", json::array())) {
            const json& k = t.at("k");
            cfg.w_terms.push_back({{k.at(0).get<int>(), k.at(1).get<int>(), k.at(2).get<int>()},
                                   t.at("amplitude").get<double>()});
        }
        cfg.cutoffs = j.at("cutoffs").get<std::vector<int>>();
        cfg.shape = parse_shape(j.value("shape", std::string("cubic")));
        if (j.contains("solver")) {
            const json& s = j["solver"];
            cfg.solver.n_eigenpairs = s.value("n_eigenpairs", 1);
            cfg.solver.block_size = s.value("block_size", 0);
            cfg.solver.residual_tol = s.value("residual_tol", 1e-8);
            cfg.solver.max_iterations = s.value("max_iterations", 500);
            cfg.solver.preconditioner_shift = s.value("preconditioner_shift", 0.0);
            cfg.solver.seed = s.value("seed", std::uint64_t{1234});
            cfg.solver.dense_fallback_threshold =
                s.value("dense_fallback_threshold", std::size_t{2000});
        }
        if (j.contains("reference")) {
            cfg.reference_policy = parse_policy(j["reference"].value("policy", "high_cutoff"));
            cfg.reference_cutoff = j["reference"].value("cutoff", 0);
        }
        if (j.contains("experiment")) {
            cfg.kind = parse_kind(j["experiment"].value("type", "convergence"));
            if (j["experiment"].contains("charges2")) {
                cfg.second_charges = parse_charges(j["experiment"]["charges2"], "charges2");
            }
            for (const json& s : j["experiment"].value("shells", json::array())) {
                cfg.shells.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
            }
        }
        cfg.min_cutoff = j.value("min_cutoff", 6);
        cfg.max_basis = j.value("max_basis", std::size_t{5'000'000});
        cfg.warm_start = j.value("warm_start", true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }

    if (cfg.cutoffs.empty()) {
        throw ConfigError("config field 'cutoffs' must list at least one cutoff");
    }
    for (std::size_t i = 0; i < cfg.cutoffs.size(); ++i) {
        if (cfg.cutoffs[i] < 1 || (i > 0 && cfg.cutoffs[i] <= cfg.cutoffs[i - 1])) {
            throw ConfigError("config field 'cutoffs' must be ascending and >= 1");
        }
    }
    if (cfg.reference_policy == ReferencePolicy::HighCutoff && cfg.reference_cutoff != 0 &&
        cfg.reference_cutoff <= cfg.cutoffs.back()) {
        throw ConfigError("config field 'reference.cutoff' must exceed max(cutoffs)");
    }
    if (cfg.kind == ExperimentKind::Cancellation && cfg.second_charges.empty()) {
        throw ConfigError("cancellation experiments need 'experiment.charges2'");
    }
    if (!(cfg.cell_edge > 0.0)) {
        throw ConfigError("config field 'cell.L' must be positive");
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["cell"] = {{"L", cfg.cell_edge}};
    j["charges"] = charges_to_json(cfg.charges);
    json wt = json::array();
    for (const auto& [k, a] : cfg.w_terms) {
        wt.push_back({{"k", {k[0], k[1], k[2]}}, {"amplitude", a}});
    }
    j["w_per"] = wt;
    j["cutoffs"] = cfg.cutoffs;
    j["shape"] = to_string(cfg.shape);
    j["solver"] = {{"n_eigenpairs", cfg.solver.n_eigenpairs},
                   {"block_size", cfg.solver.block_size},
                   {"residual_tol", cfg.solver.residual_tol},
                   {"max_iterations", cfg.solver.max_iterations},
                   {"preconditioner_shift", cfg.solver.preconditioner_shift},
                   {"seed", cfg.solver.seed},
                   {"dense_fallback_threshold", cfg.solver.dense_fallback_threshold}};
    j["reference"] = {{"policy", to_string(cfg.reference_policy)},
                      {"cutoff", cfg.reference_cutoff}};
    json exp;
    exp["type"] = to_string(cfg.kind);
    if (!cfg.second_charges.empty()) exp["charges2"] = charges_to_json(cfg.second_charges);
    if (!cfg.shells.empty()) {
        json sh = json::array();
        for (const auto& [lo, hi] : cfg.shells) sh.push_back({lo, hi});
        exp["shells"] = sh;
    }
    j["experiment"] = exp;
    j["min_cutoff"] = cfg.min_cutoff;
    j["max_basis"] = cfg.max_basis;
    j["warm_start"] = cfg.warm_start;
    return j.dump(2);
}

std::vector<std::string> preset_names() {
    return {"fig1_z2", "fig1_z3", "fig2_z2", "fig2_z3", "fig3_z2", "fig3_z3"};
}

ExperimentConfig preset(const std::string& name) {
    double z = 0.0;
    ExperimentKind kind;
    if (name == "fig1_z2") { z = 2.0; kind = ExperimentKind::Convergence; }
    else if (name == "fig1_z3") { z = 3.0; kind = ExperimentKind::Convergence; }
    else if (name == "fig2_z2") { z = 2.0; kind = ExperimentKind::Cancellation; }
    else if (name == "fig2_z3") { z = 3.0; kind = ExperimentKind::Cancellation; }
    else if (name == "fig3_z2") { z = 2.0; kind = ExperimentKind::CorrectionEfficiency; }
    else if (name == "fig3_z3") { z = 3.0; kind = ExperimentKind::CorrectionEfficiency; }
    else throw ConfigError("unknown preset: " + name);

    ExperimentConfig cfg;
    cfg.name = name;
    cfg.cell_edge = 2.0;
    cfg.charges = {{z, {0.35, 0.0, 0.0}}, {z, {-0.35, 0.0, 0.0}}};
    cfg.cutoffs = {8, 12, 16, 20, 24, 32};
    cfg.shape = CutoffShape::Cubic;
    cfg.reference_policy = ReferencePolicy::HighCutoff;
    cfg.reference_cutoff = 48;
    cfg.kind = kind;
    if (kind == ExperimentKind::Cancellation) {
        // The paper does not print the second configuration; +-0.375 e1 is our
        // choice (R2 = 0.75 e1).
        cfg.second_charges = {{z, {0.375, 0.0, 0.0}}, {z, {-0.375, 0.0, 0.0}}};
    }
    return cfg;
}

// --- study runner ------------------------------------------------------------

namespace {

std::size_t basis_count(int cutoff, CutoffShape shape) {
    const std::size_t side = 2 * static_cast<std::size_t>(cutoff) + 1;
    if (shape == CutoffShape::Cubic) return side * side * side;
    std::size_t count = 0;
    const long m2 = static_cast<long>(cutoff) * cutoff;
    for (int k1 = -cutoff; k1 <= cutoff; ++k1) {
        for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
            const long r = m2 - static_cast<long>(k1) * k1 - static_cast<long>(k2) * k2;
            if (r < 0) continue;
            count += 2 * static_cast<std::size_t>(std::sqrt(static_cast<double>(r))) + 1;
        }
    }
    return count;
}

struct SolveSlot {
    int cutoff = 0;
    bool ok = false;
    EigenSolution solution;
};

struct StudyOutput {
    std::vector<ConvergenceRecord> records;
    double reference_energy = nan_value;
    double reference_solve_energy = nan_value;
    double richardson_limit = nan_value;
    std::vector<int> failed;
};

EigenSolution solve_one(const ExperimentConfig& cfg, const ChargeConfig& config,
                        const SmoothPotential& w, int cutoff,
                        const EigenSolution* warm_from, const Vec3& anchor) {
    auto basis = std::make_shared<const CutoffBasis>(config.cell(), cutoff, cfg.shape);
    HamiltonianOperator op(basis, config, w);
    SolverOptions so = cfg.solver;
    if (warm_from != nullptr) so.initial_guess = warm_from->eigenvectors;
    EigenSolution sol = solve_lowest(op, so);
    return phase_normalize(sol, anchor);
}

StudyOutput run_study(const ExperimentConfig& cfg, const std::vector<PointCharge>& charges,
                      int threads) {
    const Cell cell(cfg.cell_edge);
    const ChargeConfig config(cell, charges);
    SmoothPotential w;
    for (const auto& [k, a] : cfg.w_terms) w.add_cosine(k, a, cell);

    const int m_max = cfg.cutoffs.back();
    int m_ref = 0;
    if (cfg.reference_policy == ReferencePolicy::HighCutoff) {
        m_ref = cfg.reference_cutoff > 0 ? cfg.reference_cutoff : std::max(3 * m_max, 48);
    }
    for (int m : cfg.cutoffs) {
        if (basis_count(m, cfg.shape) > cfg.max_basis) {
            throw ResourceLimitError("cutoff " + std::to_string(m) +
                                     " exceeds the basis-size guard");
        }
    }
    if (m_ref > 0 && basis_count(m_ref, cfg.shape) > cfg.max_basis) {
        throw ResourceLimitError("reference cutoff exceeds the basis-size guard");
    }

    const Vec3 anchor = charges.empty() ? Vec3{0.0, 0.0, 0.0} : config.charges()[0].position;

    std::vector<SolveSlot> slots(cfg.cutoffs.size());
    for (std::size_t i = 0; i < cfg.cutoffs.size(); ++i) slots[i].cutoff = cfg.cutoffs[i];

    StudyOutput out;
    if (cfg.warm_start || threads <= 1) {
        const EigenSolution* prev = nullptr;
        for (SolveSlot& slot : slots) {
            try {
                slot.solution = solve_one(cfg, config, w, slot.cutoff,
                                          cfg.warm_start ? prev : nullptr, anchor);
                slot.ok = true;
                prev = &slot.solution;
            } catch (const ConvergenceError&) {
                out.failed.push_back(slot.cutoff);
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::mutex failed_mutex;
        std::exception_ptr fatal;
        const int nthreads = std::min<int>(threads, static_cast<int>(slots.size()));
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= slots.size()) return;
                    try {
                        slots[i].solution =
                            solve_one(cfg, config, w, slots[i].cutoff, nullptr, anchor);
                        slots[i].ok = true;
                    } catch (const ConvergenceError&) {
                        std::lock_guard<std::mutex> lock(failed_mutex);
                        out.failed.push_back(slots[i].cutoff);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failed_mutex);
                        if (!fatal) fatal = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& th : pool) th.join();
        if (fatal) std::rethrow_exception(fatal);
        std::sort(out.failed.begin(), out.failed.end());
    }

    const CorrectionConstants constants = CorrectionConstants::for_shape(cfg.shape, cell);

    // Reference energy.
    std::unique_ptr<HamiltonianOperator> op_ref;
    EigenSolution sol_ref;
    if (cfg.reference_policy == ReferencePolicy::HighCutoff) {
        const EigenSolution* warm = nullptr;
        for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
            if (it->ok) { warm = &it->solution; break; }
        }
        auto basis_ref = std::make_shared<const CutoffBasis>(cell, m_ref, cfg.shape);
        op_ref = std::make_unique<HamiltonianOperator>(basis_ref, config, w);
        SolverOptions so = cfg.solver;
        if (cfg.warm_start && warm != nullptr) so.initial_guess = warm->eigenvectors;
        sol_ref = phase_normalize(solve_lowest(*op_ref, so), anchor);
        out.reference_solve_energy = sol_ref.eigenvalues[0];
        out.reference_energy = out.reference_solve_energy -
                               first_order_correction(sol_ref, config, constants, m_ref);
    } else {
        std::vector<std::pair<int, double>> pairs;
        for (const SolveSlot& s : slots) {
            if (s.ok && s.cutoff >= cfg.min_cutoff) {
                pairs.push_back({s.cutoff, s.solution.eigenvalues[0]});
            }
        }
        out.reference_energy = richardson_reference(pairs).limit;
    }

    // Richardson cross-check over the asymptotic window: the upper half of the
    // ladder plus the reference solve when present.
    {
        std::vector<std::pair<int, double>> pairs;
        for (const SolveSlot& s : slots) {
            if (s.ok && s.cutoff >= std::max(cfg.min_cutoff, m_max / 2)) {
                pairs.push_back({s.cutoff, s.solution.eigenvalues[0]});
            }
        }
        if (m_ref > 0 && !std::isnan(out.reference_solve_energy)) {
            pairs.push_back({m_ref, out.reference_solve_energy});
        }
        if (pairs.size() >= 3) {
            out.richardson_limit = richardson_reference(pairs).limit;
        }
    }

    for (const SolveSlot& s : slots) {
        if (!s.ok) continue;
        ConvergenceRecord rec;
        rec.cutoff = s.cutoff;
        rec.energy = s.solution.eigenvalues[0];
        rec.reference_energy = out.reference_energy;
        rec.raw_error = rec.energy - rec.reference_energy;
        rec.predicted_error = first_order_correction(s.solution, config, constants, s.cutoff);
        rec.corrected_error = rec.raw_error - rec.predicted_error;
        {
            std::vector<Vec3> nuclei;
            for (const PointCharge& c : config.charges()) nuclei.push_back(c.position);
            for (const Complex& v : evaluate_at_points(s.solution.eigenvectors[0], nuclei)) {
                rec.psi_at_nuclei.push_back(v.real());
            }
        }
        rec.residual_coupling = nan_value;
        if (op_ref && s.cutoff < m_ref) {
            rec.residual_coupling =
                error_identity_check(s.solution, sol_ref, *op_ref).second;
        }
        rec.tail_fit = nan_value;
        if (!charges.empty() && s.cutoff >= 8) {
            const std::pair<double, double> shell{s.cutoff / 4.0, s.cutoff / 2.0};
            rec.tail_fit =
                fourier_tail_profile(s.solution, config, std::span(&shell, 1))[0];
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

double safe_slope(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) return nan_value;
    for (const auto& [m, e] : pairs) {
        if (!(e > 0.0)) return nan_value;
    }
    return slope_fit(pairs);
}

std::vector<std::pair<double, double>> error_pairs(std::span<const ConvergenceRecord> records,
                                                   int min_cutoff, bool corrected) {
    std::vector<std::pair<double, double>> pairs;
    for (const ConvergenceRecord& r : records) {
        if (r.cutoff < min_cutoff) continue;
        pairs.push_back({static_cast<double>(r.cutoff),
                         corrected ? std::abs(r.corrected_error) : r.raw_error});
    }
    return pairs;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
    ExperimentResult result;
    result.stats["cell_edge"] = cfg.cell_edge;
    result.stats["min_cutoff"] = cfg.min_cutoff;
    const Cell cell(cfg.cell_edge);
    const CorrectionConstants constants = CorrectionConstants::for_shape(cfg.shape, cell);
    result.stats["correction_prefactor"] = constants.prefactor;
    result.stats["tail_constant"] = cfg.shape == CutoffShape::Cubic
                                        ? cubic_tail_constant()
                                        : spherical_tail_constant();

    switch (cfg.kind) {
        case ExperimentKind::Convergence:
        case ExperimentKind::CorrectionEfficiency: {
            StudyOutput study = run_study(cfg, cfg.charges, threads);
            result.records = std::move(study.records);
            result.failed_cutoffs = study.failed;
            result.stats["reference_energy"] = study.reference_energy;
            result.stats["reference_solve_energy"] = study.reference_solve_energy;
            result.stats["richardson_limit"] = study.richardson_limit;
            result.stats["richardson_vs_reference"] =
                std::abs(study.richardson_limit - study.reference_energy);
            result.stats["slope_raw_error"] =
                safe_slope(error_pairs(result.records, cfg.min_cutoff, false));
            result.stats["slope_corrected_error"] =
                safe_slope(error_pairs(result.records, cfg.min_cutoff, true));
            if (!result.records.empty()) {
                const ConvergenceRecord& last = result.records.back();
                result.stats["prediction_ratio_last"] = last.raw_error / last.predicted_error;
            }
            break;
        }
        case ExperimentKind::Cancellation: {
            StudyOutput s1, s2;
            if (threads >= 2) {
                auto f1 = std::async(std::launch::async,
                                     [&] { return run_study(cfg, cfg.charges, 1); });
                s2 = run_study(cfg, cfg.second_charges, 1);
                s1 = f1.get();
            } else {
                s1 = run_study(cfg, cfg.charges, threads);
                s2 = run_study(cfg, cfg.second_charges, threads);
            }
            result.records = std::move(s1.records);
            result.second_records = std::move(s2.records);
            result.failed_cutoffs = s1.failed;
            result.failed_cutoffs.insert(result.failed_cutoffs.end(), s2.failed.begin(),
                                         s2.failed.end());
            if (result.failed_cutoffs.empty()) {
                result.cancellation = cancellation_metrics(result.records, result.second_records);
            }
            result.stats["reference_energy_1"] = s1.reference_energy;
            result.stats["reference_energy_2"] = s2.reference_energy;
            std::vector<std::pair<double, double>> dpairs;
            double worst_ratio = 0.0;
            for (const CancellationRow& row : result.cancellation) {
                if (row.cutoff < cfg.min_cutoff) continue;
                dpairs.push_back({static_cast<double>(row.cutoff), row.difference_error});
                if (row.total_error > 0.0) {
                    worst_ratio = std::max(worst_ratio, row.difference_error / row.total_error);
                }
            }
            result.stats["slope_difference_error"] = safe_slope(dpairs);
            result.stats["max_cancellation_ratio"] = worst_ratio;
            break;
        }
        case ExperimentKind::TailLaw: {
            const Cell c(cfg.cell_edge);
            const ChargeConfig config(c, cfg.charges);
            SmoothPotential w;
            for (const auto& [k, a] : cfg.w_terms) w.add_cosine(k, a, c);
            const Vec3 anchor =
                cfg.charges.empty() ? Vec3{0.0, 0.0, 0.0} : config.charges()[0].position;
            for (int m : cfg.cutoffs) {
                if (basis_count(m, cfg.shape) > cfg.max_basis) {
                    throw ResourceLimitError("cutoff exceeds the basis-size guard");
                }
            }
            EigenSolution sol;
            const EigenSolution* prev = nullptr;
            for (int m : cfg.cutoffs) {
                sol = solve_one(cfg, config, w, m, cfg.warm_start ? prev : nullptr, anchor);
                prev = &sol;
            }
            std::vector<std::pair<double, double>> shells = cfg.shells;
            if (shells.empty()) shells = {{5.0, 10.0}, {10.0, 15.0}, {15.0, 20.0}};
            const std::vector<double> residuals =
                fourier_tail_profile(sol, config, shells);
            for (std::size_t i = 0; i < shells.size(); ++i) {
                result.shell_rows.push_back({shells[i].first, shells[i].second, residuals[i]});
            }
            result.stats["solve_cutoff"] = cfg.cutoffs.back();
            result.stats["energy"] = sol.eigenvalues[0];
            if (!cfg.charges.empty()) {
                const Vec3 r0 = config.charges()[0].position;
                result.stats["psi_at_first_nucleus"] =
                    evaluate_at_points(sol.eigenvectors[0], std::span(&r0, 1))[0].real();
            }
            break;
        }
    }
    result.fully_converged = result.failed_cutoffs.empty();
    return result;
}

// --- table output ------------------------------------------------------------

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // fixed newlines on any host
    if (!out) {
        throw IoError("cannot open output file: " + path.string());
    }
    return out;
}

json metadata_json(const RunMetadata* meta) {
    json m;
    if (meta == nullptr) return m;
    m["version"] = meta->version;
    m["timestamp"] = meta->timestamp;
    if (!meta->config_json.empty()) m["config"] = json::parse(meta->config_json);
    m["constants"] = meta->constants;
    return m;
}

json record_to_json(const ConvergenceRecord& r) {
    return json{{"cutoff", r.cutoff},
                {"energy", r.energy},
                {"reference_energy", r.reference_energy},
                {"raw_error", r.raw_error},
                {"predicted_error", r.predicted_error},
                {"corrected_error", r.corrected_error},
                {"psi_at_nuclei", r.psi_at_nuclei},
                {"residual_coupling", r.residual_coupling},
                {"tail_fit", r.tail_fit}};
}

double json_double(const json& v) {
    return v.is_null() ? nan_value : v.get<double>();
}

} // namespace

void emit_table(std::span<const ConvergenceRecord> records, TableFormat format,
                const std::filesystem::path& path, const RunMetadata* metadata) {
    if (records.empty()) {
        throw DomainError("emit_table: empty record list");
    }
    std::ofstream out = open_output(path);
    if (format == TableFormat::Csv) {
        out << "cutoff,energy,reference_energy,raw_error,predicted_error,corrected_error,"
               "psi_at_nuclei,residual_coupling,tail_fit\n";
        for (const ConvergenceRecord& r : records) {
            out << r.cutoff << ',' << g17(r.energy) << ',' << g17(r.reference_energy) << ','
                << g17(r.raw_error) << ',' << g17(r.predicted_error) << ','
                << g17(r.corrected_error) << ',';
            for (std::size_t i = 0; i < r.psi_at_nuclei.size(); ++i) {
                if (i > 0) out << ';';
                out << g17(r.psi_at_nuclei[i]);
            }
            out << ',' << g17(r.residual_coupling) << ',' << g17(r.tail_fit) << '\n';
        }
    } else {
        json j;
        j["metadata"] = metadata_json(metadata);
        json arr = json::array();
        for (const ConvergenceRecord& r : records) arr.push_back(record_to_json(r));
        j["records"] = arr;
        out << j.dump(2) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void emit_table(std::span<const CancellationRow> rows, TableFormat format,
                const std::filesystem::path& path, const RunMetadata* metadata) {
    if (rows.empty()) {
        throw DomainError("emit_table: empty record list");
    }
    std::ofstream out = open_output(path);
    if (format == TableFormat::Csv) {
        out << "cutoff,difference_error,total_error\n";
        for (const CancellationRow& r : rows) {
            out << r.cutoff << ',' << g17(r.difference_error) << ',' << g17(r.total_error)
                << '\n';
        }
    } else {
        json j;
        j["metadata"] = metadata_json(metadata);
        json arr = json::array();
        for (const CancellationRow& r : rows) {
            arr.push_back({{"cutoff", r.cutoff},
                           {"difference_error", r.difference_error},
                           {"total_error", r.total_error}});
        }
        j["records"] = arr;
        out << j.dump(2) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void emit_table(std::span<const ShellRow> rows, TableFormat format,
                const std::filesystem::path& path, const RunMetadata* metadata) {
    if (rows.empty()) {
        throw DomainError("emit_table: empty record list");
    }
    std::ofstream out = open_output(path);
    if (format == TableFormat::Csv) {
        out << "shell_lo,shell_hi,residual\n";
        for (const ShellRow& r : rows) {
            out << g17(r.shell_lo) << ',' << g17(r.shell_hi) << ',' << g17(r.residual) << '\n';
        }
    } else {
        json j;
        j["metadata"] = metadata_json(metadata);
        json arr = json::array();
        for (const ShellRow& r : rows) {
            arr.push_back({{"shell_lo", r.shell_lo},
                           {"shell_hi", r.shell_hi},
                           {"residual", r.residual}});
        }
        j["records"] = arr;
        out << j.dump(2) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<ConvergenceRecord> read_records_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open records file: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("records parse failure: ") + e.what());
    }
    std::vector<ConvergenceRecord> records;
    for (const json& r : j.at("records")) {
        ConvergenceRecord rec;
        rec.cutoff = r.at("cutoff").get<int>();
        rec.energy = json_double(r.at("energy"));
        rec.reference_energy = json_double(r.at("reference_energy"));
        rec.raw_error = json_double(r.at("raw_error"));
        rec.predicted_error = json_double(r.at("predicted_error"));
        rec.corrected_error = json_double(r.at("corrected_error"));
        for (const json& p : r.at("psi_at_nuclei")) rec.psi_at_nuclei.push_back(json_double(p));
        rec.residual_coupling = json_double(r.at("residual_coupling"));
        rec.tail_fit = json_double(r.at("tail_fit"));
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace cuspwave
