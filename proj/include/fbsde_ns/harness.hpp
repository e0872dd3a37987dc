#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde_ns/besov.hpp"
#include "fbsde_ns/grid.hpp"
#include "fbsde_ns/solver.hpp"

namespace fbsde {

enum class Experiment { solve, taylor_green, visc_sweep, invariants };
std::string to_string(Experiment e);

/// Initial velocity families available to `solve` and the sweep.
enum class InitialCondition { taylor_green, zero, constant, random };
std::string to_string(InitialCondition c);

/// Smoothness r with integrability p and summability q; integer r selects W^{r,p}.
struct NormSpec {
    double r = 1.5;
    double p = 4.0;
    double q = 4.0;
    std::string id() const;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::invariants;
    int d = 3;
    int n = 32;
    double box_length = 6.283185307179586;
    SolverConfig solver{};
    std::vector<double> visc_list{0.1, 0.03, 0.01, 0.003};
    std::filesystem::path output_dir = "out";
    std::vector<NormSpec> norms{{1.5, 4, 4}, {2.5, 4, 4}}; ///< reported alongside the fixed point
    InitialCondition initial = InitialCondition::taylor_green;
    double amplitude = 1.0;
    std::vector<std::string> invariants{"all"};
    double leray_corruption = 0.0;
    int reference_substeps = 8;

    GridSpec grid() const { return GridSpec::make(d, n, box_length); }
};

/// Configuration error carrying the offending line (0 when not tied to a line).
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line);
    int line;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config(const std::filesystem::path& path);
/// Checks cross-field invariants (e.g. the sweep's viscosity span); throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Canonical text: every key, fixed section and key order, shortest round-trip numbers.
std::string serialize(const ExperimentConfig& cfg);
/// Text-level canonical form: comments and blank lines dropped, keys trimmed and
/// reordered canonically. Equals serialize(parse(x)) whenever x sets every key.
std::string normalize(const std::string& text);

/// Markdown table of every key with type, default and meaning.
std::string config_reference_markdown();

/// Levenshtein distance, used for "did you mean" suggestions.
std::size_t edit_distance(const std::string& a, const std::string& b);

// Experiments --------------------------------------------------------------------------

VectorField initial_velocity(const ExperimentConfig& cfg);
VectorField taylor_green(const GridSpec& spec, double amplitude);
/// Random field with modes |s_a| <= kmax and spectrum decaying like 1/(1 + |k|^2);
/// Leray-projected when solenoidal is set. Deterministic in seed.
VectorField random_band_limited(const GridSpec& spec, std::uint64_t seed, int kmax, bool solenoidal);

struct TaylorGreenReport {
    PicardState picard;
    double fixed_point_error = 0.0;     ///< sup_t relative L2 vs exact decay
    double fixed_point_vs_reference = 0.0;
    double reference_error = 0.0;       ///< reference solver vs exact decay
    double std_error_relative = 0.0;    ///< sup_t L2 standard error / sup_t ||exact||
    double divergence_sup = 0.0;
    double divergence_std_error = 0.0;
    double wall_seconds = 0.0;
};

TaylorGreenReport run_taylor_green(const ExperimentConfig& cfg);

struct SweepRow {
    double nu = 0.0;
    double D = 0.0;
    double bound = 0.0;   ///< sqrt(2 nu T1)
    double ratio = 0.0;
    double mc_error = 0.0;
    double quadrature_error = 0.0;
    PicardStatus status = PicardStatus::max_iters;
    double horizon = 0.0;
    int iterations = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double T1 = 0.0;
    double slope = 0.0;
    double slope_lo = 0.0;  ///< 95% confidence interval
    double slope_hi = 0.0;
    bool complete = false;
    bool monotone = false;  ///< D nondecreasing in nu within error bars
    std::string failure;
};

SweepReport run_visc_sweep(const ExperimentConfig& cfg, int jobs);

struct InvariantResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Names of every invariant known to the suite.
std::vector<std::string> invariant_names();
/// Runs the selected invariants ("all" selects every one; empty selects none).
std::vector<InvariantResult> run_invariants(const std::vector<std::string>& selection,
                                            double leray_corruption = 0.0);

// Serialization ------------------------------------------------------------------------

void write_sweep_csv(std::ostream& os, const SweepReport& r);
void write_invariants_csv(std::ostream& os, const std::vector<InvariantResult>& r);
void write_taylor_green_csv(std::ostream& os, const TaylorGreenReport& r);

/// 64-bit FNV-1a of the canonical config text, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);
std::string git_describe();

/// Writes manifest.json (config hash, seed, git describe, wall time) into dir.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, double wall_seconds);

/// CLI entry: returns the process exit code (0 ok, 2 invariant failure,
/// 3 convergence failure, 4 config error).
int run_cli(int argc, char** argv);

} // namespace fbsde
