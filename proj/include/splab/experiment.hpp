#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "splab/arma_model.hpp"
#include "splab/geometry.hpp"
#include "splab/risk.hpp"

#include "json.hpp"

namespace splab {

struct ModelConfig {
    int p = 0;
    int q = 0;
    std::string sigma = "fixed"; // fixed | log_variance | spectrum_level
    double sigma2 = 1.0;
    double root_margin = 1e-6;
};

SpectralModel make_model(const ModelConfig& mc);

/// Axis-aligned theta grid; nodes outside the validated region (or closer to
/// its boundary than `clearance` along any axis) are dropped.
struct GridConfig {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<int> count;
    double clearance = 0.05;
};

std::vector<Eigen::VectorXd> build_grid(const SpectralModel& model,
                                        const GridConfig& grid);

/// Registry of named prior factors usable from config files:
///   one          h == 1 (null control)
///   arcsine      2 - asin(theta_1); harmonic for the AR(1) metric
///   one_plus_a2  1 + a_2; superharmonic on the AR(2) triangle (grid-verify)
ScalarField named_h_field(const std::string& name);

struct JobConfig {
    std::string kind;
    std::string name;
    ModelConfig model;
    std::vector<double> theta0;
    std::vector<std::vector<double>> theta_points; // geometry-table
    std::string h = "one";
    GridConfig grid;
    std::vector<int> n_grid;
    int n = 128;
    int reps = 0;
    int pilot_reps = 200;
    double target_t = 4.0;
    int min_reps = 400;
    int max_reps = 10000;
    int oracle_audit_reps = 0;
};

struct ExperimentConfig {
    uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 0;
    QuadratureConfig quad;
    FdConfig fd;
    double tol_super = 1e-8;
    int omega_nodes = 512;
    std::vector<JobConfig> jobs;
};

/// Parse + validate; throws ConfigInvalid naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);

/// Canonical value-derived serialization; hashing and the round-trip
/// contract both run through this.
std::string canonical_config_text(const ExperimentConfig& cfg);

uint64_t fnv1a64(std::string_view s);

/// Hex config hash of the canonical text.
std::string config_hash(const ExperimentConfig& cfg);

struct JobResult {
    std::string name;
    std::string kind;
    bool pass = true;
    std::string note;
    std::string csv;        // file payload; empty = no CSV for this job
    nlohmann::json summary; // job block of summary.json
    std::string svg;        // optional plot document
};

struct ReportBundle {
    std::string hash;
    std::string canonical_config;
    std::vector<JobResult> jobs;

    bool all_pass() const {
        for (const auto& j : jobs)
            if (!j.pass) return false;
        return true;
    }
};

ReportBundle run_experiment(const ExperimentConfig& cfg);

/// Write CSV/JSON/SVG files atomically under out_dir. Timestamps go to a
/// separate run_meta.json so the scientific payload stays byte-stable.
void emit_report(const ReportBundle& bundle, const std::string& out_dir,
                 const std::set<std::string>& formats);

} // namespace splab
