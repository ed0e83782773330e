#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splab/arma_model.hpp"
#include "splab/geometry.hpp"
#include "splab/posterior.hpp"
#include "splab/prior.hpp"

namespace splab {

/// KL spectral divergence int dw/4pi { S0/Shat - 1 - log(S0/Shat) } between
/// two positive fields sampled on the same uniform circle grid.
double kl_divergence(const Eigen::VectorXd& s0, const Eigen::VectorXd& shat);

/// Function form with adaptive quadrature.
double kl_divergence(const std::function<double(double)>& s0,
                     const std::function<double(double)>& shat,
                     const QuadratureConfig& cfg = {});

enum class Estimator { expansion, oracle };

struct RiskOptions {
    QuadratureConfig quad;
    FdConfig fd;
    int omega_nodes = 512;
    ExpansionForm form = ExpansionForm::moment;
    OracleConfig oracle;
    FitOptions fit;
    double max_fit_failure_rate = 0.01;
    int threads = 0; // 0 = hardware concurrency
};

struct RiskReport {
    Eigen::VectorXd theta0;
    std::string prior;
    std::string estimator;
    int n = 0;
    int reps = 0;
    int completed = 0;
    double mean = 0.0;
    double se = 0.0;
    int floored = 0;
    int fit_failures = 0;
    uint64_t seed = 0;
};

/// Monte Carlo risk E_theta0[ D(S0 || S_f) ]: per replication sample a path,
/// fit, build the Bayes spectral estimate, take the KL. Deterministic under
/// (seed, reps, n) regardless of thread count.
RiskReport mc_risk(const SpectralModel& model, const Theta& theta0,
                   const Prior& prior, int n, int reps, uint64_t seed,
                   Estimator estimator = Estimator::expansion,
                   const RiskOptions& opt = {});

/// n^2-scaled asymptotic risk pieces at theta0.
struct AsymptoticRisk {
    /// f-dependent part of the risk expansion (coefficient of n^-2):
    /// (1/2) g^{ij} F_i F_j + e-covariant divergence of g^{kj} F_j.
    double f_part = 0.0;
    /// Principal term of n^2 (risk_jeffreys - risk_f):
    /// (1/2) g^{ij} d_i log(f/pi_J) d_j log(f/pi_J) - (pi_J/f) Lap(f/pi_J).
    double diff_vs_jeffreys = 0.0;
    double grad_term = 0.0;
    double laplace_term = 0.0;
};

AsymptoticRisk asymptotic_risk(const SpectralModel& model, const Theta& theta0,
                               const Prior& prior,
                               const QuadratureConfig& cfg = {},
                               const FdConfig& fd = {});

struct DominanceCell {
    int n = 0;
    int reps = 0;
    int completed = 0;
    double risk_jeffreys = 0.0;
    double risk_h = 0.0;
    double diff = 0.0;      // mean of paired KL_J - KL_H
    double diff_se = 0.0;   // paired standard error
    double unpaired_se = 0.0;
    double t_stat = 0.0;
    double n2_diff = 0.0;
    double asymptote = 0.0; // n-free asymptotic diff_vs_jeffreys
    int floored_jeffreys = 0;
    int floored_h = 0;
    int fit_failures = 0;
    uint64_t cell_seed = 0;
    // Oracle audit on a replication subsample (0 reps = skipped).
    int audit_reps = 0;
    double audit_max_rel_diff = 0.0;
};

struct DominanceOptions {
    RiskOptions risk;
    /// reps = 0 selects the pilot-variance rule per cell.
    int reps = 0;
    int pilot_reps = 200;
    double target_t = 4.0;
    int min_reps = 400;
    int max_reps = 10000;
    int oracle_audit_reps = 0;
    double tol_super = 1e-8;
};

struct DominanceResult {
    std::string h_name;
    SuperharmonicReport check;
    std::vector<DominanceCell> cells;
};

/// Prior-dominance experiment: paired common-random-paths Monte
/// Carlo of risk(pi_J) - risk(pi_J * h) over an n grid, with the asymptotic
/// prediction attached. The superharmonic grid check runs first; if it
/// fails, no cells are run (the caller decides how to report the verdict).
DominanceResult dominance_experiment(const SpectralModel& model,
                                     const Theta& theta0, const ScalarField& h,
                                     const std::string& h_name,
                                     const std::vector<Eigen::VectorXd>& check_grid,
                                     const std::vector<int>& n_grid,
                                     uint64_t seed,
                                     const DominanceOptions& opt = {});

} // namespace splab
