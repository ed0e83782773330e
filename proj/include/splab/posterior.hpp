#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "splab/arma_model.hpp"
#include "splab/likelihood.hpp"
#include "splab/prior.hpp"

namespace splab {

struct FitOptions {
    /// Converged when ||L_1||_inf <= tol_grad * (1 + |l_n|/n).
    double tol_grad = 1e-8;
    int max_iterations = 400;
    int max_restarts = 6;
    /// Relative jitter applied to the initial point on each restart.
    double init_jitter = 0.05;
    uint64_t jitter_seed = 0xA11CEULL;
};

struct FitResult {
    Theta theta_hat;
    Eigen::MatrixXd J_n;  // observed information, -(1/n) d2 l_n, positive definite
    double loglik = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    int restarts = 0;
};

/// Quasi-Newton (BFGS) maximization of the exact log-likelihood with
/// backtracking line search; steps leaving the validated region are shrunk.
/// Throws DidNotConverge / HessianNotPD.
FitResult fit_mle(const SpectralModel& model, const Eigen::VectorXd& x,
                  const Theta& init, const FitOptions& opt = {});

struct GaussianMoments {
    Eigen::MatrixXd I2;  // J_n^{-1} / n
    Tensor4 I4;          // Isserlis pairing of I2
};

/// Second and fourth central moments of N(0, J_n^{-1}/n). Odd moments vanish.
GaussianMoments gaussian_moments(const Eigen::MatrixXd& J_n, int n,
                                 bool want_fourth = true);

/// Posterior mean shift B_f^i = (n/6) L_abc I^{abci} + I^{ia} d_a log f,
/// evaluated at theta_hat.
Eigen::VectorXd posterior_shift(const SpectralModel& model,
                                const Eigen::VectorXd& x, const FitResult& fit,
                                const Prior& prior,
                                const QuadratureConfig& cfg = {},
                                const FdConfig& fd = {});

enum class ExpansionForm {
    moment,     // S + dS_i B^i + 1/2 d2S_ij I^ij with exact finite-n inputs
    geometric,  // the g / Gm / T form with tensors at theta_hat
};

struct BayesSpectralEstimate {
    Eigen::VectorXd omega;
    Eigen::VectorXd values;
    std::string method;
    int floored = 0;      // positivity-guard events
    bool truncated = false;  // oracle domain truncation flag
};

/// Moment-form evaluation given a precomputed shift vector. Building block
/// for paired-prior designs where one fit serves several priors (their
/// shifts differ by I2 * difference of prior log-gradients).
BayesSpectralEstimate bayes_spectral_from_shift(const SpectralModel& model,
                                                const FitResult& fit,
                                                const Eigen::VectorXd& shift,
                                                int n,
                                                const Eigen::VectorXd& omega_grid,
                                                double eps_floor = 1e-12);

/// Expansion-form Bayes spectral density on an omega grid. Values are
/// floored at eps_floor and events counted.
BayesSpectralEstimate bayes_spectral_expansion(
    const SpectralModel& model, const Eigen::VectorXd& x, const FitResult& fit,
    const Prior& prior, const Eigen::VectorXd& omega_grid,
    ExpansionForm form = ExpansionForm::moment, const QuadratureConfig& cfg = {},
    const FdConfig& fd = {}, double eps_floor = 1e-12);

struct OracleConfig {
    int nodes_per_dim = 0;     // 0 = pick by dimension (129 / 65 / 33)
    double half_width_sds = 8.0;
    double boundary_mass_tol = 1e-6;
};

struct OracleEstimate {
    BayesSpectralEstimate estimate;
    Eigen::VectorXd posterior_mean;
    double boundary_mass = 0.0;  // fraction of mass on the outermost shell
};

/// Brute-force posterior integration of S(omega|theta) on a tensor grid
/// spanning theta_hat +- half_width_sds posterior SDs intersected with the
/// validated region. Verification tool for k <= 3.
OracleEstimate bayes_spectral_oracle(const SpectralModel& model,
                                     const Eigen::VectorXd& x,
                                     const FitResult& fit, const Prior& prior,
                                     const Eigen::VectorXd& omega_grid,
                                     const OracleConfig& ocfg = {},
                                     const QuadratureConfig& cfg = {});

struct BiasResult {
    Eigen::VectorXd finite_n;   // expected-derivative route at this n
    Eigen::VectorXd geometric;  // -(1/2n) Gm^i_jk g^jk limit route
};

/// First-order MLE bias E[theta_hat - theta0], both routes.
BiasResult mle_bias(const SpectralModel& model, const Theta& theta0, int n,
                    const QuadratureConfig& cfg = {});

} // namespace splab
