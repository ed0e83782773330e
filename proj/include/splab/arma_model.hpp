#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splab/quadrature.hpp"
#include "splab/tensors.hpp"

namespace splab {

/// How the innovation variance enters the parameter vector.
///
/// - fixed: sigma^2 is a known constant; coordinates are (a_1..a_p, b_1..b_q).
/// - log_variance: last coordinate is log sigma^2, keeping the parameter
///   space open and the optimizer well conditioned.
/// - spectrum_level: last coordinate is the spectrum level s = sigma^2/(2*pi),
///   i.e. S(omega) = s for p = q = 0. Degenerate one-parameter family used
///   for closed-form oracles.
enum class SigmaPolicy { fixed, log_variance, spectrum_level };

/// A point in the parameter manifold. `validated` is set by
/// SpectralModel::validate once stationarity/invertibility has been checked.
struct Theta {
    Eigen::VectorXd coords;
    bool validated = false;
};

/// Pointwise spectral density value and its parameter derivatives.
struct SpectralEval {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    Tensor3 third;
    int order = 0;
};

/// Autocovariances gamma(0..max_lag) together with their parameter
/// derivatives up to third order, one sequence per derivative index.
struct AutocovDerivs {
    int k = 0;
    int max_lag = 0;
    int order = 0;
    std::vector<double> gamma;
    std::vector<std::vector<double>> d1; // k sequences
    std::vector<std::vector<double>> d2; // k*k sequences, symmetric in (i,j)
    std::vector<std::vector<double>> d3; // k^3 sequences, fully symmetric

    const std::vector<double>& first(int i) const { return d1[i]; }
    const std::vector<double>& second(int i, int j) const { return d2[i * k + j]; }
    const std::vector<double>& third(int i, int j, int l) const {
        return d3[(i * k + j) * k + l];
    }
};

/// ARMA(p,q) spectral family under the convention
///   S(omega|theta) = sigma^2/(2*pi) * |1 + sum b_j e^{-ij*omega}|^2
///                                   / |1 - sum a_j e^{-ij*omega}|^2,
/// with gamma(h) = integral of e^{ih*omega} S(omega) d omega, so the Toeplitz
/// covariance entries are gamma(|s-t|) directly.
///
/// All member functions are pure; the object is immutable after construction
/// and safe to share across threads.
class SpectralModel {
public:
    SpectralModel(int p, int q, SigmaPolicy policy = SigmaPolicy::fixed,
                  double fixed_sigma2 = 1.0, double root_margin = 1e-6);

    /// One-parameter constant-spectrum family S(omega|theta) = theta.
    static SpectralModel constant_spectrum();

    int ar_order() const { return p_; }
    int ma_order() const { return q_; }
    /// Parameter dimension k = p + q + (1 if sigma is a coordinate).
    int dim() const { return k_; }
    SigmaPolicy sigma_policy() const { return policy_; }
    double fixed_sigma2() const { return fixed_sigma2_; }
    double root_margin() const { return root_margin_; }

    /// Returns theta with validated = true, or throws NonStationary /
    /// NonInvertible / NonPositiveVariance / DimensionMismatch.
    Theta validate(const Eigen::VectorXd& coords) const;

    /// Non-throwing validity probe for region sweeps and optimizer steps.
    bool is_valid(const Eigen::VectorXd& coords) const noexcept;

    /// Throws if theta has not been validated for this model.
    void require_validated(const Theta& theta) const;

    /// Innovation variance sigma^2 at theta under the active policy.
    double sigma2(const Theta& theta) const;

    double spectral_density(const Theta& theta, double omega) const;

    /// Analytic parameter derivatives of S(.|theta) at one frequency, from
    /// the closed-form derivatives of the rational spectral form.
    SpectralEval spectral_partials(const Theta& theta, double omega,
                                   int max_order) const;

    /// gamma(0..max_lag) by the exact ARMA recursion.
    std::vector<double> autocovariances(const Theta& theta, int max_lag) const;

    /// gamma(0..max_lag) by quadrature of e^{ih*omega} S; cross-check route.
    std::vector<double> autocovariances_quadrature(
        const Theta& theta, int max_lag, const QuadratureConfig& cfg = {}) const;

    /// Autocovariances and their parameter derivatives, by running the exact
    /// recursion in third-order Taylor arithmetic (exact chain rule).
    AutocovDerivs autocov_derivs(const Theta& theta, int max_lag,
                                 int max_order) const;

    /// Same quantities by quadrature of the spectral partials; cross-check.
    AutocovDerivs autocov_derivs_quadrature(const Theta& theta, int max_lag,
                                            int max_order,
                                            const QuadratureConfig& cfg = {}) const;

    std::string describe() const;

private:
    void check_dimension(const Eigen::VectorXd& coords) const;
    // Largest reciprocal-root modulus of the AR (which == 0) or MA
    // (which == 1) polynomial at coords; 0 when the block is empty.
    double max_reciprocal_root(const Eigen::VectorXd& coords, int which) const;

    int p_ = 0;
    int q_ = 0;
    SigmaPolicy policy_ = SigmaPolicy::fixed;
    double fixed_sigma2_ = 1.0;
    double root_margin_ = 1e-6;
    int k_ = 0;
};

} // namespace splab
