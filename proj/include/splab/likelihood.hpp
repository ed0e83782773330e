#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "splab/arma_model.hpp"
#include "splab/rng.hpp"
#include "splab/tensors.hpp"
#include "splab/toeplitz.hpp"

namespace splab {

/// Log-likelihood derivatives normalized by 1/n:
/// L_{i...} = (1/n) d^p l_n / d theta^{i...}.
struct LikelihoodDerivs {
    int order = 0;
    Eigen::VectorXd L1;
    Eigen::MatrixXd L2;
    Tensor3 L3;
};

/// The five derivative trace arrays at (theta, n), all carrying the
/// 1/(2n) normalization that makes them O(1):
///   Jp_ij  = (1/2n) Tr(S^-1 dS_i S^-1 dS_j)
///   h_ij   = (1/2n) Tr(S^-1 dS_ij)
///   Gp_kij = (1/2n) Tr(S^-1 dS_k S^-1 dS_ij)
///   Tp_kij = (1/2n) Tr(S^-1 dS_k S^-1 dS_i S^-1 dS_j)
///   Np_kij = (1/2n) Tr(S^-1 dS_kij)
struct TraceQuantities {
    int n = 0;
    Eigen::MatrixXd Jp;
    Eigen::MatrixXd h;
    Tensor3 Gp;
    Tensor3 Tp;
    Tensor3 Np;
};

/// Expected log-likelihood derivatives assembled from TraceQuantities:
///   m2      = m_ij   = E[L_ij]            (= -Jp exactly)
///   m2_inv  = m^ij
///   m3      = m_ijk  = E[L_ijk]
///   nm21    = n * m_ij,k = n * E[L_ij L_k]  (stored with the 1/n scale
///             made explicit so the entries stay O(1))
struct ExpectedDerivs {
    int n = 0;
    Eigen::MatrixXd m2;
    Eigen::MatrixXd m2_inv;
    Tensor3 m3;
    Tensor3 nm21;
};

/// Sigma_n(theta) from the exact autocovariance recursion.
ToeplitzCov covariance_matrix(const SpectralModel& model, const Theta& theta,
                              int n);

/// l_n(theta) = -1/2 x' Sigma^-1 x - 1/2 log det Sigma, via Cholesky solves.
/// With full_constant, subtracts (n/2) log(2 pi) so exp(l_n) is the density.
double log_likelihood(const SpectralModel& model, const Theta& theta,
                      const Eigen::VectorXd& x, bool full_constant = false);

/// Same value through the Durbin-Levinson prediction-error decomposition;
/// O(n^2) and matrix-free. Used for likelihood sweeps.
double log_likelihood_durbin(const SpectralModel& model, const Theta& theta,
                             const Eigen::VectorXd& x,
                             bool full_constant = false);

/// L_i, L_ij, L_ijk at theta by the quadratic-form/trace decomposition,
/// with all Sigma^-1 products done by Cholesky solves.
LikelihoodDerivs log_likelihood_partials(const SpectralModel& model,
                                         const Theta& theta,
                                         const Eigen::VectorXd& x,
                                         int max_order);

/// Exact draw from N(0, Sigma_n(theta)) as L z with z standard normal from
/// the given stream. Same (theta, n, stream state) gives identical output.
Eigen::VectorXd sample_path(const SpectralModel& model, const Theta& theta,
                            int n, RngStream& rng);
Eigen::VectorXd sample_path(const SpectralModel& model, const Theta& theta,
                            int n, uint64_t seed, uint64_t stream = 0);

TraceQuantities trace_quantities(const SpectralModel& model, const Theta& theta,
                                 int n);

ExpectedDerivs expected_derivatives(const TraceQuantities& tq);

} // namespace splab
