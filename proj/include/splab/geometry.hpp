#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "splab/arma_model.hpp"
#include "splab/quadrature.hpp"
#include "splab/tensors.hpp"

namespace splab {

/// Spectral-manifold tensors at one theta, all computed by quadrature of the
/// log-spectral derivatives over omega:
///   g_ij     = int dw/4pi  r_i r_j                  with r_i = d_i log S
///   Gm_{a,ij}= int dw/4pi  r_a (d_i d_j S)/S        (mixture connection)
///   M_{a,ijl}= int dw/4pi  r_a (d_i d_j d_l S)/S
///   N_{ij,kl}= int dw/4pi  (d_i d_j S)/S (d_k d_l S)/S
///   T_ijk    = int dw/2pi  r_i r_j r_k              (note the 1/2pi)
///   L_{ij,kl}= int dw/4pi  r_i r_j (d_k d_l S)/S
/// plus eG = Gm - T (e-connection) and T1_i = T_ijk g^{jk}.
struct GeometryTensors {
    Eigen::VectorXd theta;
    Eigen::MatrixXd g;
    Eigen::MatrixXd g_inv;
    Tensor3 Gm;
    Tensor3 eG;
    Tensor3 T;
    Eigen::VectorXd T1;
    Tensor4 M;
    Tensor4 N;
    Tensor4 L;
};

GeometryTensors geometry_at(const SpectralModel& model, const Theta& theta,
                            const QuadratureConfig& cfg = {});

/// Fisher metric alone (cheaper integrand than the full tensor set).
Eigen::MatrixXd spectral_metric_at(const SpectralModel& model, const Theta& theta,
                                   const QuadratureConfig& cfg = {});

/// Central-difference steps h_i = rel_step * (1 + |theta_i|).
struct FdConfig {
    double rel_step = 1e-4;
};

/// A scalar function on the parameter manifold; grad may be empty, in which
/// case central differences of value are used.
struct ScalarField {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
};

ScalarField constant_field(double c);

/// A metric on (a subset of) R^k; in_domain may be empty (= everywhere).
struct MetricField {
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> metric;
    std::function<bool(const Eigen::VectorXd&)> in_domain;
};

MetricField flat_metric(int k);

/// Fisher metric of the model as a field. Quadrature runs with a pinned node
/// count so finite differences across nearby theta see a smooth function.
MetricField spectral_metric_field(const SpectralModel& model,
                                  const QuadratureConfig& cfg = {});

/// d_j log pi_J = d_j log sqrt(det g), by central differences of the
/// quadrature metric. Throws StencilOutOfDomain near the region boundary.
Eigen::VectorXd jeffreys_log_gradient(const SpectralModel& model,
                                      const Theta& theta,
                                      const QuadratureConfig& cfg = {},
                                      const FdConfig& fd = {});

/// Tensor route for the same quantity: eG^k_{jk} + T_j / 2. Used as the
/// independent cross-check of the finite-difference route.
Eigen::VectorXd jeffreys_log_gradient_tensors(const GeometryTensors& gt);

/// Laplace-Beltrami operator in divergence form,
///   (1/sqrt g) d_j ( sqrt g g^{jk} d_k phi ),
/// with the outer derivative by central differences.
double laplace_beltrami(const ScalarField& phi, const Eigen::VectorXd& theta,
                        const MetricField& metric, const FdConfig& fd = {});

struct SuperharmonicReport {
    bool pass = false;
    bool positive = false;
    double min_h = 0.0;
    double max_laplacian = 0.0;
    Eigen::VectorXd worst_node;
    int nodes_checked = 0;
    double tol = 0.0;
};

/// Grid verification of superharmonicity: h > 0 and
/// Laplacian(h) <= tol at every node. Reports the worst node.
SuperharmonicReport check_superharmonic(const ScalarField& h,
                                        const std::vector<Eigen::VectorXd>& grid,
                                        const MetricField& metric,
                                        double tol_super = 1e-8,
                                        const FdConfig& fd = {},
                                        int threads = 0);

} // namespace splab
