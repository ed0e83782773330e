#pragma once

#include <functional>

#include <Eigen/Dense>

namespace splab {

/// Quadrature settings for integrals over omega in [-pi, pi].
///
/// The default rule is the composite trapezoid on the periodic grid, which is
/// spectrally accurate for the smooth periodic integrands produced by
/// validated ARMA spectra. Gauss-Legendre is available for near-boundary
/// parameters where integrands develop sharp peaks.
struct QuadratureConfig {
    enum class Rule { trapezoid, gauss_legendre };

    Rule rule = Rule::trapezoid;
    int min_nodes = 512;
    int max_nodes = 1 << 16;
    double tol = 1e-8;
    /// When false, evaluate once at min_nodes with no refinement and no
    /// convergence check. Finite-difference sweeps use this to keep the node
    /// count identical across stencil points.
    bool adaptive = true;
};

struct QuadratureGrid {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Uniform grid of n nodes on [-pi, pi) with equal weights 2*pi/n (the
/// composite trapezoid rule for a periodic integrand).
QuadratureGrid periodic_grid(int n);

/// Gauss-Legendre rule with n nodes mapped to [-pi, pi].
QuadratureGrid gauss_legendre_grid(int n);

/// Integrate a vector-valued integrand over [-pi, pi], doubling the node
/// count until every component changes by at most tol * (1 + |component|).
/// Throws QuadratureNotConverged if max_nodes is reached while the check
/// still fails.
Eigen::VectorXd integrate_on_circle(
    const std::function<void(double, Eigen::Ref<Eigen::VectorXd>)>& integrand,
    int dim, const QuadratureConfig& cfg = {});

/// Scalar convenience wrapper.
double integrate_on_circle(const std::function<double(double)>& integrand,
                           const QuadratureConfig& cfg = {});

} // namespace splab
