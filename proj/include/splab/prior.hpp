#pragma once

#include <string>

#include "splab/arma_model.hpp"
#include "splab/geometry.hpp"

namespace splab {

/// Prior on the parameter manifold, possibly improper. Three kinds:
///   - jeffreys:          pi_J propto sqrt(det g)
///   - jeffreys_times_h:  pi_J * h for a positive factor h
///   - custom:            user log-density (up to an additive constant)
class Prior {
public:
    enum class Kind { jeffreys, jeffreys_times_h, custom };

    static Prior jeffreys();
    static Prior jeffreys_times(ScalarField h, std::string name);
    static Prior custom_log_density(ScalarField log_f, std::string name);

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const ScalarField& h_field() const { return field_; }

    /// d log f. The Jeffreys part is the finite-difference gradient of
    /// log sqrt(det g).
    Eigen::VectorXd log_gradient(const SpectralModel& model, const Theta& theta,
                                 const QuadratureConfig& cfg = {},
                                 const FdConfig& fd = {}) const;

    /// d log (f / pi_J); identically zero for the Jeffreys prior, analytic
    /// for pi_J * h when h carries a gradient.
    Eigen::VectorXd log_ratio_gradient(const SpectralModel& model,
                                       const Theta& theta,
                                       const QuadratureConfig& cfg = {},
                                       const FdConfig& fd = {}) const;

    /// Unnormalized density value (improper priors integrate to infinity;
    /// only ratios matter downstream).
    double density(const SpectralModel& model, const Theta& theta,
                   const QuadratureConfig& cfg = {}) const;

    /// f / pi_J as a scalar field on the validated region.
    ScalarField ratio_field(const SpectralModel& model,
                            const QuadratureConfig& cfg = {}) const;

private:
    Kind kind_ = Kind::jeffreys;
    std::string name_ = "jeffreys";
    ScalarField field_; // h for jeffreys_times_h, log f for custom
};

} // namespace splab
