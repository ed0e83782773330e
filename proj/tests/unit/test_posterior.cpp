#include "doctest.h"

#include <cmath>

#include "splab/errors.hpp"
#include "splab/posterior.hpp"

using namespace splab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<int>(v.size()));
    int i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

} // namespace

TEST_CASE("MLE on the constant-spectrum family matches the closed form") {
    SpectralModel cs = SpectralModel::constant_spectrum();
    Theta init = cs.validate(vec({1.0}));
    Eigen::VectorXd x = sample_path(cs, init, 64, 123, 0);
    FitResult fit = fit_mle(cs, x, init);
    CHECK(fit.theta_hat.coords[0] ==
          doctest::Approx(x.squaredNorm() / (2.0 * M_PI * 64)).epsilon(1e-8));
    CHECK(fit.grad_norm <= 1e-8 * (1.0 + std::abs(fit.loglik) / 64.0));
    CHECK(fit.J_n(0, 0) > 0.0);
}

TEST_CASE("MLE recovers AR(1) parameters to sampling accuracy") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    Eigen::VectorXd x = sample_path(ar1, t0, 512, 55, 0);
    FitResult fit = fit_mle(ar1, x, t0);
    CHECK(std::abs(fit.theta_hat.coords[0] - 0.5) < 4.0 * std::sqrt(0.75 / 512));
    // first-order condition at the reported optimum
    CHECK(log_likelihood_partials(ar1, fit.theta_hat, x, 1)
              .L1.lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("Gaussian moments: spec examples and the Isserlis identity") {
    GaussianMoments a = gaussian_moments(Eigen::MatrixXd::Identity(1, 1), 4);
    CHECK(a.I2(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(a.I4(0, 0, 0, 0) == doctest::Approx(0.1875).epsilon(1e-14));

    Eigen::MatrixXd J2 = Eigen::MatrixXd::Zero(2, 2);
    J2(0, 0) = 1.0;
    J2(1, 1) = 2.0;
    GaussianMoments b = gaussian_moments(J2, 1);
    CHECK(b.I2(0, 0) == doctest::Approx(1.0));
    CHECK(b.I2(1, 1) == doctest::Approx(0.5));
    CHECK(b.I2(0, 1) == doctest::Approx(0.0));
    CHECK(b.I4(0, 0, 1, 1) == doctest::Approx(0.5));

    // Isserlis pairing holds exactly for a dense random PD J
    RngStream rng(3, 0);
    Eigen::MatrixXd R(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R(i, j) = rng.normal();
    Eigen::MatrixXd J = R * R.transpose() + 3.0 * Eigen::MatrixXd::Identity(3, 3);
    GaussianMoments c = gaussian_moments(J, 7);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    CHECK(c.I4(i, j, k, l) ==
                          doctest::Approx(c.I2(i, j) * c.I2(k, l) +
                                          c.I2(i, k) * c.I2(j, l) +
                                          c.I2(i, l) * c.I2(j, k))
                              .epsilon(1e-14));

    CHECK_THROWS_AS(gaussian_moments(Eigen::MatrixXd::Zero(2, 2), 1),
                    SingularMatrix);
}

TEST_CASE("posterior shift is linear in the prior gradient") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    Eigen::VectorXd x = sample_path(ar1, t0, 128, 77, 0);
    FitResult fit = fit_mle(ar1, x, t0);

    // locally flat prior: the prior term vanishes, leaving the cubic term
    ScalarField flat_log;
    flat_log.value = [](const Eigen::VectorXd&) { return 0.0; };
    flat_log.grad = [](const Eigen::VectorXd& x2) {
        return Eigen::VectorXd::Zero(x2.size()).eval();
    };
    const Prior flat = Prior::custom_log_density(flat_log, "flat");
    const Eigen::VectorXd B_flat = posterior_shift(ar1, x, fit, flat);
    const LikelihoodDerivs ld = log_likelihood_partials(ar1, fit.theta_hat, x, 3);
    const GaussianMoments gm = gaussian_moments(fit.J_n, 128);
    const double cubic =
        128.0 / 6.0 * ld.L3(0, 0, 0) * gm.I4(0, 0, 0, 0);
    CHECK(B_flat[0] == doctest::Approx(cubic).epsilon(1e-12));

    // B_f - B_g = I2 (dlog f - dlog g) exactly
    ScalarField tilt;
    tilt.value = [](const Eigen::VectorXd& c) { return 0.7 * c[0]; };
    tilt.grad = [](const Eigen::VectorXd& c) {
        return Eigen::VectorXd::Constant(c.size(), 0.7).eval();
    };
    const Prior tilted = Prior::custom_log_density(tilt, "tilt");
    const Eigen::VectorXd B_tilt = posterior_shift(ar1, x, fit, tilted);
    CHECK(B_tilt[0] - B_flat[0] ==
          doctest::Approx(gm.I2(0, 0) * 0.7).epsilon(1e-12));
}

TEST_CASE("posterior shift tracks the oracle posterior mean") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    Eigen::VectorXd x = sample_path(ar1, t0, 256, 2024, 1);
    FitResult fit = fit_mle(ar1, x, t0);
    const Prior pj = Prior::jeffreys();
    const Eigen::VectorXd B = posterior_shift(ar1, x, fit, pj);
    Eigen::VectorXd wgrid = periodic_grid(16).nodes;
    OracleEstimate oe = bayes_spectral_oracle(ar1, x, fit, pj, wgrid);
    const double oracle_shift = oe.posterior_mean[0] - fit.theta_hat.coords[0];
    // both are O(1/n); they agree to O(1/n^2)
    CHECK(std::abs(B[0] - oracle_shift) < 30.0 / (256.0 * 256.0));
}

TEST_CASE("oracle reproduces the conjugate posterior on the scalar family") {
    SpectralModel cs = SpectralModel::constant_spectrum();
    Theta init = cs.validate(vec({1.0}));
    Eigen::VectorXd x = sample_path(cs, init, 64, 9, 0);
    FitResult fit = fit_mle(cs, x, init);
    Eigen::VectorXd wgrid = periodic_grid(8).nodes;
    OracleConfig oc;
    oc.half_width_sds = 12.0; // the inverse-gamma right tail is heavy at n=64
    OracleEstimate oe =
        bayes_spectral_oracle(cs, x, fit, Prior::jeffreys(), wgrid, oc);
    // posterior under pi_J is inverse-gamma-type with mean s/(n/2 - 1)
    const double s = x.squaredNorm() / (4.0 * M_PI);
    CHECK(oe.posterior_mean[0] ==
          doctest::Approx(s / (32.0 - 1.0)).epsilon(2e-4));
    CHECK_FALSE(oe.estimate.truncated);
    // flat spectrum: the Bayes estimate is the posterior mean at every omega
    for (int i = 0; i < wgrid.size(); ++i)
        CHECK(oe.estimate.values[i] ==
              doctest::Approx(oe.posterior_mean[0]).epsilon(1e-10));
}

TEST_CASE("oracle flags truncation near the region boundary") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.9}));
    Eigen::VectorXd x = sample_path(ar1, t0, 24, 31, 0);
    FitResult fit = fit_mle(ar1, x, t0);
    Eigen::VectorXd wgrid = periodic_grid(8).nodes;
    OracleConfig oc;
    oc.half_width_sds = 40.0; // force the grid into the boundary
    OracleEstimate oe =
        bayes_spectral_oracle(ar1, x, fit, Prior::jeffreys(), wgrid, oc);
    CHECK(oe.estimate.truncated);
    CHECK(oe.boundary_mass > 1e-6);
}

TEST_CASE("expansion equals plug-in when corrections are switched off") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.4}));
    Eigen::VectorXd x = sample_path(ar1, t0, 128, 13, 0);
    FitResult fit = fit_mle(ar1, x, t0);
    Eigen::VectorXd wgrid = periodic_grid(32).nodes;
    // huge-n moments make both correction terms vanish
    FitResult point = fit;
    const int huge = 1 << 30;
    BayesSpectralEstimate est = bayes_spectral_from_shift(
        ar1, point, Eigen::VectorXd::Zero(1), huge, wgrid);
    for (int i = 0; i < wgrid.size(); ++i)
        CHECK(est.values[i] ==
              doctest::Approx(ar1.spectral_density(fit.theta_hat, wgrid[i]))
                  .epsilon(1e-6));
}

TEST_CASE("moment and geometric expansion routes agree closely") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    Eigen::VectorXd wgrid = periodic_grid(64).nodes;
    const Prior pj = Prior::jeffreys();
    for (int n : {128, 256}) {
        Eigen::VectorXd x = sample_path(ar1, t0, n, 404, n);
        FitResult fit = fit_mle(ar1, x, t0);
        BayesSpectralEstimate em = bayes_spectral_expansion(
            ar1, x, fit, pj, wgrid, ExpansionForm::moment);
        BayesSpectralEstimate eg = bayes_spectral_expansion(
            ar1, x, fit, pj, wgrid, ExpansionForm::geometric);
        const double diff = (em.values - eg.values).cwiseAbs().maxCoeff();
        // routes agree to O(n^{-3/2}) with a generous constant
        CHECK(diff < 20.0 * std::pow(double(n), -1.5));
    }
}

TEST_CASE("Jeffreys-form expansion reduces the prior term to T/2 alone") {
    // With f = pi_J the geometric route must not need any prior gradient;
    // feeding the f = pi_J * h route with h == 1 must agree exactly.
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    Eigen::VectorXd x = sample_path(ar1, t0, 64, 5, 0);
    FitResult fit = fit_mle(ar1, x, t0);
    Eigen::VectorXd wgrid = periodic_grid(32).nodes;
    BayesSpectralEstimate a = bayes_spectral_expansion(
        ar1, x, fit, Prior::jeffreys(), wgrid, ExpansionForm::geometric);
    BayesSpectralEstimate b = bayes_spectral_expansion(
        ar1, x, fit, Prior::jeffreys_times(constant_field(1.0), "one"), wgrid,
        ExpansionForm::geometric);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("MLE bias routes agree and vanish at the symmetric point") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    for (int n : {64, 128, 256}) {
        BiasResult br = mle_bias(ar1, t0, n);
        CHECK(std::abs(br.finite_n[0] - br.geometric[0]) <
              10.0 / double(n) * std::abs(br.geometric[0]));
    }
    BiasResult sym = mle_bias(ar1, ar1.validate(vec({0.0})), 64);
    CHECK(std::abs(sym.geometric[0]) < 1e-10);
}

TEST_CASE("optimizer failure is reported as DidNotConverge") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    Eigen::VectorXd x = sample_path(ar1, t0, 32, 3, 0);
    FitOptions opt;
    opt.max_iterations = 0; // starve the search
    opt.max_restarts = 1;
    CHECK_THROWS_AS(fit_mle(ar1, x, t0, opt), DidNotConverge);
}
