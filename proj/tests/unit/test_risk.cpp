#include "doctest.h"

#include <cmath>

#include "splab/errors.hpp"
#include "splab/risk.hpp"

using namespace splab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<int>(v.size()));
    int i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

ScalarField arcsine_h() {
    ScalarField f;
    f.value = [](const Eigen::VectorXd& x) { return 2.0 - std::asin(x[0]); };
    f.grad = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, -1.0 / std::sqrt(1.0 - x[0] * x[0]))
            .eval();
    };
    return f;
}

} // namespace

TEST_CASE("KL divergence values and guards") {
    Eigen::VectorXd one = Eigen::VectorXd::Constant(512, 1.0);
    Eigen::VectorXd two = Eigen::VectorXd::Constant(512, 2.0);
    CHECK(kl_divergence(one, two) ==
          doctest::Approx(0.5 * (0.5 - 1.0 + std::log(2.0))).epsilon(1e-12));
    CHECK(kl_divergence(one, one) == 0.0);

    Eigen::VectorXd neg = one;
    neg[3] = -1.0;
    CHECK_THROWS_AS(kl_divergence(one, neg), NonPositiveDensity);

    // positivity with equality only at equal fields on a perturbation family
    for (double eps : {1e-3, 1e-2, 0.1}) {
        Eigen::VectorXd pert = one;
        for (int i = 0; i < pert.size(); ++i)
            pert[i] += eps * std::sin(2.0 * M_PI * i / pert.size());
        CHECK(kl_divergence(one, pert) > 0.0);
    }
}

TEST_CASE("KL quadrature matches a very fine reference") {
    SpectralModel ar1(1, 0);
    Theta t5 = ar1.validate(vec({0.5}));
    Theta t0 = ar1.validate(vec({0.0}));
    auto s0 = [&](double w) { return ar1.spectral_density(t5, w); };
    auto s1 = [&](double w) { return ar1.spectral_density(t0, w); };
    QuadratureConfig fine;
    fine.min_nodes = 1 << 20;
    fine.adaptive = false;
    const double ref = kl_divergence(s0, s1, fine);
    const double adaptive = kl_divergence(s0, s1, QuadratureConfig{});
    CHECK(adaptive == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("asymptotic risk difference vanishes identically for pi_J") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    AsymptoticRisk a = asymptotic_risk(ar1, t0, Prior::jeffreys());
    CHECK(a.diff_vs_jeffreys == 0.0);
    CHECK(a.grad_term == 0.0);
    CHECK(a.laplace_term == 0.0);
    AsymptoticRisk b = asymptotic_risk(
        ar1, t0, Prior::jeffreys_times(constant_field(1.0), "one"));
    CHECK(b.diff_vs_jeffreys == 0.0);
}

TEST_CASE("principal risk difference equals the f_part drop") {
    SpectralModel m11(1, 1);
    RngStream rng(11, 0);
    int done = 0;
    while (done < 5) {
        Eigen::VectorXd c(2);
        c[0] = 1.6 * rng.uniform() - 0.8;
        c[1] = 1.6 * rng.uniform() - 0.8;
        if (std::abs(c[0] + c[1]) < 0.15 || !m11.is_valid(c)) continue;
        Theta t0 = m11.validate(c);
        ScalarField tilt;
        tilt.value = [](const Eigen::VectorXd& x) {
            return std::exp(0.3 * x[0] - 0.2 * x[1]);
        };
        tilt.grad = [](const Eigen::VectorXd& x) {
            Eigen::VectorXd g(2);
            g << 0.3, -0.2;
            return (g * std::exp(0.3 * x[0] - 0.2 * x[1])).eval();
        };
        const Prior ph = Prior::jeffreys_times(tilt, "tilt");
        const AsymptoticRisk rj = asymptotic_risk(m11, t0, Prior::jeffreys());
        const AsymptoticRisk rh = asymptotic_risk(m11, t0, ph);
        const double lhs = rh.diff_vs_jeffreys;
        const double rhs = rj.f_part - rh.f_part;
        CHECK(std::abs(lhs - rhs) <= 1e-4 * std::max(1.0, std::abs(lhs)));
        ++done;
    }
}

TEST_CASE("verified superharmonic factors give non-negative differences") {
    SpectralModel ar1(1, 0);
    const Prior ph = Prior::jeffreys_times(arcsine_h(), "arcsine");
    for (int i = 0; i < 20; ++i) {
        const double a = -0.855 + 0.09 * i;
        Theta t0 = ar1.validate(vec({a}));
        AsymptoticRisk r = asymptotic_risk(ar1, t0, ph);
        CHECK(r.diff_vs_jeffreys > 0.0);
        CHECK(r.grad_term >= 0.0);
        // harmonic factor: the Laplacian term contributes ~0
        CHECK(std::abs(r.laplace_term) < 1e-6);
        // closed form 1/(2 h(a)^2)
        const double hv = 2.0 - std::asin(a);
        CHECK(r.diff_vs_jeffreys ==
              doctest::Approx(0.5 / (hv * hv)).epsilon(1e-5));
    }
}

TEST_CASE("mc_risk is deterministic and scales like k/2n") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    RiskOptions opt;
    opt.omega_nodes = 128;
    opt.threads = 2;
    RiskReport a =
        mc_risk(ar1, t0, Prior::jeffreys(), 128, 200, 31337, Estimator::expansion, opt);
    RiskReport b =
        mc_risk(ar1, t0, Prior::jeffreys(), 128, 200, 31337, Estimator::expansion, opt);
    CHECK(a.mean == b.mean);
    CHECK(a.se == b.se);
    CHECK(a.fit_failures == 0);
    // n * risk near k/2 = 0.5
    CHECK(128.0 * a.mean > 0.3);
    CHECK(128.0 * a.mean < 0.9);
}

TEST_CASE("expansion and oracle risk estimates agree within noise") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    RiskOptions opt;
    opt.omega_nodes = 64;
    opt.threads = 2;
    RiskReport e =
        mc_risk(ar1, t0, Prior::jeffreys(), 128, 60, 4, Estimator::expansion, opt);
    RiskReport o =
        mc_risk(ar1, t0, Prior::jeffreys(), 128, 60, 4, Estimator::oracle, opt);
    const double band = 3.0 * std::sqrt(e.se * e.se + o.se * o.se);
    CHECK(std::abs(e.mean - o.mean) < band + 1e-6);
}

TEST_CASE("paired dominance bookkeeping") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.4}));
    std::vector<Eigen::VectorXd> grid;
    for (int i = 0; i < 9; ++i) grid.push_back(vec({-0.8 + 0.2 * i}));
    DominanceOptions opt;
    opt.reps = 150;
    opt.risk.omega_nodes = 128;
    opt.risk.threads = 2;
    DominanceResult res = dominance_experiment(ar1, t0, arcsine_h(), "arcsine",
                                               grid, {64, 128}, 17, opt);
    CHECK(res.check.pass);
    REQUIRE(res.cells.size() == 2);
    for (const DominanceCell& c : res.cells) {
        CHECK(c.completed == 150);
        CHECK(c.diff_se < c.unpaired_se); // variance reduction from pairing
        CHECK(c.asymptote > 0.0);
    }

    // the null factor produces exactly zero paired differences
    DominanceResult null_res = dominance_experiment(
        ar1, t0, constant_field(1.0), "one", grid, {64}, 17, opt);
    CHECK(null_res.cells[0].diff == 0.0);
    CHECK(null_res.cells[0].t_stat == 0.0);
}

TEST_CASE("a cell with pervasive fit failures aborts") {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec({0.5}));
    RiskOptions opt;
    opt.omega_nodes = 64;
    opt.threads = 2;
    opt.fit.max_iterations = 0;
    opt.fit.max_restarts = 0;
    CHECK_THROWS_AS(
        mc_risk(ar1, t0, Prior::jeffreys(), 64, 20, 1, Estimator::expansion, opt),
        TooManyFitFailures);
}
