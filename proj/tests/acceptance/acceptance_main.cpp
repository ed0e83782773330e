// Acceptance suite: each criterion prints one pass/fail line with the
// measured quantities and thresholds pinned in code. Run everything or a
// single criterion with --criterion N. Exit 0 iff every selected criterion
// passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "splab/errors.hpp"
#include "splab/experiment.hpp"
#include "splab/likelihood.hpp"
#include "splab/posterior.hpp"
#include "splab/risk.hpp"
#include "splab/stats.hpp"

using namespace splab;
namespace fs = std::filesystem;

namespace {

int g_threads = 0;

Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }

double slope_loglog(const std::vector<double>& n, const std::vector<double>& e) {
    const int m = static_cast<int>(n.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double x = std::log(n[i]), y = std::log(e[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// 1. Trace-vs-integral: |J'_11(n) - g_11| decays with empirical order >= 0.9.
bool criterion1() {
    SpectralModel ar1(1, 0);
    Theta t = ar1.validate(vec1(0.5));
    const double g = spectral_metric_at(ar1, t)(0, 0);
    std::vector<double> ns{32, 64, 128, 256}, errs;
    for (double n : ns)
        errs.push_back(
            std::abs(trace_quantities(ar1, t, static_cast<int>(n)).Jp(0, 0) - g));
    const double order = -slope_loglog(ns, errs);
    std::printf("  J'_11 -> g_11 = %.9f, errors %.3e .. %.3e, order %.3f\n", g,
                errs.front(), errs.back(), order);
    return order >= 0.9;
}

// 2. m_ij = -J'_ij exactly; third-order m-quantities approach the geometric
//    limits with O(1/n) residuals on AR(1) and MA(1).
bool criterion2() {
    bool ok = true;
    for (int which = 0; which < 2; ++which) {
        SpectralModel model = which == 0 ? SpectralModel(1, 0)
                                         : SpectralModel(0, 1);
        Theta t = model.validate(vec1(which == 0 ? 0.5 : 0.4));
        GeometryTensors gt = geometry_at(model, t);
        const double m3_lim = -(3.0 * gt.eG(0, 0, 0) + gt.T(0, 0, 0));
        const double nm21_lim = gt.eG(0, 0, 0);
        std::vector<double> ns{32, 64, 128, 256}, e3, e21;
        for (double n : ns) {
            TraceQuantities tq = trace_quantities(model, t, static_cast<int>(n));
            ExpectedDerivs ed = expected_derivatives(tq);
            if ((ed.m2 + tq.Jp).cwiseAbs().maxCoeff() != 0.0) {
                std::printf("  m_ij != -J'_ij\n");
                ok = false;
            }
            e3.push_back(std::abs(ed.m3(0, 0, 0) - m3_lim));
            e21.push_back(std::abs(ed.nm21(0, 0, 0) - nm21_lim));
        }
        const double o3 = -slope_loglog(ns, e3);
        const double o21 = -slope_loglog(ns, e21);
        std::printf("  %s: m_ijk order %.3f, n m_ij,k order %.3f\n",
                    which == 0 ? "AR(1)" : "MA(1)", o3, o21);
        ok = ok && o3 >= 0.9 && o21 >= 0.9;
    }
    return ok;
}

// 3. Isserlis fourth moments match Monte Carlo within 5 SE (1e6 draws, k=3).
bool criterion3() {
    const int k = 3, n = 4;
    RngStream seedr(2718, 0);
    Eigen::MatrixXd R(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) R(i, j) = seedr.normal();
    const Eigen::MatrixXd J =
        R * R.transpose() + 2.0 * Eigen::MatrixXd::Identity(k, k);
    const GaussianMoments gm = gaussian_moments(J, n);
    const Eigen::MatrixXd cov = gm.I2;
    const Eigen::MatrixXd A = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

    const long M = 1000000;
    std::vector<double> sum(81, 0.0), sumsq(81, 0.0);
    RngStream rng(314159, 1);
    for (long d = 0; d < M; ++d) {
        Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
        Eigen::Vector3d y = A * z;
        int idx = 0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) {
                        const double p = y[i] * y[j] * y[a] * y[b];
                        sum[idx] += p;
                        sumsq[idx] += p * p;
                        ++idx;
                    }
    }
    double worst = 0.0;
    int idx = 0;
    bool ok = true;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    const double mean = sum[idx] / M;
                    const double var = sumsq[idx] / M - mean * mean;
                    const double se = std::sqrt(var / M);
                    const double dev =
                        std::abs(mean - gm.I4(i, j, a, b)) / se;
                    worst = std::max(worst, dev);
                    if (dev > 5.0) ok = false;
                    ++idx;
                }
    std::printf("  worst |MC - I4| deviation: %.2f SE over 81 components\n",
                worst);
    return ok;
}

// 4. MLE bias: MC mean within 3 SE of the finite-n formula; routes agree.
bool criterion4() {
    SpectralModel ar1(1, 0);
    Theta t0 = ar1.validate(vec1(0.5));
    const int n = 128, reps = 2000;
    std::vector<double> delta(reps, 0.0);
    std::vector<int> status(reps, -1);
    parallel_for(reps, g_threads, [&](long r) {
        RngStream rng(987654321, static_cast<uint64_t>(r));
        const Eigen::VectorXd x = sample_path(ar1, t0, n, rng);
        try {
            delta[r] = fit_mle(ar1, x, t0).theta_hat.coords[0] - 0.5;
            status[r] = 0;
        } catch (const splab::Error&) {
            status[r] = 1;
        }
    });
    std::vector<double> good;
    for (int r = 0; r < reps; ++r)
        if (status[r] == 0) good.push_back(delta[r]);
    const MeanSe ms = mean_se(good);
    const BiasResult br = mle_bias(ar1, t0, n);
    const double dev = std::abs(ms.mean - br.finite_n[0]) / ms.se;
    const double route_gap =
        std::abs(br.finite_n[0] - br.geometric[0]) / std::abs(br.geometric[0]);
    std::printf("  MC bias %.5e (se %.2e), formula %.5e (geo %.5e); "
                "deviation %.2f SE, route gap %.4f (<= %.4f)\n",
                ms.mean, ms.se, br.finite_n[0], br.geometric[0], dev,
                route_gap, 10.0 / n);
    return dev <= 3.0 && route_gap <= 10.0 / n;
}

// 5. Expansion accuracy: log-log slope of mean max |expansion - oracle| vs n
//    at most -1.3 over n in {64,128,256,512}, 100 replications per n.
bool criterion5() {
    ExperimentConfig cfg = parse_config(R"({
      "seed": 515151,
      "omega_nodes": 256,
      "jobs": [
        {"kind": "expansion-vs-oracle", "name": "exp_oracle",
         "model": {"p": 1, "q": 0}, "theta0": [0.5],
         "n_grid": [64, 128, 256, 512], "reps": 100}
      ]})");
    cfg.threads = g_threads;
    const ReportBundle bundle = run_experiment(cfg);
    const double slope = bundle.jobs[0].summary["slope"].get<double>();
    std::printf("  fitted slope %.3f (threshold -1.3)\n", slope);
    return bundle.jobs[0].pass;
}

// 6. The principal risk-difference term must equal the drop in the
//    f-dependent asymptotic part, at 20 random ARMA(1,1) points.
bool criterion6() {
    SpectralModel m11(1, 1);
    RngStream rng(606060, 0);
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
    const Prior pj = Prior::jeffreys();
    double worst = 0.0;
    int done = 0;
    while (done < 20) {
        Eigen::VectorXd c(2);
        c[0] = 1.6 * rng.uniform() - 0.8;
        c[1] = 1.6 * rng.uniform() - 0.8;
        if (std::abs(c[0] + c[1]) < 0.15 || !m11.is_valid(c)) continue;
        Theta t0 = m11.validate(c);
        const double lhs = asymptotic_risk(m11, t0, ph).diff_vs_jeffreys;
        const double rhs = asymptotic_risk(m11, t0, pj).f_part -
                           asymptotic_risk(m11, t0, ph).f_part;
        worst = std::max(worst,
                         std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        ++done;
    }
    std::printf("  worst relative disagreement %.3e (tolerance 1e-4)\n", worst);
    return worst <= 1e-4;
}

// 7. Dominance headline: AR(2), grid-verified h = 1 + a2, paired MC with
//    t > 2 at each n and n^2-difference consistent with the asymptote;
//    null control |t| < 3.
bool criterion7() {
    ExperimentConfig cfg = parse_config(R"({
      "seed": 70707,
      "omega_nodes": 256,
      "jobs": [
        {"kind": "dominance-experiment", "name": "dominance",
         "model": {"p": 2, "q": 0}, "theta0": [0.3, 0.2], "h": "one_plus_a2",
         "grid": {"lo": [-1.7, -0.9], "hi": [1.7, 0.9], "count": [13, 13],
                  "clearance": 0.1},
         "n_grid": [64, 128, 256], "reps": 0, "pilot_reps": 200,
         "target_t": 4.0, "min_reps": 400, "max_reps": 10000,
         "oracle_audit_reps": 8},
        {"kind": "dominance-experiment", "name": "null_control",
         "model": {"p": 2, "q": 0}, "theta0": [0.3, 0.2], "h": "one",
         "grid": {"lo": [-1.7, -0.9], "hi": [1.7, 0.9], "count": [13, 13],
                  "clearance": 0.1},
         "n_grid": [64, 128, 256], "reps": 400}
      ]})");
    cfg.threads = g_threads;
    const ReportBundle bundle = run_experiment(cfg);
    bool ok = true;
    for (const JobResult& job : bundle.jobs) {
        std::printf("  %s: %s\n", job.name.c_str(), job.note.c_str());
        for (const auto& cell : job.summary["cells"]) {
            std::printf(
                "    n=%3d reps=%5d t=%7.2f n2_diff=%.4f asym=%.4f%s\n",
                cell["n"].get<int>(), cell["reps"].get<int>(),
                cell["t"].get<double>(), cell["n2_diff"].get<double>(),
                cell["asymptote"].get<double>(),
                cell.contains("audit_max_rel_diff")
                    ? ("  audit_rel_diff=" +
                       std::to_string(cell["audit_max_rel_diff"].get<double>()))
                          .c_str()
                    : "");
        }
        ok = ok && job.pass;
    }
    return ok;
}

// 8. Unit oracles at pinned tolerances.
bool criterion8() {
    bool ok = true;
    Eigen::VectorXd one = Eigen::VectorXd::Constant(512, 1.0);
    Eigen::VectorXd two = Eigen::VectorXd::Constant(512, 2.0);
    const double kl = kl_divergence(one, two);
    const double kl_true = 0.5 * std::log(2.0) - 0.25; // = 0.0965736 (7 digits)
    std::printf("  KL(1||2) = %.10f vs %.10f\n", kl, kl_true);
    ok = ok && std::abs(kl - kl_true) <= 1e-9;

    SpectralModel cs = SpectralModel::constant_spectrum();
    const double gw = geometry_at(cs, cs.validate(vec1(1.0))).g(0, 0);
    std::printf("  g(white noise) = %.12f\n", gw);
    ok = ok && std::abs(gw - 0.5) <= 1e-10;

    SpectralModel ar1(1, 0);
    const double ga = geometry_at(ar1, ar1.validate(vec1(0.5))).g(0, 0);
    std::printf("  g_aa(AR(1), 0.5) = %.10f\n", ga);
    ok = ok && std::abs(ga - 4.0 / 3.0) <= 1e-8;

    ScalarField lg;
    lg.value = [](const Eigen::VectorXd& x) { return std::log(x[0]); };
    const double lap =
        laplace_beltrami(lg, vec1(1.0), spectral_metric_field(cs));
    std::printf("  Lap(log theta) = %.3e\n", lap);
    ok = ok && std::abs(lap) <= 1e-6;
    return ok;
}

// 9. Determinism: identical configs give byte-identical CSV payloads.
bool criterion9() {
    const std::string text = R"({
      "seed": 909090,
      "omega_nodes": 128,
      "jobs": [
        {"kind": "geometry-table", "name": "geo", "model": {"p": 1, "q": 1},
         "theta_points": [[0.5, 0.3], [0.2, -0.4]]},
        {"kind": "superharmonic-check", "name": "check",
         "model": {"p": 2, "q": 0}, "h": "one_plus_a2",
         "grid": {"lo": [-1.5, -0.8], "hi": [1.5, 0.8], "count": [7, 7],
                  "clearance": 0.1}},
        {"kind": "bias-check", "name": "bias", "model": {"p": 1, "q": 0},
         "theta0": [0.5], "n": 64, "reps": 200},
        {"kind": "dominance-experiment", "name": "dom",
         "model": {"p": 1, "q": 0}, "theta0": [0.4], "h": "arcsine",
         "grid": {"lo": [-0.9], "hi": [0.9], "count": [9], "clearance": 0.05},
         "n_grid": [64], "reps": 100}
      ]})";
    ExperimentConfig cfg = parse_config(text);
    cfg.threads = g_threads;
    const ReportBundle b1 = run_experiment(cfg);
    cfg.threads = 1;
    const ReportBundle b2 = run_experiment(cfg);
    bool ok = b1.hash == b2.hash;
    for (size_t i = 0; i < b1.jobs.size(); ++i) {
        if (b1.jobs[i].csv != b2.jobs[i].csv) {
            std::printf("  CSV payload differs for %s\n",
                        b1.jobs[i].name.c_str());
            ok = false;
        }
        if (b1.jobs[i].summary.dump() != b2.jobs[i].summary.dump()) {
            std::printf("  summary differs for %s\n", b1.jobs[i].name.c_str());
            ok = false;
        }
    }
    std::printf("  %zu jobs byte-compared across thread counts\n",
                b1.jobs.size());
    return ok;
}

struct Criterion {
    int id;
    const char* label;
    bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "trace-vs-integral convergence of J' to g", criterion1},
    {2, "expected-derivative identities and limits", criterion2},
    {3, "Isserlis fourth moments vs Monte Carlo", criterion3},
    {4, "first-order MLE bias formula vs Monte Carlo", criterion4},
    {5, "expansion-vs-oracle accuracy order", criterion5},
    {6, "risk-difference formula consistency", criterion6},
    {7, "superharmonic dominance with null control", criterion7},
    {8, "KL and geometry unit oracles", criterion8},
    {9, "byte-identical reports across runs", criterion9},
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
            g_threads = std::atoi(argv[++i]);
    }
    bool all_ok = true;
    for (const Criterion& c : kCriteria) {
        if (only != 0 && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        std::string err;
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            err = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n",
                    ok ? "PASS" : "FAIL", c.id, c.label, secs,
                    err.empty() ? "" : " error: ", err.c_str());
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
