#include "splab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "splab/errors.hpp"
#include "splab/likelihood.hpp"
#include "splab/posterior.hpp"
#include "splab/stats.hpp"

namespace splab {

using nlohmann::json;

namespace {

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& path) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigInvalid(path + "." + item.key() +
                                " is not a recognized key");
    }
}

template <class T>
T get_or(const json& j, const char* key, const T& dflt) {
    if (!j.contains(key)) return dflt;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigInvalid(std::string("invalid value for key ") + key);
    }
}

template <class T>
T require(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key))
        throw ConfigInvalid(path + "." + key + " is required");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigInvalid(path + "." + key + " has the wrong type");
    }
}

ModelConfig parse_model(const json& j, const std::string& path) {
    expect_keys(j, {"p", "q", "sigma", "sigma2", "root_margin"}, path);
    ModelConfig mc;
    mc.p = get_or(j, "p", 0);
    mc.q = get_or(j, "q", 0);
    mc.sigma = get_or<std::string>(j, "sigma", "fixed");
    mc.sigma2 = get_or(j, "sigma2", 1.0);
    mc.root_margin = get_or(j, "root_margin", 1e-6);
    if (mc.sigma != "fixed" && mc.sigma != "log_variance" &&
        mc.sigma != "spectrum_level")
        throw ConfigInvalid(path + ".sigma must be fixed, log_variance or "
                            "spectrum_level");
    return mc;
}

GridConfig parse_grid(const json& j, const std::string& path) {
    expect_keys(j, {"lo", "hi", "count", "clearance"}, path);
    GridConfig g;
    g.lo = require<std::vector<double>>(j, "lo", path);
    g.hi = require<std::vector<double>>(j, "hi", path);
    g.count = require<std::vector<int>>(j, "count", path);
    g.clearance = get_or(j, "clearance", 0.05);
    if (g.lo.size() != g.hi.size() || g.lo.size() != g.count.size())
        throw ConfigInvalid(path + ".lo/hi/count must have equal lengths");
    for (int c : g.count)
        if (c < 2) throw ConfigInvalid(path + ".count entries must be >= 2");
    return g;
}

json model_to_json(const ModelConfig& mc) {
    json j;
    j["p"] = mc.p;
    j["q"] = mc.q;
    j["sigma"] = mc.sigma;
    j["sigma2"] = mc.sigma2;
    j["root_margin"] = mc.root_margin;
    return j;
}

json grid_to_json(const GridConfig& g) {
    json j;
    j["lo"] = g.lo;
    j["hi"] = g.hi;
    j["count"] = g.count;
    j["clearance"] = g.clearance;
    return j;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

uint64_t job_seed(const ExperimentConfig& cfg, const JobConfig& job) {
    return mix64(cfg.seed ^ fnv1a64(job.name));
}

Theta theta_from(const SpectralModel& model, const std::vector<double>& v,
                 const std::string& path) {
    if (static_cast<int>(v.size()) != model.dim())
        throw ConfigInvalid(path + ".theta0 must have " +
                            std::to_string(model.dim()) + " coordinates");
    Eigen::VectorXd coords =
        Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    return model.validate(coords);
}

// ---------------------------------------------------------------- jobs

JobResult run_geometry_table(const ExperimentConfig& cfg, const JobConfig& job,
                             const std::string& hash) {
    const SpectralModel model = make_model(job.model);
    JobResult res;
    res.name = job.name;
    res.kind = job.kind;
    std::string csv =
        "config_hash,theta_index,tensor,i,j,k,l,value\n";
    auto row = [&](int ti, const char* tensor, int i, int j, int k, int l,
                   double v) {
        csv += hash + "," + std::to_string(ti) + "," + tensor + "," +
               std::to_string(i) + "," + std::to_string(j) + "," +
               std::to_string(k) + "," + std::to_string(l) + "," + fmt(v) +
               "\n";
    };
    int ti = 0;
    for (const auto& pt : job.theta_points) {
        const Theta t = theta_from(model, pt, "jobs." + job.name);
        const GeometryTensors gt = geometry_at(model, t, cfg.quad);
        const int k = model.dim();
        for (int i = 0; i < k; ++i) row(ti, "theta", i, -1, -1, -1, t.coords[i]);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) row(ti, "g", i, j, -1, -1, gt.g(i, j));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                row(ti, "g_inv", i, j, -1, -1, gt.g_inv(i, j));
        for (int i = 0; i < k; ++i) row(ti, "T1", i, -1, -1, -1, gt.T1[i]);
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    row(ti, "Gm", a, i, j, -1, gt.Gm(a, i, j));
                    row(ti, "eG", a, i, j, -1, gt.eG(a, i, j));
                    row(ti, "T", a, i, j, -1, gt.T(a, i, j));
                }
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    for (int l = 0; l < k; ++l) {
                        row(ti, "M", a, i, j, l, gt.M(a, i, j, l));
                        row(ti, "N", a, i, j, l, gt.N(a, i, j, l));
                        row(ti, "L", a, i, j, l, gt.L(a, i, j, l));
                    }
        ++ti;
    }
    res.csv = csv;
    res.summary["points"] = ti;
    res.summary["pass"] = true;
    res.note = std::to_string(ti) + " theta points";
    return res;
}

JobResult run_superharmonic_check(const ExperimentConfig& cfg,
                                  const JobConfig& job,
                                  const std::string& hash) {
    const SpectralModel model = make_model(job.model);
    const ScalarField h = named_h_field(job.h);
    const std::vector<Eigen::VectorXd> grid = build_grid(model, job.grid);
    if (grid.empty())
        throw ConfigInvalid("jobs." + job.name +
                            ".grid produced no interior nodes");
    const MetricField metric = spectral_metric_field(model, cfg.quad);

    JobResult res;
    res.name = job.name;
    res.kind = job.kind;
    const int k = model.dim();
    std::string csv = "config_hash,node";
    for (int i = 0; i < k; ++i) csv += ",c" + std::to_string(i);
    csv += ",h,laplacian\n";
    std::vector<double> laps(grid.size());
    parallel_for(static_cast<long>(grid.size()), cfg.threads, [&](long i) {
        laps[i] = laplace_beltrami(h, grid[i], metric, cfg.fd);
    });
    for (size_t i = 0; i < grid.size(); ++i) {
        csv += hash + "," + std::to_string(i);
        for (int c = 0; c < k; ++c) csv += "," + fmt(grid[i][c]);
        csv += "," + fmt(h.value(grid[i])) + "," + fmt(laps[i]) + "\n";
    }
    const SuperharmonicReport rep =
        check_superharmonic(h, grid, metric, cfg.tol_super, cfg.fd);
    res.csv = csv;
    res.pass = rep.pass;
    res.summary["h"] = job.h;
    res.summary["pass"] = rep.pass;
    res.summary["positive"] = rep.positive;
    res.summary["min_h"] = rep.min_h;
    res.summary["max_laplacian"] = rep.max_laplacian;
    res.summary["tol"] = rep.tol;
    res.summary["nodes"] = rep.nodes_checked;
    if (rep.worst_node.size() > 0) {
        std::vector<double> wn(rep.worst_node.data(),
                               rep.worst_node.data() + rep.worst_node.size());
        res.summary["worst_node"] = wn;
    }
    res.note = rep.pass ? "superharmonic on grid" : "check failed";
    return res;
}

JobResult run_bias_check(const ExperimentConfig& cfg, const JobConfig& job,
                         const std::string& hash) {
    const SpectralModel model = make_model(job.model);
    const Theta theta0 = theta_from(model, job.theta0, "jobs." + job.name);
    const int k = model.dim();
    const int reps = job.reps > 0 ? job.reps : 2000;
    const uint64_t seed = job_seed(cfg, job);

    std::vector<Eigen::VectorXd> deltas(reps);
    std::vector<int> status(reps, -1);
    FitOptions fopt;
    parallel_for(reps, cfg.threads, [&](long r) {
        RngStream rng(seed, static_cast<uint64_t>(r));
        const Eigen::VectorXd x = sample_path(model, theta0, job.n, rng);
        try {
            const FitResult fit = fit_mle(model, x, theta0, fopt);
            deltas[r] = fit.theta_hat.coords - theta0.coords;
            status[r] = 0;
        } catch (const DidNotConverge&) {
            status[r] = 1;
        } catch (const HessianNotPD&) {
            status[r] = 1;
        } catch (const NotPositiveDefinite&) {
            status[r] = 1;
        }
    });
    const BiasResult formula = mle_bias(model, theta0, job.n, cfg.quad);

    JobResult res;
    res.name = job.name;
    res.kind = job.kind;
    std::string csv =
        "config_hash,n,reps,coord,mc_mean,mc_se,bias_finite_n,bias_geometric,"
        "seed\n";
    bool pass = true;
    int failures = 0;
    json coords = json::array();
    for (int i = 0; i < k; ++i) {
        std::vector<double> d;
        d.reserve(reps);
        failures = 0;
        for (int r = 0; r < reps; ++r) {
            if (status[r] == 0)
                d.push_back(deltas[r][i]);
            else
                ++failures;
        }
        const MeanSe ms = mean_se(d);
        const bool ok = std::abs(ms.mean - formula.finite_n[i]) <= 3.0 * ms.se;
        pass = pass && ok;
        csv += hash + "," + std::to_string(job.n) + "," + std::to_string(reps) +
               "," + std::to_string(i) + "," + fmt(ms.mean) + "," + fmt(ms.se) +
               "," + fmt(formula.finite_n[i]) + "," + fmt(formula.geometric[i]) + "," +
               std::to_string(seed) + "\n";
        json cj;
        cj["coord"] = i;
        cj["mc_mean"] = ms.mean;
        cj["mc_se"] = ms.se;
        cj["bias_finite_n"] = formula.finite_n[i];
        cj["bias_geometric"] = formula.geometric[i];
        cj["within_3se"] = ok;
        coords.push_back(cj);
    }
    res.csv = csv;
    res.pass = pass;
    res.summary["pass"] = pass;
    res.summary["n"] = job.n;
    res.summary["reps"] = reps;
    res.summary["fit_failures"] = failures;
    res.summary["coords"] = coords;
    res.note = pass ? "bias within 3 SE of formula" : "bias outside 3 SE";
    return res;
}

std::string dominance_csv(const std::string& hash,
                          const std::vector<DominanceCell>& cells) {
    std::string csv =
        "config_hash,n,reps,risk_jeffreys,risk_h,diff,diff_se,n2_diff,"
        "asymptote,floored_count,seed\n";
    for (const DominanceCell& c : cells) {
        csv += hash + "," + std::to_string(c.n) + "," + std::to_string(c.reps) +
               "," + fmt(c.risk_jeffreys) + "," + fmt(c.risk_h) + "," +
               fmt(c.diff) + "," + fmt(c.diff_se) + "," + fmt(c.n2_diff) + "," +
               fmt(c.asymptote) + "," +
               std::to_string(c.floored_jeffreys + c.floored_h) + "," +
               std::to_string(c.cell_seed) + "\n";
    }
    return csv;
}

std::string dominance_svg(const DominanceResult& result);
std::string slope_svg(const std::vector<double>& ns,
                      const std::vector<double>& means, double slope);

JobResult run_dominance(const ExperimentConfig& cfg, const JobConfig& job,
                        const std::string& hash) {
    const SpectralModel model = make_model(job.model);
    const Theta theta0 = theta_from(model, job.theta0, "jobs." + job.name);
    const ScalarField h = named_h_field(job.h);
    const std::vector<Eigen::VectorXd> grid = build_grid(model, job.grid);
    if (grid.empty())
        throw ConfigInvalid("jobs." + job.name +
                            ".grid produced no interior nodes");
    if (job.n_grid.empty())
        throw ConfigInvalid("jobs." + job.name + ".n_grid must not be empty");

    DominanceOptions opt;
    opt.risk.quad = cfg.quad;
    opt.risk.fd = cfg.fd;
    opt.risk.omega_nodes = cfg.omega_nodes;
    opt.risk.threads = cfg.threads;
    opt.reps = job.reps;
    opt.pilot_reps = job.pilot_reps;
    opt.target_t = job.target_t;
    opt.min_reps = job.min_reps;
    opt.max_reps = job.max_reps;
    opt.oracle_audit_reps = job.oracle_audit_reps;
    opt.tol_super = cfg.tol_super;

    const DominanceResult result = dominance_experiment(
        model, theta0, h, job.h, grid, job.n_grid, job_seed(cfg, job), opt);

    JobResult res;
    res.name = job.name;
    res.kind = job.kind;
    res.csv = dominance_csv(hash, result.cells);
    res.svg = dominance_svg(result);

    json cells = json::array();
    bool pass = result.check.pass;
    std::string note;
    if (!result.check.pass) {
        note = "superharmonic check failed";
    } else {
        const bool null_control =
            !result.cells.empty() && result.cells.front().asymptote == 0.0;
        for (const DominanceCell& c : result.cells) {
            json cj;
            cj["n"] = c.n;
            cj["reps"] = c.reps;
            cj["completed"] = c.completed;
            cj["t"] = c.t_stat;
            cj["diff"] = c.diff;
            cj["diff_se"] = c.diff_se;
            cj["unpaired_se"] = c.unpaired_se;
            cj["n2_diff"] = c.n2_diff;
            cj["asymptote"] = c.asymptote;
            cj["fit_failures"] = c.fit_failures;
            cj["paired_se_below_unpaired"] = c.diff_se < c.unpaired_se;
            if (c.audit_reps > 0) {
                cj["audit_reps"] = c.audit_reps;
                cj["audit_max_rel_diff"] = c.audit_max_rel_diff;
            }
            cells.push_back(cj);
            if (null_control) {
                if (std::abs(c.t_stat) >= 3.0) pass = false;
            } else {
                if (c.t_stat <= 2.0) pass = false;
            }
        }
        if (!null_control && !result.cells.empty()) {
            // Asymptote consistency at the largest n: the n^2-scaled paired
            // difference must sit inside MC noise plus the O(n^-1/2)
            // expansion remainder band.
            const DominanceCell& last = result.cells.back();
            const double band =
                3.0 * last.n2_diff / std::max(last.t_stat, 1e-12) +
                8.0 * std::abs(last.asymptote) / std::sqrt(double(last.n));
            if (std::abs(last.n2_diff - last.asymptote) > band) pass = false;
            note = pass ? "dominance positive and consistent with asymptote"
                        : "dominance verdict failed";
        } else if (null_control) {
            note = pass ? "null control consistent with zero"
                        : "null control rejected zero";
        }
    }
    res.pass = pass;
    res.summary["pass"] = pass;
    res.summary["h"] = job.h;
    res.summary["superharmonic"] = {
        {"pass", result.check.pass},
        {"min_h", result.check.min_h},
        {"max_laplacian", result.check.max_laplacian},
        {"nodes", result.check.nodes_checked},
        {"tol", result.check.tol},
    };
    res.summary["cells"] = cells;
    res.note = note;
    return res;
}

JobResult run_expansion_vs_oracle(const ExperimentConfig& cfg,
                                  const JobConfig& job,
                                  const std::string& hash) {
    const SpectralModel model = make_model(job.model);
    if (model.dim() > 3)
        throw ConfigInvalid("jobs." + job.name +
                            ": oracle comparison needs dim <= 3");
    const Theta theta0 = theta_from(model, job.theta0, "jobs." + job.name);
    if (job.n_grid.empty())
        throw ConfigInvalid("jobs." + job.name + ".n_grid must not be empty");
    const int reps = job.reps > 0 ? job.reps : 100;
    const uint64_t seed = job_seed(cfg, job);
    const Prior prior = Prior::jeffreys();
    const QuadratureGrid wgrid = periodic_grid(cfg.omega_nodes);

    JobResult res;
    res.name = job.name;
    res.kind = job.kind;
    std::string csv = "config_hash,n,reps,mean_max_abs_diff,se,seed\n";
    std::vector<double> lg_n, lg_mean, means;
    json cells = json::array();
    for (const int n : job.n_grid) {
        const uint64_t cseed = mix64(seed ^ (static_cast<uint64_t>(n) * kGolden));
        std::vector<double> maxdiff(reps, 0.0);
        std::vector<int> status(reps, -1);
        parallel_for(reps, cfg.threads, [&](long r) {
            RngStream rng(cseed, static_cast<uint64_t>(r));
            const Eigen::VectorXd x = sample_path(model, theta0, n, rng);
            FitResult fit;
            try {
                fit = fit_mle(model, x, theta0, FitOptions{});
            } catch (const DidNotConverge&) {
                status[r] = 1;
                return;
            } catch (const HessianNotPD&) {
                status[r] = 1;
                return;
            }
            const BayesSpectralEstimate em = bayes_spectral_expansion(
                model, x, fit, prior, wgrid.nodes, ExpansionForm::moment,
                cfg.quad, cfg.fd);
            const OracleEstimate oe = bayes_spectral_oracle(
                model, x, fit, prior, wgrid.nodes, OracleConfig{}, cfg.quad);
            maxdiff[r] =
                (em.values - oe.estimate.values).cwiseAbs().maxCoeff();
            status[r] = 0;
        });
        std::vector<double> ok;
        int failures = 0;
        for (int r = 0; r < reps; ++r) {
            if (status[r] == 0)
                ok.push_back(maxdiff[r]);
            else
                ++failures;
        }
        const MeanSe ms = mean_se(ok);
        csv += hash + "," + std::to_string(n) + "," + std::to_string(reps) +
               "," + fmt(ms.mean) + "," + fmt(ms.se) + "," +
               std::to_string(cseed) + "\n";
        lg_n.push_back(std::log(static_cast<double>(n)));
        lg_mean.push_back(std::log(ms.mean));
        means.push_back(ms.mean);
        json cj;
        cj["n"] = n;
        cj["mean_max_abs_diff"] = ms.mean;
        cj["se"] = ms.se;
        cj["fit_failures"] = failures;
        cells.push_back(cj);
    }
    // OLS slope of log mean vs log n.
    const int m = static_cast<int>(lg_n.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sx += lg_n[i];
        sy += lg_mean[i];
        sxx += lg_n[i] * lg_n[i];
        sxy += lg_n[i] * lg_mean[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const bool pass = m < 2 || slope <= -1.3;
    std::vector<double> ns(job.n_grid.begin(), job.n_grid.end());
    res.csv = csv;
    res.svg = slope_svg(ns, means, slope);
    res.pass = pass;
    res.summary["pass"] = pass;
    res.summary["slope"] = slope;
    res.summary["cells"] = cells;
    res.note = "log-log slope " + fmt(slope);
    return res;
}

// ------------------------------------------------------------- plotting

struct SvgSeries {
    std::vector<double> x, y, yerr;
    const char* color = "#1f77b4";
    std::string label;
};

std::string svg_loglog(const std::string& title,
                       const std::vector<SvgSeries>& series,
                       const std::function<double(double)>& overlay,
                       const std::string& overlay_label) {
    const int W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            const double lo = std::max(s.y[i] - s.yerr[i], s.y[i] * 0.3);
            ymin = std::min(ymin, lo);
            ymax = std::max(ymax, s.y[i] + s.yerr[i]);
        }
    if (overlay) {
        ymin = std::min(ymin, overlay(xmax));
        ymax = std::max(ymax, overlay(xmin));
    }
    xmin = std::log(xmin / 1.2);
    xmax = std::log(xmax * 1.2);
    ymin = std::log(std::max(ymin / 1.5, 1e-300));
    ymax = std::log(ymax * 1.5);
    auto X = [&](double v) {
        return ml + (std::log(v) - xmin) / (xmax - xmin) * (W - ml - mr);
    };
    auto Y = [&](double v) {
        return H - mb -
               (std::log(std::max(v, 1e-300)) - ymin) / (ymax - ymin) *
                   (H - mt - mb);
    };
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(W) + "\" height=\"" + std::to_string(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + std::to_string(W / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title +
         "</text>\n";
    s += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" +
         std::to_string(H - mb) + "\" x2=\"" + std::to_string(W - mr) +
         "\" y2=\"" + std::to_string(H - mb) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) +
         "\" x2=\"" + std::to_string(ml) + "\" y2=\"" + std::to_string(H - mb) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"" +
         std::to_string(H - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">n (log scale)</text>\n";
    if (overlay) {
        std::string pts;
        for (int i = 0; i <= 64; ++i) {
            const double lx = xmin + (xmax - xmin) * i / 64.0;
            const double xv = std::exp(lx);
            pts += std::to_string(X(xv)) + "," + std::to_string(Y(overlay(xv))) +
                   " ";
        }
        s += "<polyline fill=\"none\" stroke=\"#555555\" stroke-dasharray=\"6 "
             "3\" points=\"" +
             pts + "\"/>\n";
        s += "<text x=\"" + std::to_string(W - mr - 4) + "\" y=\"" +
             std::to_string(mt + 14) +
             "\" text-anchor=\"end\" font-size=\"11\" fill=\"#555555\">" +
             overlay_label + "</text>\n";
    }
    int li = 0;
    for (const auto& ser : series) {
        std::string pts;
        for (size_t i = 0; i < ser.x.size(); ++i)
            pts += std::to_string(X(ser.x[i])) + "," +
                   std::to_string(Y(ser.y[i])) + " ";
        s += "<polyline fill=\"none\" stroke=\"" + std::string(ser.color) +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        for (size_t i = 0; i < ser.x.size(); ++i) {
            s += "<circle cx=\"" + std::to_string(X(ser.x[i])) + "\" cy=\"" +
                 std::to_string(Y(ser.y[i])) + "\" r=\"3\" fill=\"" +
                 ser.color + "\"/>\n";
            if (ser.yerr[i] > 0.0) {
                const double lo = std::max(ser.y[i] - ser.yerr[i],
                                           ser.y[i] * 0.05);
                s += "<line x1=\"" + std::to_string(X(ser.x[i])) + "\" y1=\"" +
                     std::to_string(Y(lo)) + "\" x2=\"" +
                     std::to_string(X(ser.x[i])) + "\" y2=\"" +
                     std::to_string(Y(ser.y[i] + ser.yerr[i])) +
                     "\" stroke=\"" + ser.color + "\"/>\n";
            }
        }
        s += "<text x=\"" + std::to_string(ml + 8) + "\" y=\"" +
             std::to_string(mt + 16 + 14 * li) +
             "\" font-size=\"11\" fill=\"" + ser.color + "\">" + ser.label +
             "</text>\n";
        ++li;
    }
    s += "</svg>\n";
    return s;
}

std::string dominance_svg(const DominanceResult& result) {
    SvgSeries rj, rh, diff;
    rj.color = "#1f77b4";
    rj.label = "risk, Jeffreys prior";
    rh.color = "#d62728";
    rh.label = "risk, pi_J * " + result.h_name;
    diff.color = "#2ca02c";
    diff.label = "paired risk difference";
    double asym = 0.0;
    for (const DominanceCell& c : result.cells) {
        rj.x.push_back(c.n);
        rj.y.push_back(c.risk_jeffreys);
        rj.yerr.push_back(0.0);
        rh.x.push_back(c.n);
        rh.y.push_back(c.risk_h);
        rh.yerr.push_back(0.0);
        if (c.diff > 0.0) {
            diff.x.push_back(c.n);
            diff.y.push_back(c.diff);
            diff.yerr.push_back(c.diff_se);
        }
        asym = c.asymptote;
    }
    std::vector<SvgSeries> series{rj, rh};
    if (!diff.x.empty()) series.push_back(diff);
    std::function<double(double)> overlay;
    std::string label;
    if (asym > 0.0) {
        overlay = [asym](double n) { return asym / (n * n); };
        label = "asymptote / n^2";
    }
    return svg_loglog("KL risk vs sample size", series, overlay, label);
}

std::string slope_svg(const std::vector<double>& ns,
                      const std::vector<double>& means, double slope) {
    SvgSeries s;
    s.label = "mean max |expansion - oracle|";
    s.x = ns;
    s.y = means;
    s.yerr.assign(ns.size(), 0.0);
    std::function<double(double)> overlay;
    std::string label;
    if (!ns.empty() && means.front() > 0.0) {
        const double c = means.front() * std::pow(ns.front(), 1.5);
        overlay = [c](double n) { return c * std::pow(n, -1.5); };
        label = "reference slope -3/2";
    }
    return svg_loglog("expansion vs oracle, fitted slope " + fmt(slope),
                      {s}, overlay, label);
}

} // namespace

// ------------------------------------------------------------ public API

SpectralModel make_model(const ModelConfig& mc) {
    SigmaPolicy pol = SigmaPolicy::fixed;
    if (mc.sigma == "log_variance") pol = SigmaPolicy::log_variance;
    if (mc.sigma == "spectrum_level") pol = SigmaPolicy::spectrum_level;
    return SpectralModel(mc.p, mc.q, pol, mc.sigma2, mc.root_margin);
}

std::vector<Eigen::VectorXd> build_grid(const SpectralModel& model,
                                        const GridConfig& grid) {
    const int k = model.dim();
    if (static_cast<int>(grid.lo.size()) != k)
        throw ConfigInvalid("grid dimension does not match the model");
    std::vector<Eigen::VectorXd> nodes;
    long total = 1;
    for (int c : grid.count) total *= c;
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        Eigen::VectorXd v(k);
        for (int i = 0; i < k; ++i) {
            const int ci = static_cast<int>(rem % grid.count[i]);
            rem /= grid.count[i];
            v[i] = grid.lo[i] +
                   (grid.hi[i] - grid.lo[i]) * ci / (grid.count[i] - 1.0);
        }
        if (!model.is_valid(v)) continue;
        bool clear = true;
        for (int i = 0; i < k && clear; ++i) {
            Eigen::VectorXd p = v, q = v;
            p[i] += grid.clearance;
            q[i] -= grid.clearance;
            clear = model.is_valid(p) && model.is_valid(q);
        }
        if (clear) nodes.push_back(v);
    }
    return nodes;
}

ScalarField named_h_field(const std::string& name) {
    if (name == "one") return constant_field(1.0);
    if (name == "arcsine") {
        auto check = [](const Eigen::VectorXd& x) {
            if (x.size() < 1 || std::abs(x[0]) >= 1.0)
                throw Error("the arcsine factor needs |theta_1| < 1");
        };
        ScalarField f;
        f.value = [check](const Eigen::VectorXd& x) {
            check(x);
            return 2.0 - std::asin(x[0]);
        };
        f.grad = [check](const Eigen::VectorXd& x) {
            check(x);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
            g[0] = -1.0 / std::sqrt(1.0 - x[0] * x[0]);
            return g;
        };
        return f;
    }
    if (name == "one_plus_a2") {
        auto check = [](const Eigen::VectorXd& x) {
            if (x.size() < 2)
                throw DimensionMismatch(
                    "the one_plus_a2 factor needs at least two coordinates");
        };
        ScalarField f;
        f.value = [check](const Eigen::VectorXd& x) {
            check(x);
            return 1.0 + x[1];
        };
        f.grad = [check](const Eigen::VectorXd& x) {
            check(x);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
            g[1] = 1.0;
            return g;
        };
        return f;
    }
    throw ConfigInvalid("unknown prior factor h: " + name);
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    expect_keys(j,
                {"seed", "out_dir", "threads", "omega_nodes", "tol_super",
                 "quadrature", "fd", "jobs"},
                "config");
    ExperimentConfig cfg;
    cfg.seed = get_or<uint64_t>(j, "seed", 1);
    cfg.out_dir = get_or<std::string>(j, "out_dir", "out");
    cfg.threads = get_or(j, "threads", 0);
    cfg.omega_nodes = get_or(j, "omega_nodes", 512);
    cfg.tol_super = get_or(j, "tol_super", 1e-8);
    if (j.contains("quadrature")) {
        const json& q = j["quadrature"];
        expect_keys(q, {"rule", "min_nodes", "max_nodes", "tol", "adaptive"},
                    "config.quadrature");
        const std::string rule = get_or<std::string>(q, "rule", "trapezoid");
        if (rule == "trapezoid")
            cfg.quad.rule = QuadratureConfig::Rule::trapezoid;
        else if (rule == "gauss_legendre")
            cfg.quad.rule = QuadratureConfig::Rule::gauss_legendre;
        else
            throw ConfigInvalid(
                "config.quadrature.rule must be trapezoid or gauss_legendre");
        cfg.quad.min_nodes = get_or(q, "min_nodes", 512);
        cfg.quad.max_nodes = get_or(q, "max_nodes", 1 << 16);
        cfg.quad.tol = get_or(q, "tol", 1e-8);
        cfg.quad.adaptive = get_or(q, "adaptive", true);
    }
    if (j.contains("fd")) {
        expect_keys(j["fd"], {"rel_step"}, "config.fd");
        cfg.fd.rel_step = get_or(j["fd"], "rel_step", 1e-4);
    }
    if (!j.contains("jobs") || !j["jobs"].is_array() || j["jobs"].empty())
        throw ConfigInvalid("config.jobs must be a non-empty array");

    std::set<std::string> names;
    int idx = 0;
    for (const json& ji : j["jobs"]) {
        const std::string path = "jobs[" + std::to_string(idx) + "]";
        expect_keys(ji,
                    {"kind", "name", "model", "theta0", "theta_points", "h",
                     "grid", "n_grid", "n", "reps", "pilot_reps", "target_t",
                     "min_reps", "max_reps", "oracle_audit_reps"},
                    path);
        JobConfig job;
        job.kind = require<std::string>(ji, "kind", path);
        job.name = get_or<std::string>(ji, "name",
                                       job.kind + "_" + std::to_string(idx));
        if (!names.insert(job.name).second)
            throw ConfigInvalid(path + ".name duplicates another job name");
        if (!ji.contains("model"))
            throw ConfigInvalid(path + ".model is required");
        job.model = parse_model(ji["model"], path + ".model");
        job.theta0 = get_or<std::vector<double>>(ji, "theta0", {});
        job.theta_points =
            get_or<std::vector<std::vector<double>>>(ji, "theta_points", {});
        job.h = get_or<std::string>(ji, "h", "one");
        if (ji.contains("grid")) job.grid = parse_grid(ji["grid"], path + ".grid");
        job.n_grid = get_or<std::vector<int>>(ji, "n_grid", {});
        job.n = get_or(ji, "n", 128);
        job.reps = get_or(ji, "reps", 0);
        job.pilot_reps = get_or(ji, "pilot_reps", 200);
        job.target_t = get_or(ji, "target_t", 4.0);
        job.min_reps = get_or(ji, "min_reps", 400);
        job.max_reps = get_or(ji, "max_reps", 10000);
        job.oracle_audit_reps = get_or(ji, "oracle_audit_reps", 0);

        if (job.kind == "geometry-table") {
            if (job.theta_points.empty())
                throw ConfigInvalid(path + ".theta_points must not be empty");
        } else if (job.kind == "superharmonic-check") {
            if (job.grid.lo.empty())
                throw ConfigInvalid(path + ".grid is required");
            named_h_field(job.h);
        } else if (job.kind == "bias-check") {
            if (job.theta0.empty())
                throw ConfigInvalid(path + ".theta0 is required");
        } else if (job.kind == "dominance-experiment") {
            if (job.theta0.empty())
                throw ConfigInvalid(path + ".theta0 is required");
            if (job.n_grid.empty())
                throw ConfigInvalid(path + ".n_grid must not be empty");
            if (job.grid.lo.empty())
                throw ConfigInvalid(path + ".grid is required");
            named_h_field(job.h);
        } else if (job.kind == "expansion-vs-oracle") {
            if (job.theta0.empty())
                throw ConfigInvalid(path + ".theta0 is required");
            if (job.n_grid.empty())
                throw ConfigInvalid(path + ".n_grid must not be empty");
        } else {
            throw ConfigInvalid(path + ".kind is not a recognized job kind");
        }
        for (int n : job.n_grid)
            if (n < 8) throw ConfigInvalid(path + ".n_grid entries must be >= 8");
        cfg.jobs.push_back(job);
        ++idx;
    }
    return cfg;
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
    // Operational keys (out_dir, threads) change where and how fast results
    // are produced, never what they are, so they stay out of the canonical
    // text and the config hash.
    json j;
    j["seed"] = cfg.seed;
    j["omega_nodes"] = cfg.omega_nodes;
    j["tol_super"] = cfg.tol_super;
    j["quadrature"] = {
        {"rule", cfg.quad.rule == QuadratureConfig::Rule::trapezoid
                     ? "trapezoid"
                     : "gauss_legendre"},
        {"min_nodes", cfg.quad.min_nodes},
        {"max_nodes", cfg.quad.max_nodes},
        {"tol", cfg.quad.tol},
        {"adaptive", cfg.quad.adaptive},
    };
    j["fd"] = {{"rel_step", cfg.fd.rel_step}};
    json jobs = json::array();
    for (const JobConfig& job : cfg.jobs) {
        json ji;
        ji["kind"] = job.kind;
        ji["name"] = job.name;
        ji["model"] = model_to_json(job.model);
        if (!job.theta0.empty()) ji["theta0"] = job.theta0;
        if (!job.theta_points.empty()) ji["theta_points"] = job.theta_points;
        ji["h"] = job.h;
        if (!job.grid.lo.empty()) ji["grid"] = grid_to_json(job.grid);
        if (!job.n_grid.empty()) ji["n_grid"] = job.n_grid;
        ji["n"] = job.n;
        ji["reps"] = job.reps;
        ji["pilot_reps"] = job.pilot_reps;
        ji["target_t"] = job.target_t;
        ji["min_reps"] = job.min_reps;
        ji["max_reps"] = job.max_reps;
        ji["oracle_audit_reps"] = job.oracle_audit_reps;
        jobs.push_back(ji);
    }
    j["jobs"] = jobs;
    return j.dump();
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(canonical_config_text(cfg))));
    return buf;
}

ReportBundle run_experiment(const ExperimentConfig& cfg) {
    ReportBundle bundle;
    bundle.hash = config_hash(cfg);
    bundle.canonical_config = canonical_config_text(cfg);
    for (const JobConfig& job : cfg.jobs) {
        try {
            if (job.kind == "geometry-table")
                bundle.jobs.push_back(run_geometry_table(cfg, job, bundle.hash));
            else if (job.kind == "superharmonic-check")
                bundle.jobs.push_back(
                    run_superharmonic_check(cfg, job, bundle.hash));
            else if (job.kind == "bias-check")
                bundle.jobs.push_back(run_bias_check(cfg, job, bundle.hash));
            else if (job.kind == "dominance-experiment")
                bundle.jobs.push_back(run_dominance(cfg, job, bundle.hash));
            else if (job.kind == "expansion-vs-oracle")
                bundle.jobs.push_back(
                    run_expansion_vs_oracle(cfg, job, bundle.hash));
        } catch (const ConfigInvalid&) {
            throw;
        } catch (const Error& e) {
            throw Error("job '" + job.name + "': " + e.what());
        }
    }
    return bundle;
}

} // namespace splab
