#include "salab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "salab/errors.hpp"
#include "salab/plot.hpp"

namespace salab {

using nlohmann::json;

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

json vec_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json mat_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_json(m.row(i).transpose()));
    return out;
}

double safe_ratio(double num_, double den) { return den != 0.0 ? num_ / den : std::nan(""); }

}  // namespace

ComparisonRow compare_theory(const GridPointSummary& p, const LinearSAModel& model, const StepSizeSchedule& schedule) {
    if (p.thetastar.size() != model.dim() ||
        (p.thetastar - model.thetastar()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + model.thetastar().norm()))
        throw ModelMismatch("summary was produced by a different model");
    if (p.alpha0 != schedule.alpha0() || p.rho != schedule.rho())
        throw ModelMismatch("summary was produced by a different step-size schedule");

    const TheoryStats theory = compute_theory(model, schedule);
    auto differs = [](const auto& x, const auto& y) {
        return x.size() != y.size() || (x - y).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + y.cwiseAbs().maxCoeff());
    };
    if (differs(p.theory.sigma_pr, theory.sigma_pr) || differs(p.theory.beta_theta, theory.beta_theta))
        throw ModelMismatch("summary was produced by a different model");
    const double m = static_cast<double>(p.successful_runs());
    ComparisonRow r;
    r.a = p.a;
    r.rho = p.rho;
    r.alpha0 = p.alpha0;
    r.bias_emp = p.mean - model.thetastar();
    r.bias_pred = schedule.alpha(p.N + 1) * theory.beta_theta;
    r.bias_se = (p.cov.diagonal() / m).cwiseSqrt();
    r.bias_ratio_components = Eigen::VectorXd(r.bias_emp.size());
    for (Eigen::Index i = 0; i < r.bias_emp.size(); ++i)
        r.bias_ratio_components(i) = safe_ratio(r.bias_emp(i), r.bias_pred(i));
    r.bias_ratio = safe_ratio(r.bias_emp.norm(), r.bias_pred.norm());
    r.var_emp = static_cast<double>(p.N) * p.cov.trace();
    r.var_theory = theory.sigma_pr.trace();
    r.var_se = std::sqrt(2.0 / (m - 1.0)) * r.var_emp;
    r.var_ratio = safe_ratio(r.var_emp, r.var_theory);
    r.mse = p.mse;
    r.mse_pred = mse_pr_predict(theory, schedule, p.N);
    r.mse_ratio = safe_ratio(r.mse, r.mse_pred);
    return r;
}

std::vector<ComparisonRow> compare_all(const EnsembleSummary& summary, const ExperimentConfig& cfg) {
    std::vector<ComparisonRow> rows;
    for (const auto& p : summary.points) {
        const auto& g = cfg.grid.at(p.grid_index);
        rows.push_back(compare_theory(p, cfg.models.at(p.model_index).model, StepSizeSchedule(g.alpha0, g.rho)));
    }
    return rows;
}

void write_summary_csv(const EnsembleSummary& summary, const std::filesystem::path& path) {
    auto out = open_out(path);
    const Eigen::Index d = summary.points.empty() ? 0 : summary.points.front().thetastar.size();
    out << "a,rho,alpha0,M,N,N0";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",mean_" << i;
    for (Eigen::Index i = 1; i <= d; ++i) out << ",bias_pred_" << i;
    for (Eigen::Index i = 1; i <= d; ++i)
        for (Eigen::Index j = 1; j <= d; ++j) out << ",cov_" << i << j;
    out << ",trace_cov_times_N,trace_sigma_pr,mse,mse_pred\n";
    for (const auto& p : summary.points) {
        out << opt_num(p.a) << ',' << num(p.rho) << ',' << num(p.alpha0) << ',' << p.M << ',' << p.N << ',' << p.N0;
        for (Eigen::Index i = 0; i < d; ++i) out << ',' << num(p.mean(i));
        for (Eigen::Index i = 0; i < d; ++i) out << ',' << num(p.bias_pred(i));
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) out << ',' << num(p.cov(i, j));
        out << ',' << num(p.trace_cov_times_N) << ',' << num(p.trace_sigma_pr) << ',' << num(p.mse) << ','
            << num(p.mse_pred) << '\n';
    }
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    const Eigen::Index d = rows.empty() ? 0 : rows.front().bias_emp.size();
    out << "a,rho,alpha0";
    for (const char* col : {"bias_emp_", "bias_pred_", "bias_se_", "bias_ratio_"})
        for (Eigen::Index i = 1; i <= d; ++i) out << ',' << col << i;
    out << ",bias_ratio,var_emp,var_theory,var_se,var_ratio,mse,mse_pred,mse_ratio\n";
    for (const auto& r : rows) {
        out << opt_num(r.a) << ',' << num(r.rho) << ',' << num(r.alpha0);
        for (const Eigen::VectorXd* v : {&r.bias_emp, &r.bias_pred, &r.bias_se, &r.bias_ratio_components})
            for (Eigen::Index i = 0; i < d; ++i) out << ',' << num((*v)(i));
        out << ',' << num(r.bias_ratio) << ',' << num(r.var_emp) << ',' << num(r.var_theory) << ',' << num(r.var_se)
            << ',' << num(r.var_ratio) << ',' << num(r.mse) << ',' << num(r.mse_pred) << ',' << num(r.mse_ratio)
            << '\n';
    }
}

namespace {

void write_curves_for(const EnsembleSummary& summary, std::size_t model_index, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "rho,n,mse_raw,mse_pr,mse_pr_pred,finite_time_bound\n";
    for (const auto& p : summary.points) {
        if (p.model_index != model_index) continue;
        const StepSizeSchedule schedule(p.alpha0, p.rho);
        for (const auto& c : p.curves) {
            const double bound = p.bound ? finite_time_bound(*p.bound, schedule, c.n) : std::nan("");
            out << num(p.rho) << ',' << c.n << ',' << num(c.mse_raw) << ',' << num(c.has_pr ? c.mse_pr : std::nan(""))
                << ',' << num(mse_pr_predict(p.theory, schedule, c.n)) << ',' << num(bound) << '\n';
        }
    }
}

std::size_t model_count(const EnsembleSummary& s) {
    std::size_t n = 0;
    for (const auto& p : s.points) n = std::max(n, p.model_index + 1);
    return n;
}

std::string model_tag(const GridPointSummary& p) {
    if (p.a) return "a" + num(*p.a);
    return "model" + std::to_string(p.model_index);
}

}  // namespace

void write_curves_csv(const EnsembleSummary& summary, const std::filesystem::path& path) {
    if (model_count(summary) <= 1) {
        write_curves_for(summary, 0, path);
        return;
    }
    for (const auto& p : summary.points) {
        if (p.grid_index != 0) continue;
        auto stem = path.stem().string() + "_" + model_tag(p);
        write_curves_for(summary, p.model_index, path.parent_path() / (stem + path.extension().string()));
    }
}

void write_runs_csv(const EnsembleSummary& summary, const std::filesystem::path& path) {
    auto out = open_out(path);
    const Eigen::Index d = summary.points.empty() ? 0 : summary.points.front().thetastar.size();
    out << "a,rho,alpha0,run,seed,status";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",theta_pr_N_" << i;
    for (Eigen::Index i = 1; i <= d; ++i) out << ",theta_N_" << i;
    out << '\n';
    for (const auto& p : summary.points) {
        for (std::size_t r = 0; r < p.runs.size(); ++r) {
            const auto& run = p.runs[r];
            out << opt_num(p.a) << ',' << num(p.rho) << ',' << num(p.alpha0) << ',' << r << ',' << run.seed << ','
                << (run.ok ? "ok" : "diverged");
            for (Eigen::Index i = 0; i < d; ++i) out << ',' << (run.ok ? num(run.theta_pr_N(i)) : "nan");
            for (Eigen::Index i = 0; i < d; ++i) out << ',' << (run.ok ? num(run.theta_N(i)) : "nan");
            out << '\n';
        }
    }
}

void write_metadata(const EnsembleSummary& summary, const ExperimentConfig& cfg, const std::filesystem::path& path) {
    json meta;
    meta["covariance_denominator"] = "M-1";
    meta["mse_definition"] = "(1/M) sum_i |theta_pr_N^i - theta*|^2";
    meta["mse_identity"] = "mse = trace(cov)*(M-1)/M + |mean - theta*|^2";
    meta["mean_standard_error"] = "sqrt(diag(cov)/M)";
    meta["variance_standard_error"] = "sqrt(2/(M-1)) * N*trace(cov)";
    meta["pr_window"] = "theta_pr_n = mean of theta_k for k = N0..n inclusive";
    meta["initial_chain_state"] = "stationary";
    meta["seed_rule"] = "splitmix64(splitmix64(splitmix64(base_seed) ^ grid_index) ^ run_index*0xd1b54a32d192ed03)";
    meta["finite_time_bound"] = "leading term K*(log(n/alpha0)+1)*alpha_n only";
    meta["base_seed"] = cfg.base_seed;
    meta["M"] = cfg.M;
    meta["N"] = cfg.N;
    meta["N0"] = cfg.N0;
    json failed = json::array();
    for (const auto& p : summary.points)
        if (p.failed_runs > 0)
            failed.push_back({{"label", p.label}, {"rho", p.rho}, {"alpha0", p.alpha0}, {"failed_runs", p.failed_runs}});
    meta["failed_grid_points"] = failed;
    auto out = open_out(path);
    out << meta.dump(2) << '\n';
}

Figure parse_figure(const std::string& name) {
    if (name == "fig1" || name == "fig1_bias_var") return Figure::BiasVariance;
    if (name == "fig2" || name == "fig2_mse") return Figure::MeanSquareError;
    if (name == "fig4" || name == "fig4_ratios") return Figure::Ratios;
    throw ConfigError("unknown figure '" + name + "' (expected fig1, fig2 or fig4)");
}

std::string figure_name(Figure f) {
    switch (f) {
        case Figure::BiasVariance: return "fig1";
        case Figure::MeanSquareError: return "fig2";
        case Figure::Ratios: return "fig4";
    }
    return "fig";
}

namespace {

void plot_fig1(const EnsembleSummary& s, const std::vector<ComparisonRow>& rows, const std::filesystem::path& dir) {
    const Eigen::Index d = s.points.front().thetastar.size();
    std::vector<PlotSeries> mean_series, var_series;
    for (std::size_t mi = 0; mi < model_count(s); ++mi) {
        std::string tag;
        std::vector<double> rho, var_emp, var_th;
        std::vector<std::vector<double>> emp(static_cast<std::size_t>(d)), th(static_cast<std::size_t>(d));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (s.points[k].model_index != mi) continue;
            tag = model_tag(s.points[k]);
            rho.push_back(rows[k].rho);
            var_emp.push_back(rows[k].var_emp);
            var_th.push_back(rows[k].var_theory);
            for (Eigen::Index i = 0; i < d; ++i) {
                emp[static_cast<std::size_t>(i)].push_back(rows[k].bias_emp(i));
                th[static_cast<std::size_t>(i)].push_back(rows[k].bias_pred(i));
            }
        }
        for (Eigen::Index i = 0; i < d; ++i) {
            const std::string c = std::to_string(i + 1);
            mean_series.push_back({tag + " empirical " + c, rho, emp[static_cast<std::size_t>(i)], false, true});
            mean_series.push_back({tag + " theory " + c, rho, th[static_cast<std::size_t>(i)], true, false});
        }
        var_series.push_back({tag + " N tr cov", rho, var_emp, false, true});
        var_series.push_back({tag + " tr Sigma_PR", rho, var_th, true, false});
    }
    write_svg_plot(dir / "fig1_mean.svg", {"Bias of PR estimate at N", "rho", "mean - theta*", false, false}, mean_series);
    write_svg_plot(dir / "fig1_variance.svg", {"Scaled covariance of PR estimate", "rho", "N trace(cov)", false, true},
                   var_series);
}

void plot_fig2(const EnsembleSummary& s, const std::filesystem::path& dir) {
    std::vector<PlotSeries> raw, pr;
    for (const auto& p : s.points) {
        const StepSizeSchedule schedule(p.alpha0, p.rho);
        std::vector<double> n, mraw, mpr, pred, bound;
        for (const auto& c : p.curves) {
            n.push_back(static_cast<double>(c.n));
            mraw.push_back(c.mse_raw);
            mpr.push_back(c.has_pr ? c.mse_pr : std::nan(""));
            pred.push_back(mse_pr_predict(p.theory, schedule, c.n));
            bound.push_back(p.bound ? finite_time_bound(*p.bound, schedule, c.n) : std::nan(""));
        }
        const std::string tag = model_tag(p) + " rho=" + num(p.rho);
        raw.push_back({tag + " E|err|^2", n, mraw, false, false});
        if (p.bound) raw.push_back({tag + " bound", n, bound, true, false});
        pr.push_back({tag + " E|err_PR|^2", n, mpr, false, false});
        pr.push_back({tag + " approx", n, pred, true, false});
    }
    write_svg_plot(dir / "fig2_raw.svg", {"MSE without averaging", "n", "mean square error", true, true}, raw);
    write_svg_plot(dir / "fig2_pr.svg", {"MSE with PR averaging", "n", "mean square error", true, true}, pr);
}

void plot_fig4(const EnsembleSummary& s, const std::vector<ComparisonRow>& rows, const std::filesystem::path& dir) {
    std::vector<PlotSeries> bias, var;
    for (std::size_t mi = 0; mi < model_count(s); ++mi) {
        std::string tag;
        std::vector<double> rho, br, vr;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (s.points[k].model_index != mi) continue;
            tag = model_tag(s.points[k]);
            rho.push_back(rows[k].rho);
            br.push_back(rows[k].bias_ratio);
            vr.push_back(rows[k].var_ratio);
        }
        bias.push_back({tag, rho, br, false, true});
        var.push_back({tag, rho, vr, false, true});
    }
    write_svg_plot(dir / "fig4_bias_ratio.svg", {"Empirical / theoretical bias", "rho", "ratio", false, false}, bias);
    write_svg_plot(dir / "fig4_variance_ratio.svg", {"Empirical / theoretical variance", "rho", "ratio", false, false},
                   var);
}

}  // namespace

std::vector<std::filesystem::path> reproduce(Figure figure, const ExperimentConfig& cfg, int threads) {
    const EnsembleSummary summary = run_ensemble(cfg, threads);
    const auto& dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;

    write_summary_csv(summary, dir / "summary.csv");
    files.push_back(dir / "summary.csv");
    write_metadata(summary, cfg, dir / "metadata.json");
    files.push_back(dir / "metadata.json");

    const auto rows = compare_all(summary, cfg);
    if (figure == Figure::MeanSquareError) {
        write_curves_csv(summary, dir / "curves.csv");
        files.push_back(dir / "curves.csv");
        if (cfg.emit_plots) plot_fig2(summary, dir);
    } else {
        write_comparison_csv(rows, dir / "comparison.csv");
        files.push_back(dir / "comparison.csv");
        if (cfg.emit_plots) {
            if (figure == Figure::BiasVariance)
                plot_fig1(summary, rows, dir);
            else
                plot_fig4(summary, rows, dir);
        }
    }
    return files;
}

namespace {

SlopeCheck fit_checkpoints(const std::string& name, double expected, const std::vector<const CheckpointStats*>& pts,
                           auto&& x_of, auto&& y_of, auto&& se_of) {
    SlopeCheck c;
    c.name = name;
    c.expected = expected;
    std::vector<double> xs, ys, ses;
    for (const auto* p : pts) {
        const double y = y_of(*p);
        if (!(std::isfinite(y))) continue;
        xs.push_back(x_of(*p));
        ys.push_back(y);
        ses.push_back(se_of(*p));
        c.ns.push_back(p->n);
    }
    if (xs.size() < 3) throw InsufficientGrid(name + ": fewer than three usable checkpoints");
    c.fit = fit_line(xs, ys, ses);
    return c;
}

}  // namespace

std::vector<RateReport> rate_checks(const EnsembleSummary& summary, const ExperimentConfig& cfg) {
    std::vector<RateReport> out;
    for (const auto& p : summary.points) {
        const StepSizeSchedule schedule(p.alpha0, p.rho);
        const double m = static_cast<double>(p.successful_runs());
        std::vector<const CheckpointStats*> pr_pts, raw_pts;
        for (const auto& c : p.curves) {
            if (c.n >= 1000 && c.n <= p.N) raw_pts.push_back(&c);
            const bool wanted = cfg.rate_checkpoints.empty()
                                    ? (c.n >= std::max<std::int64_t>(1000, p.N0 + 1))
                                    : std::find(cfg.rate_checkpoints.begin(), cfg.rate_checkpoints.end(), c.n) !=
                                          cfg.rate_checkpoints.end();
            if (wanted && c.has_pr && c.n > p.N0) pr_pts.push_back(&c);
        }
        RateReport r;
        r.a = p.a;
        r.rho = p.rho;
        r.alpha0 = p.alpha0;
        r.bias_vs_alpha = fit_checkpoints(
            "bias_vs_alpha", 1.0, pr_pts, [&](const CheckpointStats& c) { return std::log(schedule.alpha(c.n + 1)); },
            [](const CheckpointStats& c) { return std::log(c.mean_err_pr.norm()); },
            [&](const CheckpointStats& c) { return std::sqrt(c.cov_pr.trace() / m) / c.mean_err_pr.norm(); });
        r.mse_raw_vs_alpha = fit_checkpoints(
            "mse_raw_vs_alpha", 1.0, raw_pts, [&](const CheckpointStats& c) { return std::log(schedule.alpha(c.n)); },
            [](const CheckpointStats& c) { return std::log(c.mse_raw); },
            [](const CheckpointStats& c) { return c.mse_raw_se / c.mse_raw; });
        r.ncov_vs_n = fit_checkpoints(
            "ncov_vs_n", 0.0, pr_pts, [](const CheckpointStats& c) { return std::log(static_cast<double>(c.n)); },
            [](const CheckpointStats& c) { return std::log(static_cast<double>(c.n) * c.cov_pr.trace()); },
            [&](const CheckpointStats&) { return std::sqrt(2.0 / (m - 1.0)); });
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RateReport> rate_checks(const ExperimentConfig& cfg, int threads) {
    return rate_checks(run_ensemble(cfg, threads), cfg);
}

DecayFit fit_bias_decay(const GridPointSummary& p, std::int64_t n_lo, std::int64_t n_hi) {
    const StepSizeSchedule schedule(p.alpha0, p.rho);
    DecayFit f;
    std::vector<double> xs, ys;
    for (const auto& c : p.curves) {
        if (c.n < n_lo || c.n > n_hi) continue;
        const double e = c.mean_err_raw.norm();
        if (!(e > 0.0)) continue;
        xs.push_back(schedule.tau_b(c.n));
        ys.push_back(std::log(e));
        f.ns.push_back(c.n);
    }
    if (xs.size() < 3) throw InsufficientGrid("fit_bias_decay: fewer than three checkpoints in range");
    const LineFit fit = fit_line(xs, ys);
    f.lambda = -fit.slope;
    f.intercept = fit.intercept;
    f.r2 = fit.r2;
    return f;
}

json to_json(const TheoryStats& t) {
    return json{{"rho", t.rho},
                {"upsilon_bar_star", vec_json(t.upsilon_bar_star)},
                {"beta_theta", vec_json(t.beta_theta)},
                {"sigma_wstar", mat_json(t.sigma_wstar)},
                {"sigma_pr", mat_json(t.sigma_pr)},
                {"sigma_pr_scalar", t.sigma_pr_scalar},
                {"trace_sigma_pr", t.sigma_pr.trace()}};
}

json to_json(const RateReport& r) {
    auto slope = [](const SlopeCheck& c) {
        return json{{"name", c.name},     {"expected", c.expected},   {"slope", c.fit.slope},
                    {"band", c.fit.slope_band}, {"r2", c.fit.r2}, {"ns", c.ns}};
    };
    json out{{"rho", r.rho},
             {"alpha0", r.alpha0},
             {"bias_vs_alpha", slope(r.bias_vs_alpha)},
             {"mse_raw_vs_alpha", slope(r.mse_raw_vs_alpha)},
             {"ncov_vs_n", slope(r.ncov_vs_n)}};
    out["a"] = r.a ? json(*r.a) : json(nullptr);
    return out;
}

}  // namespace salab
