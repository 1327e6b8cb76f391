#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "salab/config.hpp"
#include "salab/ensemble.hpp"
#include "salab/errors.hpp"
#include "salab/mp_decomp.hpp"
#include "salab/report.hpp"

using nlohmann::json;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int threads = 1;
    bool emit_plots = false;
};

// Built-in default when no --config is given: the two-state example with a = 0.7.
salab::ExperimentConfig default_config(double a, double alpha0, double rho) {
    return salab::parse_config(json{{"model", {{"kind", "paper_section3"}, {"a", a}}},
                                    {"grid", json::array({{{"alpha0", alpha0}, {"rho", rho}}})}});
}

salab::ExperimentConfig resolve(const GlobalOptions& g, std::optional<salab::ExperimentConfig> fallback = {}) {
    salab::ExperimentConfig cfg;
    if (!g.config.empty())
        cfg = salab::load_config(g.config);
    else if (fallback)
        cfg = *fallback;
    else
        throw salab::ConfigError("--config is required for this command");
    if (g.seed) cfg.base_seed = *g.seed;
    if (g.out) cfg.output_dir = *g.out;
    if (g.emit_plots) cfg.emit_plots = true;
    return cfg;
}

json vec(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

int cmd_theory(const salab::ExperimentConfig& cfg) {
    json out = json::array();
    for (const auto& m : cfg.models)
        for (const auto& g : cfg.grid) {
            const salab::StepSizeSchedule schedule(g.alpha0, g.rho);
            json row = salab::to_json(salab::compute_theory(m.model, schedule));
            row["alpha0"] = g.alpha0;
            row["a"] = m.a ? json(*m.a) : json(nullptr);
            row["label"] = m.label;
            row["thetastar"] = vec(m.model.thetastar());
            row["bias_pred_N"] = vec(salab::bias_predict(m.model, schedule, cfg.N));
            row["mse_pred_N"] = salab::mse_pr_predict(salab::compute_theory(m.model, schedule), schedule, cfg.N);
            if (m.bound) {
                auto b = *m.bound;
                b.alpha0 = g.alpha0;
                row["finite_time_constant"] = salab::finite_time_constant(b);
            }
            out.push_back(std::move(row));
        }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_simulate(const salab::ExperimentConfig& cfg, int threads) {
    const auto summary = salab::run_ensemble(cfg, threads);
    const auto& dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    salab::write_summary_csv(summary, dir / "summary.csv");
    salab::write_curves_csv(summary, dir / "curves.csv");
    salab::write_runs_csv(summary, dir / "runs.csv");
    salab::write_metadata(summary, cfg, dir / "metadata.json");
    std::int64_t failed = 0;
    for (const auto& p : summary.points) failed += p.failed_runs;
    std::cout << "wrote " << summary.points.size() << " grid points to " << dir.string() << '\n';
    if (failed > 0) std::cerr << failed << " run(s) diverged; see runs.csv\n";
    return 0;
}

int cmd_compare(const salab::ExperimentConfig& cfg, int threads) {
    const auto summary = salab::run_ensemble(cfg, threads);
    const auto rows = salab::compare_all(summary, cfg);
    std::filesystem::create_directories(cfg.output_dir);
    salab::write_summary_csv(summary, cfg.output_dir / "summary.csv");
    salab::write_comparison_csv(rows, cfg.output_dir / "comparison.csv");
    salab::write_metadata(summary, cfg, cfg.output_dir / "metadata.json");
    std::printf("%8s %6s %8s %12s %12s %12s\n", "a", "rho", "alpha0", "bias_ratio", "var_ratio", "mse_ratio");
    for (const auto& r : rows)
        std::printf("%8.3g %6.3g %8.3g %12.4g %12.4g %12.4g\n", r.a ? *r.a : std::nan(""), r.rho, r.alpha0,
                    r.bias_ratio, r.var_ratio, r.mse_ratio);
    return 0;
}

int cmd_reproduce(const salab::ExperimentConfig& cfg, const std::string& figure, int threads) {
    for (const auto& p : salab::reproduce(salab::parse_figure(figure), cfg, threads)) std::cout << p.string() << '\n';
    return 0;
}

int cmd_decomp(const salab::ExperimentConfig& cfg, std::int64_t steps) {
    json out = json::array();
    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi)
        for (std::size_t gi = 0; gi < cfg.grid.size(); ++gi) {
            const auto& model = cfg.models[mi].model;
            const salab::StepSizeSchedule schedule(cfg.grid[gi].alpha0, cfg.grid[gi].rho);
            const std::uint64_t seed = salab::derive_seed(cfg.base_seed, mi * cfg.grid.size() + gi, 0);
            salab::SARunConfig run{.schedule = schedule,
                                   .n_steps = steps,
                                   .burn_in = 0,
                                   .theta0 = cfg.init.center(model),
                                   .chain = model.chain(),
                                   .seed = seed,
                                   .record_stride = 1,
                                   .init = salab::StationaryInit{},
                                   .keep_path = true,
                                   .checkpoints = {}};
            const auto rec = salab::run_sa(salab::LinearUpdate(model), run);
            const auto terms = salab::decompose_path(model, schedule, rec);
            const auto s = salab::summarize(model, terms, rec.path);
            json cond = json::array();
            for (std::size_t x = 0; x < s.wstar_cond_mean.size(); ++x)
                cond.push_back({{"state", x},
                                {"count", s.wstar_cond_count[x]},
                                {"mean", vec(s.wstar_cond_mean[x])},
                                {"se", vec(s.wstar_cond_se[x])}});
            out.push_back({{"a", cfg.models[mi].a ? json(*cfg.models[mi].a) : json(nullptr)},
                           {"alpha0", schedule.alpha0()},
                           {"rho", schedule.rho()},
                           {"steps", s.steps},
                           {"seed", seed},
                           {"max_residual_ratio", s.max_residual_ratio},
                           {"max_upsilon_gap", s.max_upsilon_gap},
                           {"upsilon_star_mean", vec(s.upsilon_star_mean)},
                           {"upsilon_star_se", vec(s.upsilon_star_se)},
                           {"upsilon_star_theory", vec(s.upsilon_star_theory)},
                           {"wstar_conditional", cond},
                           {"quadratic_variation", s.quadratic_variation},
                           {"wstar_quadratic_variation", s.wstar_quadratic_variation},
                           {"trace_sigma_wstar", s.trace_sigma_wstar},
                           {"telescoping_error", s.telescoping_error}});
        }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_rates(const salab::ExperimentConfig& cfg, int threads) {
    json out = json::array();
    for (const auto& r : salab::rate_checks(cfg, threads)) out.push_back(salab::to_json(r));
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic approximation with Markovian noise: simulation and theory"};
    app.require_subcommand(1);

    GlobalOptions g;
    std::uint64_t seed = 0;
    std::string out;
    app.add_option("--config", g.config, "experiment configuration (JSON)");
    auto* seed_opt = app.add_option("--seed", seed, "override base_seed");
    auto* out_opt = app.add_option("--out", out, "override output directory");
    app.add_option("--threads", g.threads, "worker threads (speed only)")->check(CLI::PositiveNumber);
    app.add_flag("--emit-plots", g.emit_plots, "write SVG plots");

    double a = 0.7, rho = 0.6, alpha0 = 0.5;
    auto* theory = app.add_subcommand("theory", "print asymptotic theory as JSON");
    theory->add_option("--a", a, "two-state parameter when no config is given");
    theory->add_option("--rho", rho, "step-size exponent when no config is given");
    theory->add_option("--alpha0", alpha0, "step-size scale when no config is given");

    auto* simulate = app.add_subcommand("simulate", "run the ensemble and write CSV summaries");
    auto* compare = app.add_subcommand("compare", "run the ensemble and compare with theory");

    std::string figure;
    auto* repro = app.add_subcommand("reproduce", "regenerate a figure's tables");
    repro->add_option("--figure", figure, "fig1, fig2 or fig4")->required();

    std::int64_t steps = 100000;
    auto* decomp = app.add_subcommand("decomp", "noise decomposition diagnostics as JSON");
    decomp->add_option("--steps", steps, "path length")->check(CLI::PositiveNumber);
    decomp->add_option("--a", a, "two-state parameter when no config is given");
    decomp->add_option("--rho", rho, "step-size exponent when no config is given");
    decomp->add_option("--alpha0", alpha0, "step-size scale when no config is given");

    auto* rates = app.add_subcommand("rates", "fitted rate exponents as JSON");

    for (auto* sub : {theory, simulate, compare, repro, decomp, rates}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed;
    if (*out_opt) g.out = out;

    try {
        if (*theory) return cmd_theory(resolve(g, default_config(a, alpha0, rho)));
        if (*simulate) return cmd_simulate(resolve(g), g.threads);
        if (*compare) return cmd_compare(resolve(g), g.threads);
        if (*repro) return cmd_reproduce(resolve(g), figure, g.threads);
        if (*decomp) return cmd_decomp(resolve(g, default_config(a, alpha0, rho)), steps);
        if (*rates) return cmd_rates(resolve(g), g.threads);
    } catch (const salab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
