// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "../unit/oracles.hpp"
#include "salab/config.hpp"
#include "salab/ensemble.hpp"
#include "salab/linear_theory.hpp"
#include "salab/markov_chain.hpp"
#include "salab/mp_decomp.hpp"
#include "salab/report.hpp"
#include "salab/sa_engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace salab;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[fail] ";
        }
        detail << what << "; ";
    }
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

const std::vector<double> kGrid{0.15, 0.3, 0.45, 0.6, 0.75, 0.9};

json grid_json(const std::vector<double>& rhos) {
    json g = json::array();
    for (double r : rhos) g.push_back({{"alpha0", 0.5}, {"rho", r}});
    return g;
}

const ComparisonRow& row_at(const std::vector<ComparisonRow>& rows, double rho) {
    for (const auto& r : rows)
        if (std::abs(r.rho - rho) < 1e-12) return r;
    throw std::runtime_error("comparison row not found");
}

bool outside(double r, double lo, double hi) { return !(r >= lo && r <= hi); }

// Closed forms, a in {0.1, ..., 0.9}.
void ac1(Outcome& o) {
    Eigen::Matrix2d A0, A1;
    A0 << -4, 0, 2, -4;
    A1 << 2, 0, -2, 2;
    const Eigen::Vector2d b0(0, 0), b1(-2, -2);
    double worst_u = 0, worst_s = 0;
    for (int i = 1; i <= 9; ++i) {
        const double a = 0.1 * i;
        const auto m = paper_section3(a);
        const auto cf = oracle::two_state_closed_form(a, A0, A1, b0, b1);
        worst_u = std::max(worst_u, (theory_upsilon_star(m) - cf.upsilon).cwiseAbs().maxCoeff());
        worst_s = std::max(worst_s, (theory_sigma_pr(m).sigma_pr - cf.sigma_pr).cwiseAbs().maxCoeff());
    }
    const auto m = paper_section3(0.7);
    const double u_err = (theory_upsilon_star(m) - Eigen::Vector2d(-8, 4.0 / 3)).cwiseAbs().maxCoeff();
    const double tr = theory_sigma_pr(m).sigma_pr.trace();
    o.require(worst_u <= 1e-10, "max upsilon error " + fmt(worst_u));
    o.require(worst_s <= 1e-10, "max sigma_pr error " + fmt(worst_s));
    o.require(u_err <= 1e-10, "a=0.7 upsilon error " + fmt(u_err));
    o.require(std::abs(tr - 140.0 / 3) <= 1e-10, "a=0.7 trace " + fmt(tr, 12));
}

// Poisson solver and CLT covariance.
void ac2(Outcome& o) {
    double worst = 0;
    for (double a : {0.3, 0.5, 0.7}) {
        const auto chain = two_state(a);
        Eigen::MatrixXd g(2, 1);
        g << 0, 1;
        const auto gh = poisson_solve_vector(chain, StateVectorTable(g));
        worst = std::max(worst, std::abs(gh.at(0)(0) - gh.at(1)(0) + 1.0 / (2 * (1 - a))));
    }
    o.require(worst <= 1e-10, "two-state Poisson gap error " + fmt(worst));

    std::mt19937_64 rng(20240601);
    double worst_cov = 0;
    for (int t = 0; t < 50; ++t) {
        const int n = 2 + t % 7, d = 1 + t % 4;
        const Eigen::MatrixXd P = oracle::random_stochastic(n, rng);
        const auto chain = make_chain(P);
        const Eigen::MatrixXd g = oracle::random_matrix(n, d, rng, 2.0);
        const Eigen::MatrixXd ref = oracle::autocov_sum(P, oracle::stationary_by_powers(P), g);
        worst_cov = std::max(worst_cov, (clt_covariance(chain, StateVectorTable(g)) - ref).cwiseAbs().maxCoeff() /
                                            (1.0 + ref.cwiseAbs().maxCoeff()));
    }
    o.require(worst_cov <= 1e-8, "50 random chains, max covariance error " + fmt(worst_cov));
}

// Pathwise decomposition identity.
void ac3(Outcome& o) {
    const auto m = paper_section3(0.7);
    const StepSizeSchedule s(0.5, 0.6);
    SARunConfig cfg{.schedule = s,
                    .n_steps = 100000,
                    .burn_in = 0,
                    .theta0 = m.thetastar() + Eigen::Vector2d(3, -2),
                    .chain = m.chain(),
                    .seed = derive_seed(1, 0, 0),
                    .record_stride = 1,
                    .keep_path = true};
    const auto tr = run_sa(LinearUpdate(m), cfg);
    const auto terms = decompose_path(m, s, tr);
    const auto sum = summarize(m, terms, tr.path);
    o.require(sum.steps == 100000 - 1 || sum.steps == 100000, "steps " + std::to_string(sum.steps));
    o.require(sum.max_residual_ratio <= 1e-9, "max residual/(1+|theta|) " + fmt(sum.max_residual_ratio));
    o.require(sum.max_upsilon_gap <= 1e-9, "max upsilon gap " + fmt(sum.max_upsilon_gap));
}

struct MainRun {
    ExperimentConfig cfg;
    EnsembleSummary summary;
    std::vector<ComparisonRow> rows;
};

MainRun main_ensemble(int threads) {
    json doc{{"model", {{"kind", "paper_section3"}, {"a", 0.7}}},
             {"grid", grid_json(kGrid)},
             {"M", 300},
             {"N", 300000},
             {"N0", 2000},
             {"base_seed", 1}};
    MainRun r{parse_config(doc), {}, {}};
    r.summary = run_ensemble(r.cfg, threads);
    r.rows = compare_all(r.summary, r.cfg);
    return r;
}

// Covariance near the optimum.
void ac4(Outcome& o, const MainRun& r) {
    for (double rho : {0.45, 0.6, 0.75}) {
        const auto& row = row_at(r.rows, rho);
        o.require(std::abs(row.var_emp - 140.0 / 3) <= 0.2 * 140.0 / 3,
                  "rho=" + fmt(rho) + " N tr cov " + fmt(row.var_emp) + " vs " + fmt(140.0 / 3));
    }
}

// Bias law.
void ac5(Outcome& o, const MainRun& r) {
    for (double rho : {0.45, 0.6}) {
        const auto& row = row_at(r.rows, rho);
        for (Eigen::Index i = 0; i < row.bias_emp.size(); ++i) {
            const double e = row.bias_emp(i), p = row.bias_pred(i), se = row.bias_se(i);
            const bool ok = std::abs(e - p) <= std::max(3 * se, 0.3 * std::abs(p)) && e * p > 0;
            o.require(ok, "rho=" + fmt(rho) + " bias[" + std::to_string(i) + "] " + fmt(e) + " vs " + fmt(p) +
                              " (se " + fmt(se) + ")");
        }
    }
}

// Bias-variance dominance.
void ac6(Outcome& o, const MainRun& r) {
    const auto& lo = row_at(r.rows, 0.3);
    const double floor_lo = lo.var_theory / static_cast<double>(r.cfg.N);
    o.require(lo.mse >= 10 * floor_lo, "rho=0.3 mse/(tr Sigma/N) " + fmt(lo.mse / floor_lo));
    const auto& hi = row_at(r.rows, 0.75);
    const double floor_hi = hi.var_theory / static_cast<double>(r.cfg.N);
    o.require(std::abs(hi.mse - floor_hi) <= 0.35 * floor_hi, "rho=0.75 mse/(tr Sigma/N) " + fmt(hi.mse / floor_hi));
}

// Null bias without the multiplicative coupling, and transient decay.
void ac7(Outcome& o, int threads) {
    json doc{{"model", json::array({{{"kind", "paper_section3"}, {"a", 0.5}},
                                    {{"kind", "paper_section3"}, {"a", 0.7}, {"noise", "additive"}}})},
             {"grid", grid_json(kGrid)},
             {"M", 300},
             {"N", 300000},
             {"N0", 2000},
             {"base_seed", 2}};
    const auto cfg = parse_config(doc);
    const auto s = run_ensemble(cfg, threads);
    int within = 0, total = 0;
    double worst = 0;
    for (const auto& p : s.points) {
        const double err = (p.mean - p.thetastar).norm();
        const double pooled = std::sqrt(p.cov.trace() / static_cast<double>(p.successful_runs()));
        worst = std::max(worst, err / pooled);
        ++total;
        if (err <= 3 * pooled) ++within;
    }
    o.require(within == total, std::to_string(within) + "/" + std::to_string(total) +
                                   " points within 3 pooled se, worst ratio " + fmt(worst));

    json ad{{"model", {{"kind", "paper_section3"}, {"a", 0.7}, {"noise", "additive"}}},
            {"grid", grid_json({0.9})},
            {"M", 500},
            {"N", 10000},
            {"N0", 0},
            {"base_seed", 3},
            {"checkpoints", 60},
            {"init", {{"kind", "fixed"}, {"value", {11.0, 11.0}}}}};
    const auto adcfg = parse_config(ad);
    const auto as = run_ensemble(adcfg, threads);
    const auto fit = fit_bias_decay(as.points.front(), 100, 10000);
    o.require(-fit.lambda < 0 && fit.r2 > 0.9,
              "additive decay slope " + fmt(-fit.lambda) + " R2 " + fmt(fit.r2) + " over " +
                  std::to_string(fit.ns.size()) + " checkpoints");
}

// Rate exponents.
void ac8(Outcome& o, int threads) {
    json doc{{"model", {{"kind", "paper_section3"}, {"a", 0.7}}},
             {"grid", grid_json({0.45, 0.6})},
             {"M", 300},
             {"N", 300000},
             {"N0", 2000},
             {"base_seed", 4},
             {"rate_checkpoints", {30000, 100000, 300000}}};
    const auto reports = rate_checks(parse_config(doc), threads);
    for (const auto& rep : reports) {
        const std::string tag = "rho=" + fmt(rep.rho) + " ";
        const double b = rep.bias_vs_alpha.fit.slope;
        const double m = rep.mse_raw_vs_alpha.fit.slope;
        const double c = rep.ncov_vs_n.fit.slope;
        o.require(std::abs(b - 1) <= 0.15, tag + "bias slope " + fmt(b));
        o.require(std::abs(m - 1) <= 0.15, tag + "raw mse slope " + fmt(m));
        o.require(std::abs(c) <= 0.2, tag + "N tr cov slope " + fmt(c));
    }
}

// Finite-time bound constant and dominance.
void ac9(Outcome& o, const MainRun& r) {
    const double K = finite_time_constant(paper_section3_bound_params(0.7, 0.5));
    const double K_ref = 260 * (3 + 2 * std::sqrt(2.0));
    o.require(std::abs(K - K_ref) <= 1e-9 * K_ref, "K " + fmt(K, 8));
    std::size_t checked = 0, violated = 0;
    std::int64_t last_violation = 0;
    for (const auto& p : r.summary.points) {
        const StepSizeSchedule s(p.alpha0, p.rho);
        for (const auto& c : p.curves) {
            ++checked;
            if (!(finite_time_bound(*p.bound, s, c.n) >= c.mse_raw)) {
                ++violated;
                last_violation = std::max(last_violation, c.n);
            }
        }
    }
    o.require(violated == 0, std::to_string(checked - violated) + "/" + std::to_string(checked) +
                                 " checkpoints dominated" +
                                 (violated ? ", largest violating n " + std::to_string(last_violation) : ""));
}

// Breakdown at the grid extremes.
void ac10(Outcome& o, const MainRun& r) {
    const double b = row_at(r.rows, 0.15).bias_ratio;
    const double v = row_at(r.rows, 0.9).var_ratio;
    o.require(outside(b, 0.7, 1.3), "rho=0.15 bias ratio " + fmt(b));
    o.require(outside(v, 0.7, 1.3), "rho=0.9 variance ratio " + fmt(v));
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Two CLI executions give byte-identical CSVs.
void ac11(Outcome& o, const fs::path& work, const std::string& cli) {
    const fs::path dir = work / "ac11";
    fs::remove_all(dir);
    fs::create_directories(dir);
    json doc{{"model", {{"kind", "paper_section3"}, {"a", 0.7}}},
             {"grid", grid_json(kGrid)},
             {"M", 40},
             {"N", 20000},
             {"N0", 2000},
             {"base_seed", 11}};
    const fs::path config = dir / "config.json";
    std::ofstream(config) << doc.dump(2);
    std::vector<std::vector<std::pair<std::string, std::string>>> outs;
    for (const char* run : {"run1", "run2"}) {
        const fs::path out = dir / run;
        const std::string cmd = "\"" + cli + "\" --config \"" + config.string() + "\" --out \"" + out.string() +
                                "\" reproduce --figure fig1 > \"" + (dir / (std::string(run) + ".log")).string() +
                                "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        o.require(rc == 0, std::string(run) + " exit " + std::to_string(rc));
        std::vector<std::pair<std::string, std::string>> files;
        if (fs::exists(out))
            for (const auto& e : fs::directory_iterator(out))
                if (e.path().extension() == ".csv") files.emplace_back(e.path().filename().string(), read_bytes(e.path()));
        std::sort(files.begin(), files.end());
        outs.push_back(std::move(files));
    }
    o.require(!outs[0].empty(), std::to_string(outs[0].size()) + " csv files");
    o.require(outs[0] == outs[1], outs[0] == outs[1] ? "identical bytes" : "outputs differ");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string work = "acceptance_work";
    std::string cli;
    int threads = 1;
    app.add_option("--work-dir", work, "scratch directory");
    app.add_option("--cli", cli, "path of the salab executable")->required();
    app.add_option("--threads", threads, "worker threads for ensembles");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(work);

    int failures = 0;
    auto report = [&](const std::string& id, const std::function<void(Outcome&)>& body) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << "(" << fmt(secs, 3) << " s)"
                  << std::endl;
    };

    report("AC1", ac1);
    report("AC2", ac2);
    report("AC3", ac3);

    MainRun main_run;
    std::string main_error;
    try {
        main_run = main_ensemble(threads);
    } catch (const std::exception& e) {
        main_error = e.what();
    }
    auto with_main = [&](void (*fn)(Outcome&, const MainRun&)) {
        return [&, fn](Outcome& o) {
            if (!main_error.empty()) throw std::runtime_error("main ensemble failed: " + main_error);
            fn(o, main_run);
        };
    };

    report("AC4", with_main(ac4));
    report("AC5", with_main(ac5));
    report("AC6", with_main(ac6));
    report("AC7", [&](Outcome& o) { ac7(o, threads); });
    report("AC8", [&](Outcome& o) { ac8(o, threads); });
    report("AC9", with_main(ac9));
    report("AC10", with_main(ac10));
    report("AC11", [&](Outcome& o) { ac11(o, work, cli); });

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
