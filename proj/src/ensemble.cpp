#include "salab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <span>
#include <thread>
#include <unordered_set>

#include "salab/errors.hpp"
#include "salab/sa_engine.hpp"

namespace salab {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t grid_index, std::uint64_t run_index) noexcept {
    return mix64(mix64(mix64(base_seed) ^ grid_index) ^ (run_index * 0xd1b54a32d192ed03ULL));
}

std::vector<std::int64_t> log_checkpoints(std::int64_t N, int count) {
    if (N < 1 || count < 2) throw DomainError("log_checkpoints needs N >= 1 and count >= 2");
    std::vector<std::int64_t> out;
    const double top = std::log(static_cast<double>(N));
    for (int i = 0; i < count; ++i) {
        const double v = std::exp(top * i / (count - 1));
        out.push_back(std::clamp<std::int64_t>(std::llround(v), 1, N));
    }
    out.push_back(N);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct RunTrace {
    RunResult result;
    Eigen::MatrixXd raw;  // d x checkpoints
    Eigen::MatrixXd pr;   // d x checkpoints, NaN before burn-in
};

RunTrace simulate_one(const LinearSAModel& model, const StepSizeSchedule& schedule, std::span<const double> alphas,
                      const ExperimentConfig& cfg, const std::vector<std::int64_t>& cps, std::uint64_t seed) {
    const Eigen::Index d = model.dim();
    RunTrace tr;
    tr.result.seed = seed;
    tr.raw = Eigen::MatrixXd::Constant(d, static_cast<Eigen::Index>(cps.size()), std::nan(""));
    tr.pr = tr.raw;

    // theta_0 is drawn from the run's own generator, ahead of the chain seed.
    std::mt19937_64 rng(seed);
    Eigen::VectorXd theta0 = cfg.init.center(model);
    if (cfg.init.kind == InitSpec::Kind::Gaussian && cfg.init.cov_scale > 0.0) {
        std::normal_distribution<double> normal(0.0, std::sqrt(cfg.init.cov_scale));
        for (Eigen::Index i = 0; i < d; ++i) theta0(i) += normal(rng);
    }
    const std::uint64_t chain_seed = rng();

    SARunConfig run{.schedule = schedule,
                    .n_steps = cfg.N,
                    .burn_in = cfg.N0,
                    .theta0 = theta0,
                    .chain = model.chain(),
                    .seed = chain_seed,
                    .record_stride = cfg.N,
                    .init = StationaryInit{},
                    .keep_path = false,
                    .checkpoints = cps};
    try {
        const TrajectoryRecord rec = run_sa(LinearUpdate(model), run, alphas);
        tr.result.theta_N = rec.final_theta;
        tr.result.theta_pr_N = rec.final_pr;
        std::size_t pi = 0;
        for (std::size_t i = 0; i < rec.indices.size(); ++i) {
            const auto it = std::lower_bound(cps.begin(), cps.end(), rec.indices[i]);
            if (it == cps.end() || *it != rec.indices[i]) continue;
            const auto col = static_cast<Eigen::Index>(it - cps.begin());
            tr.raw.col(col) = rec.iterates[i];
            while (pi < rec.pr_indices.size() && rec.pr_indices[pi] < rec.indices[i]) ++pi;
            if (pi < rec.pr_indices.size() && rec.pr_indices[pi] == rec.indices[i]) tr.pr.col(col) = rec.pr_iterates[pi];
        }
    } catch (const NumericalDivergence& e) {
        tr.result.ok = false;
        tr.result.error = e.what();
    }
    return tr;
}

void reduce_point(GridPointSummary& s, const std::vector<RunTrace>& traces, const std::vector<std::int64_t>& cps) {
    const Eigen::Index d = s.thetastar.size();
    const Eigen::VectorXd& ts = s.thetastar;
    std::vector<const RunTrace*> ok;
    for (const auto& t : traces)
        if (t.result.ok) ok.push_back(&t);
    s.failed_runs = s.M - static_cast<std::int64_t>(ok.size());

    s.mean = Eigen::VectorXd::Constant(d, std::nan(""));
    s.cov = Eigen::MatrixXd::Constant(d, d, std::nan(""));
    s.mse = s.trace_cov_times_N = std::nan("");
    const auto m = static_cast<double>(ok.size());
    if (ok.size() >= 2) {
        s.mean.setZero();
        for (const auto* t : ok) s.mean += t->result.theta_pr_N;
        s.mean /= m;
        s.cov.setZero();
        s.mse = 0.0;
        for (const auto* t : ok) {
            const Eigen::VectorXd c = t->result.theta_pr_N - s.mean;
            s.cov.noalias() += c * c.transpose();
            s.mse += (t->result.theta_pr_N - ts).squaredNorm();
        }
        s.cov /= (m - 1.0);
        s.mse /= m;
        s.trace_cov_times_N = static_cast<double>(s.N) * s.cov.trace();
    }

    s.curves.clear();
    for (std::size_t j = 0; j < cps.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        CheckpointStats c;
        c.n = cps[j];
        c.mean_err_raw = Eigen::VectorXd::Zero(d);
        c.mean_err_pr = Eigen::VectorXd::Zero(d);
        c.cov_pr = Eigen::MatrixXd::Zero(d, d);
        c.has_pr = !ok.empty() && c.n >= s.N0;
        if (ok.size() < 2) {
            s.curves.push_back(std::move(c));
            continue;
        }
        double sq = 0.0, sq2 = 0.0, sqp = 0.0, sqp2 = 0.0;
        for (const auto* t : ok) {
            const Eigen::VectorXd e = t->raw.col(col) - ts;
            const double n2 = e.squaredNorm();
            c.mean_err_raw += e;
            sq += n2;
            sq2 += n2 * n2;
            if (c.has_pr) {
                const Eigen::VectorXd ep = t->pr.col(col) - ts;
                c.mean_err_pr += ep;
                sqp += ep.squaredNorm();
                sqp2 += ep.squaredNorm() * ep.squaredNorm();
            }
        }
        c.mean_err_raw /= m;
        c.mse_raw = sq / m;
        c.fourth_moment_raw = sq2 / m;
        c.mse_raw_se = std::sqrt(std::max(0.0, (sq2 / m - c.mse_raw * c.mse_raw) / (m - 1.0)));
        if (c.has_pr) {
            c.mean_err_pr /= m;
            for (const auto* t : ok) {
                const Eigen::VectorXd e = t->pr.col(col) - ts - c.mean_err_pr;
                c.cov_pr.noalias() += e * e.transpose();
            }
            c.cov_pr /= (m - 1.0);
            c.mse_pr = sqp / m;
            c.mse_pr_se = std::sqrt(std::max(0.0, (sqp2 / m - c.mse_pr * c.mse_pr) / (m - 1.0)));
        }
        s.curves.push_back(std::move(c));
    }

    s.runs.clear();
    for (const auto& t : traces) s.runs.push_back(t.result);
}

}  // namespace

EnsembleSummary run_ensemble(const ExperimentConfig& cfg, int threads) {
    validate(cfg);
    threads = std::max(1, threads);

    std::vector<std::int64_t> cps = log_checkpoints(cfg.N, cfg.n_checkpoints);
    cps.insert(cps.end(), cfg.rate_checkpoints.begin(), cfg.rate_checkpoints.end());
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

    EnsembleSummary out;
    std::unordered_set<std::uint64_t> seen;
    std::size_t point_index = 0;
    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        const ModelSpec& spec = cfg.models[mi];
        for (std::size_t gi = 0; gi < cfg.grid.size(); ++gi, ++point_index) {
            const StepSizeSchedule schedule(cfg.grid[gi].alpha0, cfg.grid[gi].rho);
            const std::vector<double> alphas = schedule.table(cfg.N);

            std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.M));
            for (std::int64_t r = 0; r < cfg.M; ++r) {
                seeds[static_cast<std::size_t>(r)] = derive_seed(cfg.base_seed, point_index, static_cast<std::uint64_t>(r));
                if (!seen.insert(seeds[static_cast<std::size_t>(r)]).second)
                    throw Error("seed collision across the ensemble grid");
            }

            std::vector<RunTrace> traces(static_cast<std::size_t>(cfg.M));
            std::atomic<std::int64_t> next{0};
            auto worker = [&] {
                for (std::int64_t r = next++; r < cfg.M; r = next++) {
                    const auto ru = static_cast<std::size_t>(r);
                    traces[ru] = simulate_one(spec.model, schedule, alphas, cfg, cps, seeds[ru]);
                }
            };
            if (threads == 1) {
                worker();
            } else {
                std::vector<std::jthread> pool;
                for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
            }

            GridPointSummary s;
            s.model_index = mi;
            s.grid_index = gi;
            s.a = spec.a;
            s.label = spec.label;
            s.alpha0 = schedule.alpha0();
            s.rho = schedule.rho();
            s.M = cfg.M;
            s.N = cfg.N;
            s.N0 = cfg.N0;
            s.thetastar = spec.model.thetastar();
            s.theory = compute_theory(spec.model, schedule);
            s.bias_pred = schedule.alpha(cfg.N + 1) * s.theory.beta_theta;
            s.trace_sigma_pr = s.theory.sigma_pr.trace();
            s.mse_pred = mse_pr_predict(s.theory, schedule, cfg.N);
            if (spec.bound) {
                s.bound = spec.bound;
                s.bound->alpha0 = schedule.alpha0();
            }
            reduce_point(s, traces, cps);
            out.points.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace salab
