#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "salab/linear_theory.hpp"

namespace salab {

struct ModelSpec {
    LinearSAModel model;
    std::optional<double> a;  // set when the chain is the two-state family
    std::optional<FiniteTimeBoundParams> bound;
    std::string label;
};

struct InitSpec {
    enum class Kind { Gaussian, Fixed };
    Kind kind = Kind::Gaussian;
    std::optional<Eigen::VectorXd> mean;  // Gaussian: defaults to theta*
    double cov_scale = 25.0;
    Eigen::VectorXd value;  // Fixed

    /// Mean of theta_0 for a given model.
    [[nodiscard]] Eigen::VectorXd center(const LinearSAModel& model) const;
};

struct GridPoint {
    double alpha0 = 0.5;
    double rho = 0.6;
};

struct ExperimentConfig {
    std::vector<ModelSpec> models;
    std::vector<GridPoint> grid;
    std::int64_t M = 300;
    std::int64_t N = 300000;
    std::int64_t N0 = 2000;
    std::uint64_t base_seed = 1;
    InitSpec init;
    std::filesystem::path output_dir = "out";
    bool emit_plots = false;
    int n_checkpoints = 60;
    std::vector<std::int64_t> rate_checkpoints;
};

void validate(const ExperimentConfig& cfg);

/// Parses a configuration document. Unknown keys are rejected with ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses a model document alone (the "model" entry of a configuration).
std::vector<ModelSpec> parse_models(const nlohmann::json& doc);

/// Parses a chain given as a row-major matrix or as {"kind": "two_state", "a": ...}.
FiniteMarkovChain parse_chain(const nlohmann::json& doc, std::optional<double>* two_state_a = nullptr);

}  // namespace salab
