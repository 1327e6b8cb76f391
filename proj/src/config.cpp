#include "salab/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "salab/errors.hpp"

namespace salab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return obj.at(key);
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& where) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    // Allow 3e5-style literals as long as they are integral.
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(where + ": expected an integer");
}

Eigen::VectorXd as_vector(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = as_number(v[i], where);
    return out;
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
    const std::size_t rows = v.size();
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw ConfigError(where + ": rows must be non-empty arrays");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!v[i].is_array() || v[i].size() != cols) throw ConfigError(where + ": ragged matrix");
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = as_number(v[i][j], where);
    }
    return m;
}

NoiseVariant parse_noise(const json& obj, const std::string& where) {
    if (!obj.contains("noise")) return NoiseVariant::Multiplicative;
    const auto s = obj.at("noise").get<std::string>();
    if (s == "multiplicative") return NoiseVariant::Multiplicative;
    if (s == "additive") return NoiseVariant::Additive;
    throw ConfigError(where + ": noise must be 'multiplicative' or 'additive'");
}

FiniteTimeBoundParams parse_bound(const json& obj, FiniteTimeBoundParams base) {
    const std::string where = "finite_time_bound";
    check_keys(obj, {"c0", "R", "varrho", "L_fbar", "sigma_W0"}, where);
    if (obj.contains("c0")) base.c0 = as_number(obj["c0"], where);
    if (obj.contains("R")) base.R = as_number(obj["R"], where);
    if (obj.contains("varrho")) base.varrho = as_number(obj["varrho"], where);
    if (obj.contains("L_fbar")) base.L_fbar = as_number(obj["L_fbar"], where);
    if (obj.contains("sigma_W0")) base.sigma_W0 = as_number(obj["sigma_W0"], where);
    return base;
}

}  // namespace

Eigen::VectorXd InitSpec::center(const LinearSAModel& model) const {
    if (kind == Kind::Fixed) return value;
    return mean ? *mean : model.thetastar();
}

FiniteMarkovChain parse_chain(const json& doc, std::optional<double>* two_state_a) {
    if (doc.is_array()) return make_chain(as_matrix(doc, "chain"));
    check_keys(doc, {"kind", "a", "P"}, "chain");
    const auto kind = require(doc, "kind", "chain").get<std::string>();
    if (kind == "two_state") {
        const double a = as_number(require(doc, "a", "chain"), "chain.a");
        if (two_state_a) *two_state_a = a;
        return two_state(a);
    }
    if (kind == "matrix") return make_chain(as_matrix(require(doc, "P", "chain"), "chain.P"));
    throw ConfigError("chain: unknown kind '" + kind + "'");
}

std::vector<ModelSpec> parse_models(const json& doc) {
    const std::string where = "model";
    if (doc.is_array()) {
        if (doc.empty()) throw ConfigError(where + ": empty list");
        std::vector<ModelSpec> all;
        for (const auto& item : doc) {
            if (item.is_array()) throw ConfigError(where + ": nested lists are not allowed");
            for (auto& m : parse_models(item)) all.push_back(std::move(m));
        }
        return all;
    }
    if (!doc.is_object()) throw ConfigError(where + ": expected an object or a list of objects");
    const auto kind = require(doc, "kind", where).get<std::string>();
    std::vector<ModelSpec> out;

    if (kind == "paper_section3") {
        check_keys(doc, {"kind", "a", "noise", "finite_time_bound"}, where);
        const json& av = require(doc, "a", where);
        std::vector<double> as;
        if (av.is_array())
            for (const auto& v : av) as.push_back(as_number(v, "model.a"));
        else
            as.push_back(as_number(av, "model.a"));
        if (as.empty()) throw ConfigError("model.a: empty list");
        const NoiseVariant noise = parse_noise(doc, where);
        for (double a : as) {
            ModelSpec spec{paper_section3(a, noise), a, std::nullopt, {}};
            if (std::abs(2.0 * a - 1.0) > 0.0) spec.bound = paper_section3_bound_params(a, 0.5);
            if (doc.contains("finite_time_bound"))
                spec.bound = parse_bound(doc["finite_time_bound"], spec.bound.value_or(FiniteTimeBoundParams{}));
            spec.label = std::string("paper_section3") + (noise == NoiseVariant::Additive ? "_additive" : "") +
                         "(a=" + json(a).dump() + ")";
            out.push_back(std::move(spec));
        }
        return out;
    }

    if (kind == "linear") {
        check_keys(doc, {"kind", "chain", "A", "b", "noise", "finite_time_bound"}, where);
        std::optional<double> a;
        FiniteMarkovChain chain = parse_chain(require(doc, "chain", where), &a);
        const json& Aj = require(doc, "A", where);
        if (!Aj.is_array()) throw ConfigError("model.A: expected one matrix per state");
        std::vector<Eigen::MatrixXd> mats;
        for (const auto& m : Aj) mats.push_back(as_matrix(m, "model.A"));
        const Eigen::MatrixXd b = as_matrix(require(doc, "b", where), "model.b");
        LinearSAModel model = make_linear_model(std::move(chain), StateMatrixTable(std::move(mats)), StateVectorTable(b));
        if (parse_noise(doc, where) == NoiseVariant::Additive) model = additive_variant(model);
        ModelSpec spec{std::move(model), a, std::nullopt, "linear"};
        if (doc.contains("finite_time_bound")) {
            FiniteTimeBoundParams base;
            base.theta_star_norm = spec.model.thetastar().norm();
            spec.bound = parse_bound(doc["finite_time_bound"], base);
        }
        out.push_back(std::move(spec));
        return out;
    }
    throw ConfigError(where + ": unknown kind '" + kind + "'");
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.models.empty()) throw ConfigError("at least one model is required");
    if (cfg.grid.empty()) throw ConfigError("grid must list at least one (alpha0, rho)");
    if (cfg.M < 2) throw ConfigError("M must be >= 2");
    if (!(cfg.N > cfg.N0 && cfg.N0 >= 0)) throw ConfigError("require N > N0 >= 0");
    if (cfg.init.cov_scale < 0.0) throw ConfigError("cov_scale must be >= 0");
    if (cfg.n_checkpoints < 2) throw ConfigError("checkpoints must be >= 2");
    const Eigen::Index d = cfg.models.front().model.dim();
    for (const auto& m : cfg.models)
        if (m.model.dim() != d) throw ConfigError("all models must share a dimension");
    if (cfg.init.kind == InitSpec::Kind::Fixed && cfg.init.value.size() != d)
        throw ConfigError("init.value has the wrong dimension");
    if (cfg.init.mean && cfg.init.mean->size() != d) throw ConfigError("init.mean has the wrong dimension");
    for (auto n : cfg.rate_checkpoints)
        if (n < 1 || n > cfg.N) throw ConfigError("rate_checkpoints must lie in [1, N]");
    for (const auto& g : cfg.grid) StepSizeSchedule(g.alpha0, g.rho);
}

namespace {

ExperimentConfig parse_config_impl(const json& doc) {
    check_keys(doc,
               {"model", "grid", "M", "N", "N0", "base_seed", "init", "output_dir", "emit_plots", "checkpoints",
                "rate_checkpoints"},
               "config");
    ExperimentConfig cfg;
    try {
        cfg.models = parse_models(require(doc, "model", "config"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }

    const json& grid = require(doc, "grid", "config");
    if (!grid.is_array()) throw ConfigError("grid: expected an array of {alpha0, rho}");
    for (const auto& g : grid) {
        check_keys(g, {"alpha0", "rho"}, "grid");
        cfg.grid.push_back({as_number(require(g, "alpha0", "grid"), "grid.alpha0"),
                            as_number(require(g, "rho", "grid"), "grid.rho")});
    }
    if (doc.contains("M")) cfg.M = as_integer(doc["M"], "M");
    if (doc.contains("N")) cfg.N = as_integer(doc["N"], "N");
    if (doc.contains("N0")) cfg.N0 = as_integer(doc["N0"], "N0");
    if (doc.contains("base_seed")) {
        const json& s = doc["base_seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw ConfigError("base_seed: expected a non-negative integer");
        cfg.base_seed = s.get<std::uint64_t>();
    }
    if (doc.contains("init")) {
        const json& in = doc["init"];
        check_keys(in, {"kind", "mean", "cov_scale", "value"}, "init");
        const auto kind = require(in, "kind", "init").get<std::string>();
        if (kind == "gaussian") {
            cfg.init.kind = InitSpec::Kind::Gaussian;
            if (in.contains("mean") && !(in["mean"].is_string() && in["mean"] == "theta_star"))
                cfg.init.mean = as_vector(in["mean"], "init.mean");
            if (in.contains("cov_scale")) cfg.init.cov_scale = as_number(in["cov_scale"], "init.cov_scale");
        } else if (kind == "fixed") {
            cfg.init.kind = InitSpec::Kind::Fixed;
            cfg.init.value = as_vector(require(in, "value", "init"), "init.value");
        } else {
            throw ConfigError("init: kind must be 'gaussian' or 'fixed'");
        }
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("emit_plots")) cfg.emit_plots = doc["emit_plots"].get<bool>();
    if (doc.contains("checkpoints")) cfg.n_checkpoints = static_cast<int>(as_integer(doc["checkpoints"], "checkpoints"));
    if (doc.contains("rate_checkpoints")) {
        for (const auto& v : doc["rate_checkpoints"]) cfg.rate_checkpoints.push_back(as_integer(v, "rate_checkpoints"));
    }
    try {
        validate(cfg);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    try {
        return parse_config_impl(doc);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace salab
