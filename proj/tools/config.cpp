#include "config.hpp"

#include <algorithm>

#include "scarm/errors.hpp"

namespace scarm::cli {

ConfigReader::ConfigReader(const json& node, std::string path)
    : node_(node), path_(std::move(path)) {
    if (!node_.is_object())
        throw ConfigError("config error at " + (path_.empty() ? "/" : path_) +
                          ": expected an object");
}

const json* ConfigReader::find(const std::string& key) const {
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
}

bool ConfigReader::has(const std::string& key) const {
    const json* v = find(key);
    return v && !v->is_null();
}

ConfigReader ConfigReader::child(const std::string& key) {
    mark(key);
    const json* v = find(key);
    if (!v) missing(key);
    return ConfigReader(*v, path_ + "/" + key);
}

std::optional<ConfigReader> ConfigReader::child_optional(const std::string& key) {
    mark(key);
    const json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    return ConfigReader(*v, path_ + "/" + key);
}

const json& ConfigReader::raw(const std::string& key) {
    mark(key);
    const json* v = find(key);
    if (!v) missing(key);
    return *v;
}

void ConfigReader::finish() const {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : node_.items())
        if (!consumed_.count(key)) unknown.push_back(path_ + "/" + key);
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const auto& u : unknown) msg += " " + u;
        throw ConfigError(msg);
    }
}

void ConfigReader::fail(const std::string& message) const {
    throw ConfigError("config error at " + (path_.empty() ? "/" : path_) + ": " + message);
}

void ConfigReader::missing(const std::string& key) const {
    throw ConfigError("config error: missing required key " + path_ + "/" + key);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::vector<double> double_list(ConfigReader& r, const std::string& key) {
    const json& v = r.raw(key);
    if (!v.is_array()) r.fail(key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) r.fail(key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

CrossFitPlan parse_plan(ConfigReader& r) {
    CrossFitPlan plan;
    plan.outer_folds = r.value_or<std::size_t>("outer_folds", 5);
    plan.inner_folds = r.value_or<std::size_t>("inner_folds", 3);
    if (plan.outer_folds < 2) r.fail("outer_folds must be >= 2");
    if (plan.inner_folds < 2) r.fail("inner_folds must be >= 2");
    return plan;
}

PropensityConfig parse_propensity(std::optional<ConfigReader> r) {
    PropensityConfig cfg;
    if (!r) return cfg;
    if (r->has("lambda_grid")) cfg.lambda_grid = double_list(*r, "lambda_grid");
    else r->value_or<int>("lambda_grid", 0);
    if (cfg.lambda_grid.empty()) r->fail("lambda_grid must be non-empty");
    cfg.clip = r->value_or<double>("clip", 1e-6);
    if (!(cfg.clip > 0.0 && cfg.clip < 0.5)) r->fail("clip must lie in (0, 0.5)");
    cfg.plan = parse_plan(*r);
    cfg.imputer_rounds = r->value_or<int>("imputer_rounds", 5);
    r->finish();
    return cfg;
}

OutcomeConfig parse_outcome(std::optional<ConfigReader> r) {
    OutcomeConfig cfg;
    if (!r) return cfg;
    cfg.kind = regressor_kind_from_string(r->value_or<std::string>("kind", "ridge"));
    if (r->has("hyper_grid")) cfg.hyper_grid = double_list(*r, "hyper_grid");
    else r->value_or<int>("hyper_grid", 0);
    if (cfg.hyper_grid.empty()) r->fail("hyper_grid must be non-empty");
    if (cfg.kind == RegressorKind::Knn &&
        std::any_of(cfg.hyper_grid.begin(), cfg.hyper_grid.end(),
                    [](double k) { return k < 1.0 || k != std::floor(k); }))
        r->fail("knn hyper_grid entries must be positive integers");
    cfg.plan = parse_plan(*r);
    cfg.imputer_rounds = r->value_or<int>("imputer_rounds", 5);
    r->finish();
    return cfg;
}

PsmOptions parse_psm(std::optional<ConfigReader> r, bool* trim_psm) {
    PsmOptions psm;
    if (!r) return psm;
    psm.with_replacement = r->value_or<bool>("with_replacement", true);
    psm.caliper_scale = r->value_or<double>("caliper_scale", 0.2);
    if (!(psm.caliper_scale > 0.0)) r->fail("caliper_scale must be positive");
    if (trim_psm) *trim_psm = r->value_or<bool>("trim", false);
    r->finish();
    return psm;
}

std::vector<Method> parse_methods(ConfigReader& r, const std::string& key) {
    const json& v = r.raw(key);
    if (!v.is_array() || v.empty()) r.fail(key + " must be a non-empty array");
    std::vector<Method> out;
    for (const auto& e : v) out.push_back(method_from_string(e.get<std::string>()));
    return out;
}

DgpSpec parse_dgp(ConfigReader r) {
    DgpSpec dgp;
    dgp.d = r.require<std::size_t>("d");
    if (r.has("mean_shift")) dgp.mean_shift = to_vector(double_list(r, "mean_shift"));
    else r.value_or<int>("mean_shift", 0);
    if (r.has("covariance")) {
        const json& cov = r.raw("covariance");
        if (!cov.is_array()) r.fail("covariance must be a matrix (array of rows)");
        dgp.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                              static_cast<Eigen::Index>(cov.size()));
        for (std::size_t i = 0; i < cov.size(); ++i) {
            if (!cov[i].is_array() || cov[i].size() != cov.size())
                r.fail("covariance must be square");
            for (std::size_t j = 0; j < cov.size(); ++j)
                dgp.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    cov[i][j].get<double>();
        }
    } else {
        r.value_or<int>("covariance", 0);
        dgp.covariance = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dgp.d),
                                                   static_cast<Eigen::Index>(dgp.d));
    }
    if (r.has("outcome_coef")) dgp.outcome_coef = to_vector(double_list(r, "outcome_coef"));
    else r.value_or<int>("outcome_coef", 0);
    if (r.has("quad_coef")) dgp.quad_coef = to_vector(double_list(r, "quad_coef"));
    else r.value_or<int>("quad_coef", 0);
    if (r.has("tau_x_coef")) dgp.tau_x_coef = to_vector(double_list(r, "tau_x_coef"));
    else r.value_or<int>("tau_x_coef", 0);
    dgp.noise_sd = r.value_or<double>("noise_sd", 1.0);
    dgp.tau = r.require<double>("tau");

    ConfigReader assign = r.child("assignment");
    const std::string kind = assign.require<std::string>("kind");
    if (kind == "two-population") {
        dgp.assignment = AssignmentKind::TwoPopulation;
        dgp.n1 = assign.require<std::size_t>("n1");
        dgp.n0 = assign.require<std::size_t>("n0");
    } else if (kind == "logistic") {
        dgp.assignment = AssignmentKind::Logistic;
        if (assign.has("coef")) dgp.assign_coef = to_vector(double_list(assign, "coef"));
        else assign.value_or<int>("coef", 0);
        dgp.assign_intercept = assign.value_or<double>("intercept", 0.0);
        dgp.n = assign.require<std::size_t>("n");
    } else {
        assign.fail("kind must be two-population or logistic");
    }
    assign.finish();
    r.finish();
    dgp.validate();
    return dgp;
}

ModelSource parse_source(ConfigReader& r, const std::string& key, ModelSource fallback) {
    const std::string s = r.value_or<std::string>(key, "");
    if (s.empty()) return fallback;
    if (s == "oracle") return ModelSource::Oracle;
    if (s == "fitted") return ModelSource::Fitted;
    if (s == "misspecified") return ModelSource::Misspecified;
    if (s == "none") return ModelSource::None;
    r.fail(key + " must be oracle|fitted|misspecified|none");
}

EstimateCommand parse_estimate(ConfigReader r) {
    EstimateCommand cmd;
    ConfigReader input = r.child("input");
    cmd.csv_path = input.require<std::string>("csv");
    ConfigReader schema = input.child("schema");
    cmd.schema.id = schema.require<std::string>("id");
    cmd.schema.treatment = schema.require<std::string>("treatment");
    cmd.schema.outcome = schema.value_or<std::string>("outcome", "");
    cmd.schema.covariates = schema.value_or<std::vector<std::string>>("covariates", {});
    if (cmd.schema.covariates.empty()) schema.fail("covariates must name at least one column");

    std::vector<EligibilityRule> rules;
    if (schema.has("eligibility")) {
        const json& arr = schema.raw("eligibility");
        if (!arr.is_array()) schema.fail("eligibility must be an array of rules");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ConfigReader rr(arr[i], schema.path() + "/eligibility/" + std::to_string(i));
            EligibilityRule rule;
            rule.column = rr.require<std::string>("column");
            const bool has_min = rr.has("min"), has_max = rr.has("max"), has_in = rr.has("in");
            if (has_min) {
                rule.kind = EligibilityRule::Kind::Min;
                rule.threshold = rr.require<double>("min");
                rules.push_back(rule);
            }
            if (has_max) {
                rule.kind = EligibilityRule::Kind::Max;
                rule.threshold = rr.require<double>("max");
                rules.push_back(rule);
            }
            if (has_in) {
                rule.kind = EligibilityRule::Kind::InSet;
                const json& vals = rr.raw("in");
                if (!vals.is_array() || vals.empty()) rr.fail("'in' must be a non-empty array");
                rule.values.clear();
                for (const auto& v : vals) rule.values.push_back(v.get<double>());
                rules.push_back(rule);
            }
            if (!has_min && !has_max && !has_in) rr.fail("rule needs one of min/max/in");
            rr.finish();
        }
        cmd.has_eligibility = true;
    } else {
        schema.value_or<int>("eligibility", 0);
    }
    cmd.eligibility = EligibilityFilter(std::move(rules));
    schema.finish();
    input.finish();

    if (auto visits = r.child_optional("visits"); visits) {
        cmd.velocity = true;
        cmd.visits_csv = visits->require<std::string>("csv");
        ConfigReader vs = visits->child("schema");
        cmd.visits_schema.id = vs.require<std::string>("id");
        cmd.visits_schema.time = vs.require<std::string>("time");
        cmd.visits_schema.value = vs.require<std::string>("value");
        vs.finish();
        cmd.horizon = visits->require<double>("horizon");
        cmd.window = visits->value_or<double>("window", 60.0);
        if (!(cmd.window > 0.0)) visits->fail("window must be positive");
        visits->finish();
    }
    if (!cmd.velocity && cmd.schema.outcome.empty())
        schema.fail("outcome column required unless a visits block enables velocity mode");

    cmd.analysis.methods = parse_methods(r, "estimators");
    cmd.analysis.propensity = parse_propensity(r.child_optional("nuisance_propensity"));
    cmd.analysis.outcome = parse_outcome(r.child_optional("nuisance_outcome"));
    cmd.analysis.psm = parse_psm(r.child_optional("psm"), &cmd.analysis.trim_psm);
    cmd.analysis.trim_overlap_weighting = r.value_or<bool>("trim_overlap", true);

    if (auto inf = r.child_optional("inference"); inf) {
        const std::string v = inf->value_or<std::string>("variance", "bootstrap");
        if (v == "bootstrap") cmd.analysis.variance = VarianceScheme::Bootstrap;
        else if (v == "asymptotic") cmd.analysis.variance = VarianceScheme::Asymptotic;
        else inf->fail("variance must be bootstrap|asymptotic");
        cmd.analysis.bootstrap_B = inf->value_or<std::size_t>("bootstrap_B", 200);
        cmd.analysis.subsample_b = inf->value_or<std::size_t>("subsample_b", 0);
        const std::string kf = inf->value_or<std::string>("kappa_form", "rho0");
        if (kf == "rho0") cmd.analysis.kappa_form = KappaForm::FromRho0;
        else if (kf == "residual") cmd.analysis.kappa_form = KappaForm::ResidualVariance;
        else inf->fail("kappa_form must be rho0|residual");
        inf->finish();
    }

    cmd.expected_tau = r.value_or<double>("expected_tau", 0.0);
    if (r.has("sd_hist")) cmd.sd_hist = r.require<double>("sd_hist");
    else r.value_or<int>("sd_hist", 0);
    r.finish();
    return cmd;
}

DesignCommand parse_design(ConfigReader r) {
    DesignCommand cmd;
    cmd.spec.alpha = r.value_or<double>("alpha", 0.05);
    cmd.spec.tau = r.require<double>("tau");
    if (r.has("kappa_sq")) {
        cmd.spec.kappa_sq = r.require<double>("kappa_sq");
        cmd.rho0 = r.value_or<double>("rho0", 0.0);
    } else {
        r.value_or<int>("kappa_sq", 0);
        const double sigma0_sq = r.value_or<double>("sigma0_sq", -1.0);
        if (sigma0_sq < 0.0)
            r.fail("provide kappa_sq or sigma0_sq (optionally with rho0)");
        cmd.rho0 = r.value_or<double>("rho0", 0.0); // conservative default
        cmd.spec.kappa_sq = PowerSpec::kappa_from(sigma0_sq, cmd.rho0);
    }
    cmd.spec.n0 = r.require<std::size_t>("n0");
    if (r.has("n1")) {
        cmd.spec.n1 = r.require<std::size_t>("n1");
        cmd.have_n1 = true;
    } else {
        r.value_or<int>("n1", 0);
    }
    if (r.has("target_power")) cmd.target_power = r.require<double>("target_power");
    else r.value_or<int>("target_power", 0);
    if (!cmd.have_n1 && !cmd.target_power)
        r.fail("provide n1, target_power, or both");

    // gamma: direct value, SMD heuristic, or pilot propensity fit
    if (r.has("gamma")) {
        cmd.gamma.value = r.require<double>("gamma");
        cmd.gamma.raw_value = cmd.gamma.value;
        cmd.gamma.method = "direct";
        if (!(cmd.gamma.value > 0.0 && cmd.gamma.value <= 1.0))
            r.fail("gamma must lie in (0,1]");
    } else if (r.has("gamma_smd")) {
        r.value_or<int>("gamma", 0);
        ConfigReader g = r.child("gamma_smd");
        std::vector<double> smds;
        if (g.has("smds")) smds = double_list(g, "smds");
        else g.value_or<int>("smds", 0);
        std::vector<std::pair<double, double>> binary;
        if (g.has("binary")) {
            const json& arr = g.raw("binary");
            if (!arr.is_array()) g.fail("binary must be an array of {pi1, pi0}");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                ConfigReader b(arr[i], g.path() + "/binary/" + std::to_string(i));
                binary.emplace_back(b.require<double>("pi1"), b.require<double>("pi0"));
                b.finish();
            }
        } else {
            g.value_or<int>("binary", 0);
        }
        g.finish();
        cmd.gamma = gamma_smd(smds, binary);
    } else if (r.has("gamma_pilot")) {
        r.value_or<int>("gamma", 0);
        r.value_or<int>("gamma_smd", 0);
        ConfigReader g = r.child("gamma_pilot");
        const std::string trial_csv = g.require<std::string>("trial_csv");
        const std::string hist_csv = g.require<std::string>("historical_csv");
        const auto covs = g.require<std::vector<std::string>>("covariates");
        PropensityConfig pcfg = parse_propensity(g.child_optional("propensity"));
        g.finish();
        auto load_table = [&](const std::string& path) {
            const CsvTable t = read_csv(path);
            std::vector<Column> cols;
            for (const auto& name : covs) {
                const std::size_t j = t.column_index(name);
                Column c;
                c.name = name;
                for (std::size_t i = 0; i < t.rows.size(); ++i) {
                    const std::string& cell = t.rows[i][j];
                    if (cell.empty() || cell == "NA") {
                        c.values.push_back(0.0);
                        c.missing.push_back(1);
                    } else {
                        c.values.push_back(std::stod(cell));
                        c.missing.push_back(0);
                    }
                }
                cols.push_back(std::move(c));
            }
            return CovariateTable(std::move(cols), t.rows.size());
        };
        cmd.gamma = gamma_pilot(load_table(trial_csv), load_table(hist_csv), pcfg);
    } else {
        r.fail("provide gamma, gamma_smd (SMD heuristic inputs), or gamma_pilot "
               "(proxy cohort CSVs)");
    }
    cmd.spec.gamma = cmd.gamma.value;

    cmd.grid_n0_over_n1 = r.value_or<std::vector<double>>(
        "grid_n0_over_n1", {0.5, 1, 2, 3, 4, 5, 7.5, 10, 15, 20, 30, 50, 100});
    cmd.grid_gamma = r.value_or<std::vector<double>>(
        "grid_gamma", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
    r.finish();
    return cmd;
}

SimulateCommand parse_simulate(ConfigReader r) {
    SimulateCommand cmd;
    cmd.dgp = parse_dgp(r.child("dgp"));
    cmd.reps = r.value_or<std::size_t>("reps", 500);
    if (r.has("estimators")) cmd.estimator.methods = parse_methods(r, "estimators");
    else r.value_or<int>("estimators", 0);
    cmd.estimator.propensity = parse_source(r, "propensity_source", ModelSource::Fitted);
    cmd.estimator.outcome = parse_source(r, "outcome_source", ModelSource::Fitted);
    cmd.estimator.propensity_config = parse_propensity(r.child_optional("nuisance_propensity"));
    cmd.estimator.outcome_config = parse_outcome(r.child_optional("nuisance_outcome"));
    cmd.estimator.psm.with_replacement = false;
    bool trim_psm_unused = false;
    if (r.has("psm")) cmd.estimator.psm = parse_psm(r.child_optional("psm"), &trim_psm_unused);
    else r.value_or<int>("psm", 0);
    cmd.estimator.trim_overlap_weighting = r.value_or<bool>("trim_overlap", true);
    cmd.estimator.alpha = r.value_or<double>("alpha", 0.05);
    const std::string ci = r.value_or<std::string>("aipw_ci", "eif");
    if (ci == "eif") cmd.estimator.aipw_ci = CiVariance::Eif;
    else if (ci == "formula") cmd.estimator.aipw_ci = CiVariance::Formula;
    else r.fail("aipw_ci must be eif|formula");
    r.finish();
    return cmd;
}

SweepCommand parse_sweep(ConfigReader r) {
    SweepCommand cmd;
    cmd.config.dgp = parse_dgp(r.child("dgp"));
    if (r.has("beta_grid")) cmd.config.beta_grid = double_list(r, "beta_grid");
    else r.value_or<int>("beta_grid", 0);
    cmd.config.resamples_per_beta = r.value_or<std::size_t>("resamples_per_beta", 20);
    cmd.config.propensity_config = parse_propensity(r.child_optional("nuisance_propensity"));
    cmd.config.outcome_config = parse_outcome(r.child_optional("nuisance_outcome"));
    bool trim_psm_unused = false;
    if (r.has("psm")) cmd.config.psm = parse_psm(r.child_optional("psm"), &trim_psm_unused);
    else r.value_or<int>("psm", 0);
    cmd.config.trim_overlap_weighting = r.value_or<bool>("trim_overlap", true);
    cmd.config.expected_tau = r.value_or<double>("expected_tau", cmd.config.dgp.tau);
    r.finish();
    return cmd;
}

} // namespace

RunConfig parse_config(const json& root, std::optional<std::uint64_t> seed_override,
                       std::optional<std::string> out_override) {
    ConfigReader r(root, "");
    RunConfig cfg;
    cfg.command = r.require<std::string>("command");
    cfg.seed = seed_override.value_or(r.value_or<std::uint64_t>("seed", 0));
    r.value_or<std::uint64_t>("seed", 0);
    cfg.output_dir = out_override.value_or(r.value_or<std::string>("output_dir", "."));

    if (cfg.command == "estimate") {
        cfg.estimate = parse_estimate(r.child("estimate"));
    } else if (cfg.command == "design") {
        cfg.design = parse_design(r.child("design"));
    } else if (cfg.command == "simulate") {
        cfg.simulate = parse_simulate(r.child("simulate"));
    } else if (cfg.command == "sweep") {
        cfg.sweep = parse_sweep(r.child("sweep"));
    } else {
        r.fail("command must be one of estimate|design|simulate|sweep");
    }
    r.finish();

    json effective = root;
    effective["seed"] = cfg.seed;
    effective["output_dir"] = cfg.output_dir;
    cfg.config_hash = fnv1a_hex(effective.dump());
    return cfg;
}

} // namespace scarm::cli
