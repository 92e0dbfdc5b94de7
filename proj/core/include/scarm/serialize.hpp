#pragma once

#include <json.hpp>

#include "scarm/estimators.hpp"
#include "scarm/inference.hpp"
#include "scarm/nuisance.hpp"
#include "scarm/pipeline.hpp"
#include "scarm/power.hpp"
#include "scarm/simulation.hpp"

namespace scarm {

using json = nlohmann::json;

inline json double_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline json to_json(const AttEstimate& e) {
    json j{{"method", to_string(e.method)},
           {"tau_hat", e.tau_hat},
           {"variance", double_or_null(e.variance)},
           {"ci95", {double_or_null(e.ci_lo), double_or_null(e.ci_hi)}},
           {"n1_used", e.n1_used},
           {"n0_used", e.n0_used}};
    j["gamma_hat"] = e.gamma_hat ? json(*e.gamma_hat) : json(nullptr);
    j["diagnostics"] = e.diagnostics;
    return j;
}

inline json to_json(const OverlapRegion& r) {
    return json{{"lower", r.lower},
                {"upper", r.upper},
                {"kept_treated", r.kept_treated},
                {"kept_control", r.kept_control},
                {"dropped_treated", r.dropped_treated},
                {"dropped_control", r.dropped_control}};
}

inline json to_json(const VarianceComponents& c) {
    return json{{"sigma1_sq", double_or_null(c.sigma1_sq)},
                {"sigma0_sq", double_or_null(c.sigma0_sq)},
                {"kappa_sq", double_or_null(c.kappa_sq)},
                {"rho0", double_or_null(c.rho0)},
                {"delta", double_or_null(c.delta)},
                {"gamma", double_or_null(c.gamma)},
                {"n1", c.n1},
                {"n0", c.n0},
                {"delta_optimistic", c.delta_optimistic}};
}

inline json to_json(const PropensityModel& m) {
    json coef = json::array();
    for (Eigen::Index i = 0; i < m.fit.coef.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        coef.push_back({{"feature", idx < m.feature_names.size() ? m.feature_names[idx]
                                                                 : "f" + std::to_string(idx)},
                        {"value", m.fit.coef(i)}});
    }
    return json{{"lambda", m.lambda},
                {"intercept", m.fit.intercept},
                {"coefficients", coef},
                {"clip", m.clip},
                {"converged", m.fit.converged},
                {"iterations", m.fit.iterations},
                {"grad_sup_norm", m.fit.grad_sup_norm},
                {"fold_lambdas", m.fold_lambdas},
                {"fold_assignment", m.fold_assignment},
                {"warnings", m.warnings}};
}

inline json to_json(const OutcomeModel& m) {
    json folds = json::array();
    for (std::size_t k = 0; k < m.fold_models.size(); ++k) {
        json h;
        for (const auto& [key, val] : m.fold_models[k]->hyperparams()) h[key] = val;
        folds.push_back({{"fold", k}, {"hyperparams", h}});
    }
    return json{{"kind", to_string(m.kind)},
                {"velocity", m.velocity},
                {"outer_folds", m.plan.outer_folds},
                {"inner_folds", m.plan.inner_folds},
                {"fold_hyper", m.fold_hyper},
                {"subject_fold", m.subject_fold},
                {"folds", folds}};
}

inline json to_json(const GammaEstimate& g) {
    return json{{"value", g.value},      {"method", g.method}, {"raw_value", g.raw_value},
                {"sum_w2", g.sum_w2},    {"n1", g.n1},         {"n0", g.n0},
                {"d_m_sq", g.d_m_sq}};
}

inline json to_json(const McResult& r) {
    return json{{"method", to_string(r.method)},
                {"reps", r.reps},
                {"failures", r.failures},
                {"oracle_tau", r.oracle_tau},
                {"mean_tau_hat", r.mean_tau_hat},
                {"mc_se", r.mc_se},
                {"empirical_variance", r.empirical_variance},
                {"mean_formula_variance", r.mean_formula_variance},
                {"coverage95", r.coverage95},
                {"rejection_rate", r.rejection_rate}};
}

inline json to_json(const SweepRow& r) {
    return json{{"beta", r.beta},
                {"method", to_string(r.method)},
                {"mean_abs_std_bias", r.mean_abs_std_bias},
                {"mean_var_ratio", r.mean_var_ratio},
                {"mean_gamma", r.mean_gamma},
                {"resamples", r.resamples},
                {"failures", r.failures}};
}

inline json to_json(const EligibilityReport& r) {
    json rules = json::array();
    for (const auto& p : r.per_rule)
        rules.push_back({{"column", p.column},
                         {"excluded_failed", p.excluded_failed},
                         {"excluded_missing", p.excluded_missing}});
    return json{{"rows_in", r.rows_in}, {"rows_kept", r.rows_kept}, {"per_rule", rules}};
}

} // namespace scarm
