#include "scarm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scarm/errors.hpp"
#include "scarm/rng.hpp"
#include "scarm/stats.hpp"

namespace scarm {

DirectOutcomeFit fit_outcome_direct(const PooledSample& sample,
                                    const CovariateTable& feature_table,
                                    const OutcomeConfig& config, std::uint64_t seed) {
    const MaskedMatrix all = to_masked(feature_table);
    const auto control = sample.control_rows();
    const auto treated = sample.treated_rows();

    OutcomeTrainingData data;
    data.subject_features = masked_rows(all, control);
    data.subject_ids.reserve(control.size());
    for (auto r : control) data.subject_ids.push_back(sample.subject_id()[r]);
    data.row_subject.resize(control.size());
    std::iota(data.row_subject.begin(), data.row_subject.end(), 0);
    data.target.resize(static_cast<Eigen::Index>(control.size()));
    for (std::size_t i = 0; i < control.size(); ++i)
        data.target(static_cast<Eigen::Index>(i)) = sample.outcome()[control[i]];

    OutcomeConfig cfg = config;
    cfg.plan.seed = seed;
    DirectOutcomeFit out{std::vector<double>(sample.n(), std::numeric_limits<double>::quiet_NaN()),
                         fit_outcome(data, cfg)};
    for (std::size_t i = 0; i < control.size(); ++i)
        out.mu0_all[control[i]] = out.fit.oof_subject_pred[i];
    const auto fresh = out.fit.model.predict_fresh(masked_rows(all, treated));
    for (std::size_t i = 0; i < treated.size(); ++i) out.mu0_all[treated[i]] = fresh[i];
    return out;
}

namespace {

// mu0 for every sample row in velocity mode: y0 + v_hat (t_eval - t0), with
// out-of-fold velocities on control subjects and fold-averaged velocities on
// treated subjects.
struct VelocityFit {
    std::vector<double> mu0_all;
    OutcomeFitResult fit;
};

VelocityFit fit_outcome_velocity(const PooledSample& sample, const VelocityModelData& vel,
                                 const OutcomeConfig& config, std::uint64_t seed) {
    if (vel.y0.size() != sample.n() || vel.t0.size() != sample.n() ||
        vel.t_eval.size() != sample.n() || vel.control_training_index.size() != sample.n())
        throw ValidationError("velocity data not aligned with the estimation sample");
    OutcomeConfig cfg = config;
    cfg.plan.seed = seed;
    VelocityFit out{std::vector<double>(sample.n(), std::numeric_limits<double>::quiet_NaN()),
                    fit_outcome(vel.training, cfg)};
    out.fit.model.velocity = true;

    const auto treated = sample.treated_rows();
    MaskedMatrix all = to_masked(sample.covariates());
    const auto fresh_v = out.fit.model.predict_fresh(masked_rows(all, treated));
    for (std::size_t i = 0; i < treated.size(); ++i) {
        const std::size_t r = treated[i];
        out.mu0_all[r] = vel.y0[r] + fresh_v[i] * (vel.t_eval[r] - vel.t0[r]);
    }
    for (std::size_t r = 0; r < sample.n(); ++r) {
        if (sample.treatment()[r]) continue;
        const std::ptrdiff_t s = vel.control_training_index[r];
        if (s < 0)
            throw EstimationError("control subject '" + sample.subject_id()[r] +
                                  "' has no velocity training index");
        out.mu0_all[r] =
            vel.y0[r] + out.fit.oof_subject_pred[static_cast<std::size_t>(s)] *
                            (vel.t_eval[r] - vel.t0[r]);
    }
    return out;
}

template <typename T>
std::vector<T> subset_by(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

bool uses_outcome(const std::vector<Method>& ms) {
    return std::any_of(ms.begin(), ms.end(),
                       [](Method m) { return m == Method::OM || m == Method::AIPW; });
}

bool uses_weighting(const std::vector<Method>& ms) {
    return std::any_of(ms.begin(), ms.end(),
                       [](Method m) { return m == Method::IPW || m == Method::AIPW; });
}

} // namespace

AnalysisResult run_analysis(const PooledSample& sample, const AnalysisConfig& config,
                            const VelocityModelData* velocity) {
    if (config.methods.empty()) throw ConfigError("no estimators requested");
    AnalysisResult res;

    // nuisances, out of fold
    PropensityConfig pcfg = config.propensity;
    pcfg.plan.seed = derive_seed(config.seed, 1);
    auto pfit = fit_propensity(sample, pcfg);
    res.e_hat = pfit.oof;
    res.propensity_model = std::move(pfit.model);
    for (const auto& w : res.propensity_model.warnings) res.warnings.push_back(w);

    std::optional<OutcomeModel> outcome_model;
    if (uses_outcome(config.methods)) {
        if (velocity) {
            auto vfit =
                fit_outcome_velocity(sample, *velocity, config.outcome, derive_seed(config.seed, 2));
            res.mu0_all = std::move(vfit.mu0_all);
            outcome_model = std::move(vfit.fit.model);
        } else {
            auto dfit = fit_outcome_direct(sample, sample.covariates(), config.outcome,
                                           derive_seed(config.seed, 2));
            res.mu0_all = std::move(dfit.mu0_all);
            outcome_model = std::move(dfit.fit.model);
        }
    }

    res.components = estimate_components(sample, res.e_hat, res.mu0_all, config.kappa_form);
    res.rho0 = res.components.rho0;
    res.rho0_degenerate = res.components.rho0_degenerate;

    TrimResult trim;
    std::vector<double> mu0_trim;
    VarianceComponents comps_trim = res.components;
    bool have_trim = false;
    if (config.trim_overlap_weighting && uses_weighting(config.methods)) {
        trim = trim_overlap(sample, res.e_hat);
        if (!res.mu0_all.empty()) mu0_trim = subset_by(res.mu0_all, trim.kept_rows);
        comps_trim = estimate_components(trim.sample, trim.e_hat, mu0_trim, config.kappa_form);
        res.overlap = trim.region;
        have_trim = true;
    }

    // PSM inputs (optionally restricted to the overlap region as well)
    const PooledSample* psm_sample = &sample;
    const std::vector<double>* psm_e = &res.e_hat;
    if (config.trim_psm) {
        if (!have_trim) {
            trim = trim_overlap(sample, res.e_hat);
            if (!res.mu0_all.empty()) mu0_trim = subset_by(res.mu0_all, trim.kept_rows);
            res.overlap = trim.region;
            have_trim = true;
        }
        psm_sample = &trim.sample;
        psm_e = &trim.e_hat;
    }

    for (Method method : config.methods) {
        AttEstimate est;
        switch (method) {
            case Method::PSM: {
                auto [e, match] = psm_att(*psm_sample, *psm_e, config.psm);
                est = e;
                break;
            }
            case Method::IPW:
                est = ipw_att(have_trim ? trim.sample : sample,
                              have_trim ? trim.e_hat : res.e_hat);
                break;
            case Method::OM:
                est = om_att(sample, res.mu0_all);
                break;
            case Method::AIPW:
                est = aipw_att(have_trim ? trim.sample : sample,
                               have_trim ? trim.e_hat : res.e_hat,
                               have_trim && !mu0_trim.empty() ? mu0_trim : res.mu0_all);
                break;
        }

        if (config.variance == VarianceScheme::Asymptotic) {
            switch (method) {
                case Method::PSM: {
                    VarianceComponents c = res.components;
                    c.n1 = est.n1_used;
                    est.set_variance(asymptotic_variance(Method::PSM, c, config.psm_variance_form));
                    break;
                }
                case Method::IPW:
                    est.set_variance(
                        asymptotic_variance(Method::IPW, have_trim ? comps_trim : res.components));
                    break;
                case Method::OM:
                    est.set_variance(asymptotic_variance(Method::OM, res.components));
                    break;
                case Method::AIPW: {
                    const PooledSample& s = have_trim ? trim.sample : sample;
                    const auto& e = have_trim ? trim.e_hat : res.e_hat;
                    const auto& mu = have_trim && !mu0_trim.empty() ? mu0_trim : res.mu0_all;
                    est.set_variance(eif_variance(eif_values(s, e, mu, est.tau_hat)));
                    break;
                }
            }
        } else {
            // §-style bootstrap schemes: nuisances refit for PSM/IPW/OM,
            // held fixed for AIPW; subsampling for the matching estimator.
            const std::uint64_t bseed = derive_seed(config.seed, 100 + static_cast<int>(method));
            ResampleVariance rv;
            switch (method) {
                case Method::PSM: {
                    auto replicate = [&](const std::vector<std::size_t>& rows,
                                         std::uint64_t rep_seed) {
                        const PooledSample s = psm_sample->subset(rows);
                        PropensityConfig pc = config.propensity;
                        pc.plan.seed = rep_seed;
                        const auto e = fit_propensity(s, pc).oof;
                        return psm_att(s, e, config.psm).first.tau_hat;
                    };
                    rv = subsample_variance(*psm_sample, replicate, config.subsample_b,
                                            config.bootstrap_B, bseed, config.threads);
                    break;
                }
                case Method::IPW: {
                    auto replicate = [&](const std::vector<std::size_t>& rows,
                                         std::uint64_t rep_seed) {
                        const PooledSample s = sample.resample(rows);
                        PropensityConfig pc = config.propensity;
                        pc.plan.seed = rep_seed;
                        const auto e = fit_propensity(s, pc).oof;
                        if (config.trim_overlap_weighting) {
                            const TrimResult t = trim_overlap(s, e);
                            return ipw_att(t.sample, t.e_hat).tau_hat;
                        }
                        return ipw_att(s, e).tau_hat;
                    };
                    rv = bootstrap_variance(sample, replicate, config.bootstrap_B, bseed,
                                            config.threads);
                    break;
                }
                case Method::OM: {
                    if (velocity)
                        throw ConfigError("bootstrap OM variance with a velocity model requires "
                                          "per-subject visit resampling; use the asymptotic "
                                          "scheme for velocity-mode OM");
                    auto replicate = [&](const std::vector<std::size_t>& rows,
                                         std::uint64_t rep_seed) {
                        const PooledSample s = sample.resample(rows);
                        const auto fit =
                            fit_outcome_direct(s, s.covariates(), config.outcome, rep_seed);
                        return om_att(s, fit.mu0_all).tau_hat;
                    };
                    rv = bootstrap_variance(sample, replicate, config.bootstrap_B, bseed,
                                            config.threads);
                    break;
                }
                case Method::AIPW: {
                    auto replicate = [&](const std::vector<std::size_t>& rows,
                                         std::uint64_t /*rep_seed*/) {
                        const PooledSample s = sample.resample(rows);
                        const auto e = subset_by(res.e_hat, rows);
                        const auto mu = subset_by(res.mu0_all, rows);
                        if (config.trim_overlap_weighting) {
                            const TrimResult t = trim_overlap(s, e);
                            return aipw_att(t.sample, t.e_hat, subset_by(mu, t.kept_rows))
                                .tau_hat;
                        }
                        return aipw_att(s, e, mu).tau_hat;
                    };
                    rv = bootstrap_variance(sample, replicate, config.bootstrap_B, bseed,
                                            config.threads);
                    break;
                }
            }
            res.bootstrap_failures += rv.failed;
            est.set_variance(rv.variance);
        }
        res.estimates.push_back(std::move(est));
    }
    res.outcome_model = std::move(outcome_model);
    return res;
}

} // namespace scarm
