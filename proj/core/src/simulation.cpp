#include "scarm/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "scarm/errors.hpp"
#include "scarm/parallel.hpp"
#include "scarm/pipeline.hpp"
#include "scarm/rng.hpp"
#include "scarm/stats.hpp"

namespace scarm {

void DgpSpec::validate() const {
    if (d < 1) throw ValidationError("dgp: d must be >= 1");
    auto check_dim = [&](const Eigen::VectorXd& v, const char* name) {
        if (v.size() != 0 && static_cast<std::size_t>(v.size()) != d)
            throw ValidationError(std::string("dgp: ") + name + " must have d entries or be empty");
    };
    check_dim(mean_shift, "mean_shift");
    check_dim(outcome_coef, "outcome_coef");
    check_dim(quad_coef, "quad_coef");
    check_dim(tau_x_coef, "tau_x_coef");
    check_dim(assign_coef, "assign_coef");
    if (covariance.rows() != static_cast<Eigen::Index>(d) ||
        covariance.cols() != static_cast<Eigen::Index>(d))
        throw ValidationError("dgp: covariance must be d x d");
    if (!(noise_sd >= 0.0)) throw ValidationError("dgp: noise_sd must be non-negative");
    if (assignment == AssignmentKind::TwoPopulation) {
        if (n1 < 2 || n0 < 2) throw ValidationError("dgp: two-population needs n1, n0 >= 2");
    } else {
        if (n < 4) throw ValidationError("dgp: logistic assignment needs n >= 4");
    }
}

namespace {

struct Sampler {
    Eigen::MatrixXd chol; // lower factor of the covariance
    explicit Sampler(const Eigen::MatrixXd& cov) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw ValidationError("dgp: covariance matrix is not positive definite");
        chol = llt.matrixL();
    }
    Eigen::VectorXd draw(const Eigen::VectorXd& mean, Rng& rng) const {
        std::normal_distribution<double> N(0.0, 1.0);
        Eigen::VectorXd z(chol.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = N(rng);
        return mean + chol * z;
    }
};

double dot_or_zero(const Eigen::VectorXd& coef, const Eigen::VectorXd& x) {
    return coef.size() == 0 ? 0.0 : coef.dot(x);
}

double control_mean_fn(const DgpSpec& spec, const Eigen::VectorXd& x) {
    double f = dot_or_zero(spec.outcome_coef, x);
    if (spec.quad_coef.size() != 0) f += spec.quad_coef.dot(x.cwiseProduct(x).eval());
    return f;
}

double effect_fn(const DgpSpec& spec, const Eigen::VectorXd& x) {
    return spec.tau + dot_or_zero(spec.tau_x_coef, x);
}

// log-density difference log phi1(x) - log phi0(x) for the shared-covariance
// pair; the Bayes propensity of the pooled two-population design follows.
struct TruePropensity {
    Eigen::MatrixXd prec;
    Eigen::VectorXd m1;
    double logit_p1 = 0.0;
    TruePropensity(const DgpSpec& spec) : m1(spec.mean_shift) {
        prec = spec.covariance.llt().solve(
            Eigen::MatrixXd::Identity(spec.covariance.rows(), spec.covariance.cols()));
        if (m1.size() == 0) m1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.d));
        const double p1 = static_cast<double>(spec.n1) /
                          static_cast<double>(spec.n1 + spec.n0);
        logit_p1 = std::log(p1 / (1.0 - p1));
    }
    double operator()(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd d1 = x - m1;
        const double q1 = d1.dot(prec * d1);
        const double q0 = x.dot(prec * x);
        return sigmoid(logit_p1 - 0.5 * (q1 - q0));
    }
};

double clip_unit(double e) { return std::min(1.0 - 1e-12, std::max(1e-12, e)); }

} // namespace

SimulatedSample generate_pooled(const DgpSpec& spec, std::uint64_t seed) {
    spec.validate();
    auto rng = make_rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const Sampler sampler(spec.covariance);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.d));
    Eigen::VectorXd m1 = spec.mean_shift.size() ? spec.mean_shift : zero;

    std::vector<Eigen::VectorXd> xs;
    std::vector<std::uint8_t> a;
    if (spec.assignment == AssignmentKind::TwoPopulation) {
        xs.reserve(spec.n1 + spec.n0);
        for (std::size_t i = 0; i < spec.n1; ++i) {
            xs.push_back(sampler.draw(m1, rng));
            a.push_back(1);
        }
        for (std::size_t i = 0; i < spec.n0; ++i) {
            xs.push_back(sampler.draw(zero, rng));
            a.push_back(0);
        }
    } else {
        xs.reserve(spec.n);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (std::size_t i = 0; i < spec.n; ++i) {
            xs.push_back(sampler.draw(zero, rng));
            const double e = sigmoid(spec.assign_intercept + dot_or_zero(spec.assign_coef, xs.back()));
            a.push_back(U(rng) < e ? 1 : 0);
        }
    }

    const std::size_t n = xs.size();
    SimTruth truth;
    truth.e_true.resize(n);
    truth.mu0_true.resize(n);
    truth.y0.resize(n);
    truth.y1.resize(n);
    truth.tau_x.resize(n);

    TruePropensity etrue(spec);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = xs[i];
        truth.mu0_true[i] = control_mean_fn(spec, x);
        truth.tau_x[i] = effect_fn(spec, x);
        truth.y0[i] = truth.mu0_true[i] + spec.noise_sd * N(rng);
        truth.y1[i] = truth.y0[i] + truth.tau_x[i];
        y[i] = a[i] ? truth.y1[i] : truth.y0[i];
        truth.e_true[i] =
            spec.assignment == AssignmentKind::TwoPopulation
                ? clip_unit(etrue(x))
                : clip_unit(sigmoid(spec.assign_intercept + dot_or_zero(spec.assign_coef, x)));
    }

    std::vector<Column> cols(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) {
        cols[j].name = "x" + std::to_string(j + 1);
        cols[j].values.resize(n);
        cols[j].missing.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            cols[j].values[i] = xs[i](static_cast<Eigen::Index>(j));
    }
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = "s" + std::to_string(i + 1);

    std::size_t n1 = 0, n0 = 0;
    for (auto ai : a) (ai ? n1 : n0)++;
    if (n1 < 2 || n0 < 2)
        throw EstimationError("dgp draw produced a degenerate sample (n1=" + std::to_string(n1) +
                              ", n0=" + std::to_string(n0) + "); adjust the assignment model");

    return SimulatedSample{
        PooledSample(CovariateTable(std::move(cols), n), std::move(a), std::move(y),
                     std::move(ids)),
        std::move(truth)};
}

double oracle_att(const DgpSpec& spec, std::size_t n_oracle, bool force_monte_carlo,
                  std::uint64_t seed) {
    spec.validate();
    if (spec.constant_effect() && !force_monte_carlo) return spec.tau;
    if (n_oracle < 100000)
        throw ValidationError("oracle_att: n_oracle must be at least 1e5");
    auto rng = make_rng(seed);
    const Sampler sampler(spec.covariance);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.d));
    const Eigen::VectorXd m1 = spec.mean_shift.size() ? spec.mean_shift : zero;

    double acc = 0.0;
    std::size_t kept = 0;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    while (kept < n_oracle) {
        if (spec.assignment == AssignmentKind::TwoPopulation) {
            // treated covariate law is sampled directly
            acc += effect_fn(spec, sampler.draw(m1, rng));
            ++kept;
        } else {
            const Eigen::VectorXd x = sampler.draw(zero, rng);
            const double e = sigmoid(spec.assign_intercept + dot_or_zero(spec.assign_coef, x));
            if (U(rng) < e) {
                acc += effect_fn(spec, x);
                ++kept;
            }
        }
    }
    return acc / static_cast<double>(n_oracle);
}

CovariateTable squared_covariates(const CovariateTable& table) {
    std::vector<Column> cols;
    cols.reserve(table.n_cols());
    for (const auto& c : table.columns()) {
        Column s = c;
        s.name = c.name + "_sq";
        for (auto& v : s.values) v = v * v;
        cols.push_back(std::move(s));
    }
    return CovariateTable(std::move(cols), table.n_rows());
}

namespace {

std::vector<double> fitted_e_hat(const PooledSample& sample, const PropensityConfig& cfg,
                                 bool squared, std::uint64_t seed) {
    PropensityConfig c = cfg;
    c.plan.seed = seed;
    if (!squared) return fit_propensity(sample, c).oof;
    return fit_propensity_raw(to_masked(squared_covariates(sample.covariates())),
                              sample.treatment(), c)
        .oof;
}

std::vector<double> fitted_mu0_all(const PooledSample& sample, const OutcomeConfig& cfg,
                                   bool squared, std::uint64_t seed) {
    const CovariateTable table =
        squared ? squared_covariates(sample.covariates()) : sample.covariates();
    return fit_outcome_direct(sample, table, cfg, seed).mu0_all;
}

template <typename T>
std::vector<T> subset_by(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

struct RepOutcome {
    double tau = std::numeric_limits<double>::quiet_NaN();
    double formula_var = std::numeric_limits<double>::quiet_NaN();
    double cover = std::numeric_limits<double>::quiet_NaN();
    double reject = std::numeric_limits<double>::quiet_NaN();
    bool failed = true;
};

} // namespace

std::vector<McResult> run_mc(const DgpSpec& spec, const McEstimatorSpec& es, std::size_t reps,
                             std::uint64_t seed, unsigned threads) {
    if (reps < 100) throw ConfigError("run_mc needs reps >= 100");
    const bool needs_e =
        es.propensity != ModelSource::None ||
        std::any_of(es.methods.begin(), es.methods.end(), [](Method m) {
            return m == Method::PSM || m == Method::IPW || m == Method::AIPW;
        });
    const bool needs_mu0 = std::any_of(es.methods.begin(), es.methods.end(), [](Method m) {
        return m == Method::OM || m == Method::AIPW;
    });
    if (needs_e && es.propensity == ModelSource::None)
        throw ConfigError("run_mc: the requested estimators need a propensity source");
    if (needs_mu0 && es.outcome == ModelSource::None)
        throw ConfigError("run_mc: the requested estimators need an outcome-model source");

    const double oracle = oracle_att(spec, 200000, false, derive_seed(seed, 0xACE));
    const double zcrit = normal_quantile(1.0 - es.alpha / 2.0);
    const std::size_t m = es.methods.size();
    std::vector<std::vector<RepOutcome>> out(m, std::vector<RepOutcome>(reps));

    parallel_for(reps, threads, [&](std::size_t rep) {
        const std::uint64_t rep_seed = derive_seed(seed, rep + 1);
        try {
            const SimulatedSample sim = generate_pooled(spec, derive_seed(rep_seed, 0));
            const PooledSample& sample = sim.sample;

            std::vector<double> e_hat;
            if (needs_e) {
                switch (es.propensity) {
                    case ModelSource::Oracle: e_hat = sim.truth.e_true; break;
                    case ModelSource::Fitted:
                        e_hat = fitted_e_hat(sample, es.propensity_config, false,
                                             derive_seed(rep_seed, 1));
                        break;
                    case ModelSource::Misspecified:
                        e_hat = fitted_e_hat(sample, es.propensity_config, true,
                                             derive_seed(rep_seed, 1));
                        break;
                    case ModelSource::None: break;
                }
            }
            std::vector<double> mu0_all;
            if (needs_mu0) {
                switch (es.outcome) {
                    case ModelSource::Oracle: mu0_all = sim.truth.mu0_true; break;
                    case ModelSource::Fitted:
                        mu0_all = fitted_mu0_all(sample, es.outcome_config, false,
                                                 derive_seed(rep_seed, 2));
                        break;
                    case ModelSource::Misspecified:
                        mu0_all = fitted_mu0_all(sample, es.outcome_config, true,
                                                 derive_seed(rep_seed, 2));
                        break;
                    case ModelSource::None: break;
                }
            }

            const VarianceComponents comps_full =
                estimate_components(sample, e_hat, mu0_all, es.kappa_form);

            bool have_trim = false;
            TrimResult trim;
            std::vector<double> mu0_trim;
            VarianceComponents comps_trim;
            const bool wants_weighting =
                std::any_of(es.methods.begin(), es.methods.end(),
                            [](Method mm) { return mm == Method::IPW || mm == Method::AIPW; });
            if (wants_weighting && es.trim_overlap_weighting) {
                trim = trim_overlap(sample, e_hat);
                if (!mu0_all.empty()) mu0_trim = subset_by(mu0_all, trim.kept_rows);
                comps_trim = estimate_components(trim.sample, trim.e_hat, mu0_trim, es.kappa_form);
                have_trim = true;
            }

            for (std::size_t k = 0; k < m; ++k) {
                RepOutcome& ro = out[k][rep];
                try {
                    const Method method = es.methods[k];
                    AttEstimate est;
                    double formula_var = std::numeric_limits<double>::quiet_NaN();
                    double ci_var = std::numeric_limits<double>::quiet_NaN();
                    switch (method) {
                        case Method::PSM: {
                            auto [e, match] = psm_att(sample, e_hat, es.psm);
                            est = e;
                            VarianceComponents c = comps_full;
                            c.n1 = est.n1_used;
                            formula_var = asymptotic_variance(Method::PSM, c,
                                                              es.psm_variance_form);
                            ci_var = formula_var;
                            break;
                        }
                        case Method::IPW: {
                            const PooledSample& s = have_trim ? trim.sample : sample;
                            const auto& e = have_trim ? trim.e_hat : e_hat;
                            est = ipw_att(s, e);
                            formula_var = asymptotic_variance(
                                Method::IPW, have_trim ? comps_trim : comps_full);
                            ci_var = formula_var;
                            break;
                        }
                        case Method::OM: {
                            est = om_att(sample, mu0_all);
                            formula_var = asymptotic_variance(Method::OM, comps_full);
                            ci_var = formula_var;
                            break;
                        }
                        case Method::AIPW: {
                            const PooledSample& s = have_trim ? trim.sample : sample;
                            const auto& e = have_trim ? trim.e_hat : e_hat;
                            const auto& mu = have_trim && !mu0_trim.empty() ? mu0_trim : mu0_all;
                            est = aipw_att(s, e, mu);
                            formula_var = asymptotic_variance(
                                Method::AIPW, have_trim ? comps_trim : comps_full);
                            ci_var = es.aipw_ci == CiVariance::Eif
                                         ? eif_variance(eif_values(s, e, mu, est.tau_hat))
                                         : formula_var;
                            break;
                        }
                    }
                    ro.tau = est.tau_hat;
                    ro.formula_var = formula_var;
                    const double half = 1.96 * std::sqrt(ci_var);
                    ro.cover = (oracle >= est.tau_hat - half && oracle <= est.tau_hat + half)
                                   ? 1.0
                                   : 0.0;
                    ro.reject = std::abs(est.tau_hat) / std::sqrt(ci_var) > zcrit ? 1.0 : 0.0;
                    ro.failed = false;
                } catch (const EstimationError&) {
                    ro.failed = true;
                }
            }
        } catch (const EstimationError&) {
            // whole-rep failure already marked in every slot
        }
    });

    std::vector<McResult> results;
    results.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> tau, fvar, cover, reject;
        std::size_t failures = 0;
        for (const auto& ro : out[k]) {
            if (ro.failed) {
                ++failures;
                continue;
            }
            tau.push_back(ro.tau);
            fvar.push_back(ro.formula_var);
            cover.push_back(ro.cover);
            reject.push_back(ro.reject);
        }
        if (failures * 20 > reps)
            throw EstimationError("run_mc: more than 5% of replications failed for " +
                                  to_string(es.methods[k]));
        McResult r;
        r.method = es.methods[k];
        r.reps = tau.size();
        r.failures = failures;
        r.oracle_tau = oracle;
        r.mean_tau_hat = mean(std::span<const double>(tau));
        r.empirical_variance = sample_variance(std::span<const double>(tau));
        r.mc_se = std::sqrt(r.empirical_variance / static_cast<double>(tau.size()));
        r.mean_formula_variance = mean(std::span<const double>(fvar));
        r.coverage95 = mean(std::span<const double>(cover));
        r.rejection_rate = mean(std::span<const double>(reject));
        results.push_back(r);
    }
    return results;
}

std::vector<std::size_t> beta_resample_indices(const std::vector<double>& e_hat, double beta,
                                               std::size_t draw, std::uint64_t seed) {
    if (beta < 0.0) throw ValidationError("beta must be non-negative");
    if (e_hat.empty()) throw ValidationError("beta_resample: empty pool");
    std::vector<double> logw(e_hat.size());
    for (std::size_t i = 0; i < e_hat.size(); ++i) {
        const double e = e_hat[i];
        if (!(e > 0.0 && e < 1.0))
            throw ValidationError("beta_resample: propensity outside (0,1)");
        logw[i] = beta * (std::log1p(-e) - std::log(e));
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(e_hat.size());
    double sw = 0.0, sw2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(logw[i] - mx);
        sw += w[i];
        sw2 += w[i] * w[i];
    }
    if (!(sw > 0.0) || sw * sw / sw2 < 2.0)
        throw EstimationError("beta_resample: degenerate resampling weights (effective sample "
                              "size below 2)");
    std::vector<double> cum(w.size());
    std::partial_sum(w.begin(), w.end(), cum.begin());
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> U(0.0, sw);
    std::vector<std::size_t> idx(draw);
    for (std::size_t k = 0; k < draw; ++k) {
        const double u = U(rng);
        idx[k] = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (idx[k] >= w.size()) idx[k] = w.size() - 1;
    }
    return idx;
}

std::vector<SweepRow> sweep_beta(const SweepConfig& cfg, std::uint64_t seed, unsigned threads) {
    if (cfg.beta_grid.empty()) throw ConfigError("sweep: empty beta grid");
    if (!std::is_sorted(cfg.beta_grid.begin(), cfg.beta_grid.end()))
        throw ConfigError("sweep: beta grid must be sorted ascending");
    if (cfg.resamples_per_beta < 1) throw ConfigError("sweep: resamples_per_beta must be >= 1");

    const SimulatedSample base = generate_pooled(cfg.dgp, derive_seed(seed, 0xBA5E));
    const PooledSample& sample = base.sample;
    const auto treated = sample.treated_rows();
    const auto controls = sample.control_rows();

    std::vector<double> y0;
    y0.reserve(controls.size());
    for (auto r : controls) y0.push_back(sample.outcome()[r]);
    const double sd_hist = std::sqrt(sample_variance(std::span<const double>(y0)));
    if (!(sd_hist > 0.0)) throw EstimationError("sweep: historical outcome SD is zero");

    // resampling weights come from one fit on the unmodified pool
    PropensityConfig pool_cfg = cfg.propensity_config;
    pool_cfg.plan.seed = derive_seed(seed, 0xF17);
    const auto pool_fit = fit_propensity(sample, pool_cfg);
    std::vector<double> e_ctrl;
    e_ctrl.reserve(controls.size());
    for (auto r : controls) e_ctrl.push_back(pool_fit.oof[r]);

    const std::vector<Method> methods = {Method::PSM, Method::IPW, Method::OM, Method::AIPW};
    const std::size_t nb = cfg.beta_grid.size();
    const std::size_t R = cfg.resamples_per_beta;
    struct Cell {
        std::array<double, 4> var{}, bias{};
        std::array<bool, 4> ok{};
        double gamma = std::numeric_limits<double>::quiet_NaN();
        bool generated = false;
    };
    std::vector<Cell> cells(nb * R);

    parallel_for(nb * R, threads, [&](std::size_t task) {
        const std::size_t bi = task / R;
        const double beta = cfg.beta_grid[bi];
        const std::uint64_t task_seed = derive_seed(seed, 1000 + task);
        Cell& cell = cells[task];
        try {
            const auto pick =
                beta_resample_indices(e_ctrl, beta, controls.size(), derive_seed(task_seed, 0));
            std::vector<std::size_t> rows = treated;
            rows.reserve(treated.size() + pick.size());
            for (auto k : pick) rows.push_back(controls[k]);
            const PooledSample resampled = sample.resample(rows);

            PropensityConfig pc = cfg.propensity_config;
            pc.plan.seed = derive_seed(task_seed, 1);
            const auto e_hat = fit_propensity(resampled, pc).oof;
            const auto mu0_all =
                fitted_mu0_all(resampled, cfg.outcome_config, false, derive_seed(task_seed, 2));

            const VarianceComponents comps_full =
                estimate_components(resampled, e_hat, mu0_all, cfg.kappa_form);
            cell.gamma = comps_full.gamma;
            cell.generated = true;

            TrimResult trim;
            std::vector<double> mu0_trim;
            VarianceComponents comps_trim = comps_full;
            bool have_trim = false;
            if (cfg.trim_overlap_weighting) {
                trim = trim_overlap(resampled, e_hat);
                mu0_trim = subset_by(mu0_all, trim.kept_rows);
                comps_trim = estimate_components(trim.sample, trim.e_hat, mu0_trim, cfg.kappa_form);
                have_trim = true;
            }

            for (std::size_t k = 0; k < methods.size(); ++k) {
                try {
                    AttEstimate est;
                    double fvar = std::numeric_limits<double>::quiet_NaN();
                    switch (methods[k]) {
                        case Method::PSM: {
                            auto [e, match] = psm_att(resampled, e_hat, cfg.psm);
                            est = e;
                            VarianceComponents c = comps_full;
                            c.n1 = est.n1_used;
                            fvar = asymptotic_variance(Method::PSM, c, cfg.psm_variance_form);
                            break;
                        }
                        case Method::IPW:
                            est = ipw_att(have_trim ? trim.sample : resampled,
                                          have_trim ? trim.e_hat : e_hat);
                            fvar = asymptotic_variance(Method::IPW,
                                                       have_trim ? comps_trim : comps_full);
                            break;
                        case Method::OM:
                            est = om_att(resampled, mu0_all);
                            fvar = asymptotic_variance(Method::OM, comps_full);
                            break;
                        case Method::AIPW:
                            est = aipw_att(have_trim ? trim.sample : resampled,
                                           have_trim ? trim.e_hat : e_hat,
                                           have_trim ? mu0_trim : mu0_all);
                            fvar = asymptotic_variance(Method::AIPW,
                                                       have_trim ? comps_trim : comps_full);
                            break;
                    }
                    cell.var[k] = fvar;
                    cell.bias[k] = standardized_bias(est.tau_hat, cfg.expected_tau, sd_hist);
                    cell.ok[k] = true;
                } catch (const EstimationError&) {
                    cell.ok[k] = false;
                }
            }
        } catch (const EstimationError&) {
            cell.generated = false;
        }
    });

    // reference: mean PSM variance over the first grid point's resamples
    // (the unmodified pool when the grid starts at beta = 0)
    double ref;
    {
        std::vector<double> v;
        for (std::size_t r = 0; r < R; ++r)
            if (cells[r].generated && cells[r].ok[0]) v.push_back(cells[r].var[0]);
        if (v.empty()) throw EstimationError("sweep: no successful PSM reference resamples");
        ref = mean(std::span<const double>(v));
    }

    std::vector<SweepRow> rows;
    for (std::size_t bi = 0; bi < nb; ++bi) {
        for (std::size_t k = 0; k < methods.size(); ++k) {
            std::vector<double> vr, bs, gs;
            std::size_t fail = 0;
            for (std::size_t r = 0; r < R; ++r) {
                const Cell& cell = cells[bi * R + r];
                if (!cell.generated || !cell.ok[k]) {
                    ++fail;
                    continue;
                }
                vr.push_back(cell.var[k] / ref);
                bs.push_back(cell.bias[k]);
                gs.push_back(cell.gamma);
            }
            SweepRow row;
            row.beta = cfg.beta_grid[bi];
            row.method = methods[k];
            row.resamples = vr.size();
            row.failures = fail;
            row.mean_var_ratio = vr.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : mean(std::span<const double>(vr));
            row.mean_abs_std_bias = bs.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : mean(std::span<const double>(bs));
            row.mean_gamma = gs.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : mean(std::span<const double>(gs));
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace scarm
