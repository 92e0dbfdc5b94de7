#include "scarm/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scarm/errors.hpp"
#include "scarm/rng.hpp"
#include "scarm/stats.hpp"

namespace scarm {

const std::vector<double> kDefaultLambdaGrid = [] {
    std::vector<double> g;
    for (int i = 0; i < 9; ++i) g.push_back(std::pow(10.0, -4.0 + i));
    return g;
}();

void Standardizer::fit(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    n_input_ = X.cols();
    kept_.clear();
    dropped_.clear();
    std::vector<double> means, sds;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double m = X.col(j).mean();
        const double ss = (X.col(j).array() - m).square().sum();
        const double sd = std::sqrt(ss / std::max<double>(1.0, static_cast<double>(X.rows() - 1)));
        if (sd <= 1e-12) {
            dropped_.push_back(j < static_cast<Eigen::Index>(names.size())
                                   ? names[static_cast<std::size_t>(j)]
                                   : "col" + std::to_string(j));
            continue;
        }
        kept_.push_back(static_cast<std::size_t>(j));
        means.push_back(m);
        sds.push_back(sd);
    }
    mean_ = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    sd_ = Eigen::Map<Eigen::VectorXd>(sds.data(), static_cast<Eigen::Index>(sds.size()));
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_input_) throw EstimationError("standardizer: column count mismatch");
    Eigen::MatrixXd Z(X.rows(), static_cast<Eigen::Index>(kept_.size()));
    for (std::size_t c = 0; c < kept_.size(); ++c)
        Z.col(static_cast<Eigen::Index>(c)) =
            (X.col(static_cast<Eigen::Index>(kept_[c])).array() -
             mean_(static_cast<Eigen::Index>(c))) /
            sd_(static_cast<Eigen::Index>(c));
    return Z;
}

void FeaturePipeline::fit(const MaskedMatrix& data) {
    imputer.fit(data);
    const Eigen::MatrixXd filled = imputer.transform(data);
    standardizer.fit(filled, data.names);
}

Eigen::MatrixXd FeaturePipeline::transform(const MaskedMatrix& data) const {
    return standardizer.transform(imputer.transform(data));
}

namespace {

std::vector<std::size_t> rows_in_fold(const std::vector<std::size_t>& fold, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] == k) out.push_back(i);
    return out;
}

std::vector<std::size_t> rows_not_in_fold(const std::vector<std::size_t>& fold, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] != k) out.push_back(i);
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
    return out;
}

template <typename T>
std::vector<T> gather_vec(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

LogisticFit fit_logistic_guarded(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                 double lambda, const PropensityConfig& cfg,
                                 std::vector<std::string>* warnings) {
    LogisticFit fit = fit_logistic(Z, y, lambda, cfg.tol, cfg.max_iter);
    if (fit.suspected_separation) {
        const double lmax = *std::max_element(cfg.lambda_grid.begin(), cfg.lambda_grid.end());
        if (lmax > lambda) {
            if (warnings)
                warnings->push_back("suspected separation at lambda=" + std::to_string(lambda) +
                                    "; refit at largest grid lambda=" + std::to_string(lmax));
            fit = fit_logistic(Z, y, lmax, cfg.tol, cfg.max_iter);
        } else if (warnings) {
            warnings->push_back("suspected separation persists at the largest grid lambda");
        }
    }
    return fit;
}

double heldout_loglik(const LogisticFit& fit, const Eigen::MatrixXd& Zval,
                      const Eigen::VectorXd& yval, double clip) {
    const Eigen::VectorXd p = fit.predict_proba(Zval, clip);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        ll += yval(i) * std::log(p(i)) + (1.0 - yval(i)) * std::log(1.0 - p(i));
    return ll;
}

// Inner stratified CV: total held-out log-likelihood per lambda, ties toward
// the larger lambda.
double select_lambda_inner(const MaskedMatrix& features, const Eigen::VectorXd& y,
                           const std::vector<std::uint8_t>& label, const PropensityConfig& cfg,
                           std::uint64_t seed, std::vector<std::string>* warnings) {
    const auto& grid = cfg.lambda_grid;
    if (grid.size() == 1) return grid[0];
    const auto inner = stratified_folds(label, cfg.plan.inner_folds, seed);
    std::vector<double> ll(grid.size(), 0.0);
    for (std::size_t m = 0; m < cfg.plan.inner_folds; ++m) {
        const auto tr = rows_not_in_fold(inner, m);
        const auto val = rows_in_fold(inner, m);
        if (tr.empty() || val.empty()) continue;
        FeaturePipeline pipe;
        pipe.fit(masked_rows(features, tr));
        const Eigen::MatrixXd Ztr = pipe.transform(masked_rows(features, tr));
        const Eigen::MatrixXd Zval = pipe.transform(masked_rows(features, val));
        const Eigen::VectorXd ytr = gather(y, tr);
        const Eigen::VectorXd yval = gather(y, val);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const LogisticFit fit = fit_logistic_guarded(Ztr, ytr, grid[g], cfg, warnings);
            ll[g] += heldout_loglik(fit, Zval, yval, cfg.clip);
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (ll[g] > ll[best] || (ll[g] == ll[best] && grid[g] > grid[best])) best = g;
    }
    return grid[best];
}

} // namespace

std::vector<double> PropensityModel::predict(const MaskedMatrix& rows) const {
    const Eigen::VectorXd p = fit.predict_proba(pipeline.transform(rows), clip);
    return {p.data(), p.data() + p.size()};
}

PropensityFitResult fit_propensity_raw(const MaskedMatrix& features,
                                       const std::vector<std::uint8_t>& label,
                                       const PropensityConfig& cfg) {
    if (cfg.lambda_grid.empty()) throw ConfigError("propensity lambda grid is empty");
    const std::size_t n = label.size();
    if (features.rows() != n) throw ValidationError("propensity: feature/label misalignment");
    std::size_t n1 = 0, n0 = 0;
    for (auto a : label) (a ? n1 : n0)++;
    if (n1 < cfg.plan.outer_folds || n0 < cfg.plan.outer_folds)
        throw ValidationError("propensity: each arm needs at least outer_folds rows (n1=" +
                              std::to_string(n1) + ", n0=" + std::to_string(n0) + ", folds=" +
                              std::to_string(cfg.plan.outer_folds) + ")");

    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = label[i];

    PropensityFitResult res;
    res.oof.assign(n, std::numeric_limits<double>::quiet_NaN());
    PropensityModel& model = res.model;
    model.clip = cfg.clip;
    model.fold_assignment = stratified_folds(label, cfg.plan.outer_folds, cfg.plan.seed);

    for (std::size_t k = 0; k < cfg.plan.outer_folds; ++k) {
        const auto tr = rows_not_in_fold(model.fold_assignment, k);
        const auto te = rows_in_fold(model.fold_assignment, k);
        if (te.empty()) {
            model.fold_lambdas.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const MaskedMatrix ftr = masked_rows(features, tr);
        const Eigen::VectorXd ytr = gather(y, tr);
        const auto ltr = gather_vec(label, tr);
        const double lam = select_lambda_inner(ftr, ytr, ltr, cfg,
                                               derive_seed(cfg.plan.seed, 101 + k),
                                               &model.warnings);
        FeaturePipeline pipe;
        pipe.fit(ftr);
        const LogisticFit fit =
            fit_logistic_guarded(pipe.transform(ftr), ytr, lam, cfg, &model.warnings);
        const Eigen::VectorXd p =
            fit.predict_proba(pipe.transform(masked_rows(features, te)), cfg.clip);
        for (std::size_t i = 0; i < te.size(); ++i)
            res.oof[te[i]] = p(static_cast<Eigen::Index>(i));
        model.fold_lambdas.push_back(fit.lambda);
    }

    // final model on all rows for fresh predictions
    model.lambda =
        select_lambda_inner(features, y, label, cfg, derive_seed(cfg.plan.seed, 100),
                            &model.warnings);
    model.pipeline.fit(features);
    model.fit = fit_logistic_guarded(model.pipeline.transform(features), y, model.lambda, cfg,
                                     &model.warnings);
    model.lambda = model.fit.lambda;
    for (auto j : model.pipeline.standardizer.kept()) model.feature_names.push_back(features.names[j]);
    for (const auto& d : model.pipeline.standardizer.dropped())
        model.warnings.push_back("constant covariate column dropped: " + d);
    return res;
}

PropensityFitResult fit_propensity(const PooledSample& sample, const PropensityConfig& cfg) {
    return fit_propensity_raw(to_masked(sample.covariates()), sample.treatment(), cfg);
}

std::vector<double> OutcomeModel::predict_fresh(const MaskedMatrix& rows) const {
    if (fold_models.empty()) throw EstimationError("outcome model: predict before fit");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.rows()));
    for (std::size_t k = 0; k < fold_models.size(); ++k)
        acc += fold_models[k]->predict(fold_pipelines[k].transform(rows));
    acc /= static_cast<double>(fold_models.size());
    return {acc.data(), acc.data() + acc.size()};
}

namespace {

// Inner grouped CV over the hyper grid, minimizing held-out SSE on the
// regressor target; ties resolve toward the later grid entry.
double select_hyper_inner(const MaskedMatrix& row_features, const Eigen::VectorXd& target,
                          const std::vector<std::string>& row_groups, const OutcomeConfig& cfg,
                          std::uint64_t seed) {
    const auto& grid = cfg.hyper_grid;
    if (grid.size() == 1) return grid[0];
    const auto inner = grouped_folds(row_groups, cfg.plan.inner_folds, seed);
    std::vector<double> sse(grid.size(), 0.0);
    for (std::size_t m = 0; m < cfg.plan.inner_folds; ++m) {
        const auto tr = rows_not_in_fold(inner, m);
        const auto val = rows_in_fold(inner, m);
        if (tr.empty() || val.empty()) continue;
        FeaturePipeline pipe;
        pipe.fit(masked_rows(row_features, tr));
        const Eigen::MatrixXd Ztr = pipe.transform(masked_rows(row_features, tr));
        const Eigen::MatrixXd Zval = pipe.transform(masked_rows(row_features, val));
        const Eigen::VectorXd ttr = gather(target, tr);
        const Eigen::VectorXd tval = gather(target, val);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            auto reg = make_regressor(cfg.kind, grid[g]);
            reg->fit(Ztr, ttr);
            sse[g] += (reg->predict(Zval) - tval).squaredNorm();
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (sse[g] <= sse[best]) best = g;
    return grid[best];
}

} // namespace

OutcomeFitResult fit_outcome(const OutcomeTrainingData& data, const OutcomeConfig& cfg) {
    if (cfg.hyper_grid.empty()) throw ConfigError("outcome hyperparameter grid is empty");
    const std::size_t n_subjects = data.subject_ids.size();
    if (data.subject_features.rows() != n_subjects)
        throw ValidationError("outcome: subject feature/id misalignment");
    if (static_cast<std::size_t>(data.target.size()) != data.row_subject.size())
        throw ValidationError("outcome: target/row misalignment");
    if (n_subjects < cfg.plan.outer_folds)
        throw ValidationError("outcome: fewer control subjects (" + std::to_string(n_subjects) +
                              ") than outer folds (" + std::to_string(cfg.plan.outer_folds) + ")");

    // replicate subject features per training row
    std::vector<std::size_t> row_idx(data.row_subject.begin(), data.row_subject.end());
    const MaskedMatrix row_features = masked_rows(data.subject_features, row_idx);
    std::vector<std::string> row_groups;
    row_groups.reserve(row_idx.size());
    for (auto s : row_idx) row_groups.push_back(data.subject_ids[s]);

    OutcomeFitResult res;
    OutcomeModel& model = res.model;
    model.kind = cfg.kind;
    model.plan = cfg.plan;
    model.subject_ids = data.subject_ids;
    model.subject_fold = grouped_folds(data.subject_ids, cfg.plan.outer_folds, cfg.plan.seed);
    res.oof_subject_pred.assign(n_subjects, std::numeric_limits<double>::quiet_NaN());

    std::vector<std::size_t> row_fold(row_idx.size());
    for (std::size_t i = 0; i < row_idx.size(); ++i) row_fold[i] = model.subject_fold[row_idx[i]];

    for (std::size_t k = 0; k < cfg.plan.outer_folds; ++k) {
        const auto tr_rows = rows_not_in_fold(row_fold, k);
        const auto te_subjects = rows_in_fold(model.subject_fold, k);
        if (tr_rows.empty())
            throw EstimationError("outcome: empty training fold " + std::to_string(k));
        const MaskedMatrix ftr = masked_rows(row_features, tr_rows);
        const Eigen::VectorXd ttr = gather(data.target, tr_rows);
        const double hyper = select_hyper_inner(ftr, ttr, gather_vec(row_groups, tr_rows), cfg,
                                                derive_seed(cfg.plan.seed, 201 + k));
        FeaturePipeline pipe;
        pipe.fit(ftr);
        auto reg = make_regressor(cfg.kind, hyper);
        reg->fit(pipe.transform(ftr), ttr);
        if (!te_subjects.empty()) {
            const Eigen::VectorXd pred =
                reg->predict(pipe.transform(masked_rows(data.subject_features, te_subjects)));
            for (std::size_t i = 0; i < te_subjects.size(); ++i)
                res.oof_subject_pred[te_subjects[i]] = pred(static_cast<Eigen::Index>(i));
        }
        model.fold_pipelines.push_back(std::move(pipe));
        model.fold_models.push_back(std::move(reg));
        model.fold_hyper.push_back(hyper);
    }
    return res;
}

double estimate_rho0(const std::vector<double>& mu0_oof, const std::vector<double>& y_control,
                     bool* degenerate) {
    if (mu0_oof.size() != y_control.size())
        throw ValidationError("rho0: prediction/outcome misalignment");
    if (mu0_oof.size() < 3)
        throw ValidationError("rho0 needs at least 3 control rows with predictions");
    if (degenerate) *degenerate = false;
    const double vp = sample_variance(std::span<const double>(mu0_oof));
    if (!(vp > 0.0)) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    const double r = pearson(std::span<const double>(mu0_oof), std::span<const double>(y_control));
    return std::clamp(r, -1.0, 1.0);
}

} // namespace scarm
