#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scarm/data.hpp"
#include "scarm/folds.hpp"
#include "scarm/imputer.hpp"
#include "scarm/logistic.hpp"
#include "scarm/regressors.hpp"

namespace scarm {

// Per-feature (mean, sd) scaling fitted after imputation. Constant columns
// are dropped with a warning rather than erroring.
class Standardizer {
public:
    void fit(const Eigen::MatrixXd& X, const std::vector<std::string>& names);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
    const std::vector<std::size_t>& kept() const { return kept_; }
    const std::vector<std::string>& dropped() const { return dropped_; }
    const Eigen::VectorXd& means() const { return mean_; }
    const Eigen::VectorXd& sds() const { return sd_; }

private:
    Eigen::VectorXd mean_, sd_;          // over kept columns
    std::vector<std::size_t> kept_;
    std::vector<std::string> dropped_;
    Eigen::Index n_input_ = 0;
};

// impute -> standardize, refit per training fold so held-out rows never leak
// into the preprocessing.
struct FeaturePipeline {
    Imputer imputer;
    Standardizer standardizer;
    void fit(const MaskedMatrix& data);
    Eigen::MatrixXd transform(const MaskedMatrix& data) const;
};

extern const std::vector<double> kDefaultLambdaGrid; // 9 points, 1e-4 .. 1e4

struct PropensityConfig {
    std::vector<double> lambda_grid = kDefaultLambdaGrid;
    CrossFitPlan plan;
    double clip = 1e-6;
    double tol = 1e-8;
    int max_iter = 100;
    int imputer_rounds = 5;
};

struct PropensityModel {
    FeaturePipeline pipeline;  // fitted on all rows
    LogisticFit fit;           // refit on all rows at the selected lambda
    double lambda = 0.0;
    double clip = 1e-6;
    std::vector<std::string> feature_names;   // post-drop
    std::vector<double> fold_lambdas;
    std::vector<std::size_t> fold_assignment; // outer fold per row
    std::vector<std::string> warnings;

    // e(X) for fresh rows, clipped into [clip, 1-clip].
    std::vector<double> predict(const MaskedMatrix& rows) const;
};

struct PropensityFitResult {
    PropensityModel model;
    std::vector<double> oof; // out-of-fold e_hat, aligned with input rows
};

// Nested stratified cross-validation: outer folds produce out-of-fold
// probabilities, inner folds pick lambda by held-out log-likelihood.
PropensityFitResult fit_propensity(const PooledSample& sample, const PropensityConfig& config);

// Same machinery on an explicit (features, label) pair; used by design-stage
// gamma estimation where there is no outcome.
PropensityFitResult fit_propensity_raw(const MaskedMatrix& features,
                                       const std::vector<std::uint8_t>& label,
                                       const PropensityConfig& config);

struct OutcomeConfig {
    RegressorKind kind = RegressorKind::Ridge;
    std::vector<double> hyper_grid = kDefaultLambdaGrid; // lambda or k values
    CrossFitPlan plan;
    int imputer_rounds = 5;
};

// Training data for the control-outcome regressor, already restricted to
// control subjects. In velocity mode there is one training row per
// post-baseline visit and one evaluation row per subject; in direct mode a
// subject is a single row predicting the outcome itself.
struct OutcomeTrainingData {
    MaskedMatrix subject_features;        // one row per control subject
    std::vector<std::string> subject_ids; // aligned with subject_features
    std::vector<std::size_t> row_subject; // training row -> subject index
    Eigen::VectorXd target;               // per training row
};

struct OutcomeModel {
    RegressorKind kind = RegressorKind::Ridge;
    bool velocity = false;
    std::vector<FeaturePipeline> fold_pipelines;
    std::vector<std::unique_ptr<Regressor>> fold_models;
    std::vector<double> fold_hyper;
    std::vector<std::size_t> subject_fold; // outer fold per training subject
    std::vector<std::string> subject_ids;
    CrossFitPlan plan;

    // Fresh rows are scored by averaging the outer-fold models.
    std::vector<double> predict_fresh(const MaskedMatrix& rows) const;
};

struct OutcomeFitResult {
    OutcomeModel model;
    std::vector<double> oof_subject_pred; // per training subject, regressor scale
};

// Nested grouped cross-validation on the hyper grid, minimizing held-out MSE
// of the regressor target. A subject's out-of-fold prediction comes from the
// fold model that never saw that subject.
OutcomeFitResult fit_outcome(const OutcomeTrainingData& data, const OutcomeConfig& config);

// Pearson correlation between out-of-fold control predictions and observed
// control outcomes, clamped to [-1, 1]; returns 0 with a warning flag when
// the predictions are degenerate.
double estimate_rho0(const std::vector<double>& mu0_oof, const std::vector<double>& y_control,
                     bool* degenerate = nullptr);

} // namespace scarm
