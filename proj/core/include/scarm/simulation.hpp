#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "scarm/data.hpp"
#include "scarm/estimators.hpp"
#include "scarm/inference.hpp"
#include "scarm/nuisance.hpp"

namespace scarm {

enum class AssignmentKind { TwoPopulation, Logistic };

// Synthetic data-generating process. Covariates are Gaussian with a shared
// covariance; controls are centred at zero and the treated mean is shifted by
// mean_shift. The control outcome is
//   Y(0) = outcome_coef'X + quad_coef'(X.*X) + noise_sd * eps,
// and Y(1) = Y(0) + tau + tau_x_coef'X (constant effect when tau_x_coef is
// empty). The true propensity is retained for oracle use.
struct DgpSpec {
    std::size_t d = 1;
    Eigen::VectorXd mean_shift;   // treated minus control means
    Eigen::MatrixXd covariance;   // shared; SPD
    Eigen::VectorXd outcome_coef;
    Eigen::VectorXd quad_coef;    // empty => linear DGP
    Eigen::VectorXd tau_x_coef;   // empty => constant effect
    double noise_sd = 1.0;        // kappa
    double tau = 0.0;

    AssignmentKind assignment = AssignmentKind::TwoPopulation;
    std::size_t n1 = 0, n0 = 0;             // two-population sizes
    Eigen::VectorXd assign_coef;             // logistic assignment
    double assign_intercept = 0.0;
    std::size_t n = 0;                       // logistic pooled size
    std::uint64_t seed = 0;

    void validate() const;
    bool constant_effect() const { return tau_x_coef.size() == 0; }
};

struct SimTruth {
    std::vector<double> e_true;   // P(A=1|X) under the sampled design
    std::vector<double> mu0_true; // E[Y|X,A=0]
    std::vector<double> y0, y1;   // retained potential outcomes
    std::vector<double> tau_x;    // per-row conditional effect
};

struct SimulatedSample {
    PooledSample sample;
    SimTruth truth;
};

SimulatedSample generate_pooled(const DgpSpec& spec, std::uint64_t seed);
inline SimulatedSample generate_pooled(const DgpSpec& spec) {
    return generate_pooled(spec, spec.seed);
}

// Brute-force E[Y(1) - Y(0) | A=1] over fresh draws; the analytic shortcut
// (exact tau for constant-effect DGPs) is used unless force_monte_carlo.
double oracle_att(const DgpSpec& spec, std::size_t n_oracle, bool force_monte_carlo = false,
                  std::uint64_t seed = 12345);

enum class ModelSource { Oracle, Fitted, Misspecified, None };

// Which variance drives the per-rep confidence interval.
enum class CiVariance { Formula, Eif };

struct McEstimatorSpec {
    std::vector<Method> methods = {Method::PSM, Method::IPW, Method::OM, Method::AIPW};
    ModelSource propensity = ModelSource::Fitted;
    ModelSource outcome = ModelSource::Fitted;
    PropensityConfig propensity_config;
    OutcomeConfig outcome_config;
    bool trim_overlap_weighting = true;  // IPW / AIPW restricted to overlap
    PsmOptions psm;                      // MC default matches the variance row
    CiVariance aipw_ci = CiVariance::Eif;
    KappaForm kappa_form = KappaForm::FromRho0;
    PsmVarianceForm psm_variance_form = PsmVarianceForm::MarginalSigma1;
    double alpha = 0.05;

    McEstimatorSpec() { psm.with_replacement = false; }
};

struct McResult {
    Method method = Method::AIPW;
    std::size_t reps = 0;     // successful replications
    std::size_t failures = 0;
    double oracle_tau = 0.0;
    double mean_tau_hat = 0.0;
    double mc_se = 0.0;                  // sqrt(empirical_variance / reps)
    double empirical_variance = 0.0;     // variance of tau_hat across reps
    double mean_formula_variance = 0.0;  // closed-form rows, averaged
    double coverage95 = 0.0;             // CI covers the oracle tau
    double rejection_rate = 0.0;         // two-sided test of tau = 0
};

// Full per-rep pipeline (nuisance fits -> estimators -> variances -> CIs),
// aggregated against the brute-force oracle. Deterministic in (spec, seed)
// regardless of thread count.
std::vector<McResult> run_mc(const DgpSpec& spec, const McEstimatorSpec& estimator_spec,
                             std::size_t reps, std::uint64_t seed, unsigned threads = 1);

// Draws a same-size resample of the pool with probabilities proportional to
// ((1 - e)/e)^beta; beta = 0 is a plain bootstrap resample.
std::vector<std::size_t> beta_resample_indices(const std::vector<double>& e_hat, double beta,
                                               std::size_t draw, std::uint64_t seed);

struct SweepConfig {
    DgpSpec dgp;                       // trial arm plus historical pool
    std::vector<double> beta_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
    std::size_t resamples_per_beta = 20;
    PropensityConfig propensity_config;
    OutcomeConfig outcome_config;
    PsmOptions psm;
    bool trim_overlap_weighting = true;
    KappaForm kappa_form = KappaForm::FromRho0;
    PsmVarianceForm psm_variance_form = PsmVarianceForm::MarginalSigma1;
    double expected_tau = 0.0;
};

struct SweepRow {
    double beta = 0.0;
    Method method = Method::AIPW;
    double mean_abs_std_bias = 0.0;
    double mean_var_ratio = 0.0; // vs mean PSM variance at beta = 0
    double mean_gamma = 0.0;     // measured on the resampled pools
    std::size_t resamples = 0;
    std::size_t failures = 0;
};

// Overlap-degradation study: for each beta, resample the historical pool,
// re-run the full estimator pipeline with refreshed nuisance fits, and report
// variance via the asymptotic formulas with those fits held fixed.
std::vector<SweepRow> sweep_beta(const SweepConfig& config, std::uint64_t seed,
                                 unsigned threads = 1);

// Squared-feature copy used as the functional-form misspecification in the
// robustness experiments.
CovariateTable squared_covariates(const CovariateTable& table);

} // namespace scarm
