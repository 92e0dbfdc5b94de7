#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scarm/data.hpp"
#include "scarm/estimators.hpp"
#include "scarm/inference.hpp"
#include "scarm/nuisance.hpp"

namespace scarm {

enum class VarianceScheme {
    Asymptotic, // Table-style closed forms (AIPW via the EIF variance)
    Bootstrap   // refit bootstrap for PSM/IPW/OM, fixed-nuisance for AIPW,
                // subsampling for PSM
};

struct AnalysisConfig {
    std::vector<Method> methods = {Method::PSM, Method::IPW, Method::OM, Method::AIPW};
    PropensityConfig propensity;
    OutcomeConfig outcome;
    PsmOptions psm;                      // with replacement by default
    bool trim_overlap_weighting = true;  // restrict IPW/AIPW to the overlap region
    bool trim_psm = false;               // optional PSM restriction
    KappaForm kappa_form = KappaForm::FromRho0;
    PsmVarianceForm psm_variance_form = PsmVarianceForm::MarginalSigma1;
    VarianceScheme variance = VarianceScheme::Bootstrap;
    std::size_t bootstrap_B = 200;
    std::size_t subsample_b = 0;  // 0 => ceil(n^(2/3))
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

// Direct (cross-sectional) outcome fit on the control arm of a sample;
// feature_table lets callers swap in transformed covariates.
struct DirectOutcomeFit {
    std::vector<double> mu0_all; // oof on controls, fold-average on treated
    OutcomeFitResult fit;
};
DirectOutcomeFit fit_outcome_direct(const PooledSample& sample,
                                    const CovariateTable& feature_table,
                                    const OutcomeConfig& config, std::uint64_t seed);

// Longitudinal inputs for the velocity-parameterized outcome model: the
// estimation sample's outcome is the evaluation-visit value and the model
// predicts y0 + v_hat(X) (t_eval - t0).
struct VelocityModelData {
    OutcomeTrainingData training;                    // control training rows
    std::vector<double> y0, t0, t_eval;              // aligned with sample rows
    std::vector<std::ptrdiff_t> control_training_index; // -1 on treated rows
};

struct AnalysisResult {
    std::vector<AttEstimate> estimates;
    std::optional<OverlapRegion> overlap;
    VarianceComponents components; // full-sample components
    double rho0 = 0.0;
    bool rho0_degenerate = false;
    std::vector<double> e_hat;   // out-of-fold, full sample
    std::vector<double> mu0_all; // empty when no outcome model was requested
    PropensityModel propensity_model;
    std::optional<OutcomeModel> outcome_model;
    std::vector<std::string> warnings;
    std::size_t bootstrap_failures = 0;
};

// The shared methodology: out-of-fold nuisances, overlap restriction for the
// weighting estimators, caliper matching, then the configured variance scheme.
AnalysisResult run_analysis(const PooledSample& sample, const AnalysisConfig& config,
                            const VelocityModelData* velocity = nullptr);

} // namespace scarm
