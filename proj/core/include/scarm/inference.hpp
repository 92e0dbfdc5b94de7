#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "scarm/data.hpp"
#include "scarm/estimators.hpp"

namespace scarm {

// Ingredients of the closed-form asymptotic variances. NaN marks a component
// that was not estimated; asymptotic_variance errors when a required one is
// absent.
struct VarianceComponents {
    double sigma1_sq = std::numeric_limits<double>::quiet_NaN(); // V[Y|A=1]
    double sigma0_sq = std::numeric_limits<double>::quiet_NaN(); // V[Y|A=0]
    double kappa_sq = std::numeric_limits<double>::quiet_NaN();  // V[Y|X,A]
    double rho0 = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::size_t n1 = 0, n0 = 0;
    bool delta_optimistic = false; // delta defaulted to 0: no outcome model fitted
    bool rho0_degenerate = false;
};

enum class PsmVarianceForm { MarginalSigma1, ConditionalKappa };
enum class KappaForm { FromRho0, ResidualVariance };

// PSM: 2 sigma1^2/n1 (or 2 kappa^2/n1); IPW: sigma1^2/n1 + (kappa^2+Delta)/(gamma n0);
// OM: kappa^2/n1; AIPW: kappa^2 (1/n1 + 1/(gamma n0)).
double asymptotic_variance(Method method, const VarianceComponents& c,
                           PsmVarianceForm psm_form = PsmVarianceForm::MarginalSigma1);

// Plug-in estimates from a sample, its propensities, and (optionally)
// out-of-fold control predictions. gamma via the pilot formula
// n1^2/n0 / sum_0 w^2; Delta via sample moments of w and mu0 over controls;
// kappa^2 as sigma0^2 (1 - rho0^2) or as the control residual variance.
VarianceComponents estimate_components(const PooledSample& sample,
                                       const std::vector<double>& e_hat,
                                       const std::vector<double>& mu0_all = {},
                                       KappaForm kappa_form = KappaForm::FromRho0);

// Efficient-influence-function values; phi averages to zero (to rounding)
// exactly when tau_ref is the AIPW point estimate.
struct EifVector {
    std::vector<double> phi;
    double tau_ref = 0.0;
};

EifVector eif_values(const PooledSample& sample, const std::vector<double>& e_hat,
                     const std::vector<double>& mu0_all, double tau_hat);

// sample variance of phi divided by n
double eif_variance(const EifVector& eif);

// One bootstrap / subsampling replicate: receives the selected row indices of
// the original sample plus a stream seed, returns tau_hat. Throwing
// EstimationError marks the replicate failed; other exceptions propagate.
using ReplicateFn = std::function<double(const std::vector<std::size_t>& rows,
                                         std::uint64_t replicate_seed)>;

struct ResampleVariance {
    double variance = 0.0;
    std::size_t used = 0;
    std::size_t failed = 0;
};

// Nonparametric bootstrap stratified by arm: n1 treated rows and n0 control
// rows drawn with replacement within their arms. Replicates failing with
// EstimationError are dropped; more than 5% failures is an error.
ResampleVariance bootstrap_variance(const PooledSample& sample, const ReplicateFn& replicate,
                                    std::size_t B, std::uint64_t seed, unsigned threads = 1);

// Politis-Romano subsampling for the matching estimator: B subsamples of
// size b without replacement (arm fractions preserved), variance rescaled by
// b/n. Default b = ceil(n^(2/3)).
ResampleVariance subsample_variance(const PooledSample& sample, const ReplicateFn& replicate,
                                    std::size_t b, std::size_t B, std::uint64_t seed,
                                    unsigned threads = 1);

std::size_t default_subsample_size(std::size_t n);

// |tau_hat - tau_expected| / sd_hist
double standardized_bias(double tau_hat, double tau_expected, double sd_hist);

} // namespace scarm
