#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scarm/imputer.hpp"
#include "scarm/nuisance.hpp"

namespace scarm {

// Efficiency factor gamma = 1 / (1 + chi^2(P1 || P0)); multiplies n0 to give
// the effective control sample size.
struct GammaEstimate {
    double value = 1.0;
    std::string method;          // pilot | gaussian-smd | mixed | discrete-chi2
    double raw_value = 1.0;      // before clamping into (0, 1]
    double sum_w2 = 0.0;         // pilot: sum of squared control odds
    std::size_t n1 = 0, n0 = 0;  // pilot cohort sizes
    double d_m_sq = 0.0;         // smd: Mahalanobis-style distance squared
};

// Propensity-based estimate from a proxy trial cohort vs the historical
// cohort: gamma = (n1^2/n0) / sum_0 w^2 with out-of-fold odds.
GammaEstimate gamma_pilot(const CovariateTable& proxy_trial, const CovariateTable& historical,
                          const PropensityConfig& config);

// Gaussian heuristic: gamma = exp(-sum SMD_j^2 - sum (pi1-pi0)^2/(pi1(1-pi1))).
GammaEstimate gamma_smd(const std::vector<double>& smds,
                        const std::vector<std::pair<double, double>>& binary_terms = {});

// Exact chi^2 on aligned finite distributions; the brute-force oracle for
// the pilot estimator on discrete data.
GammaEstimate gamma_discrete_oracle(const std::vector<double>& p1, const std::vector<double>& p0);

struct PowerSpec {
    double alpha = 0.05;
    double tau = 0.0;            // assumed true effect
    double kappa_sq = 1.0;       // or derived from (sigma0_sq, rho0)
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    double gamma = 1.0;

    static double kappa_from(double sigma0_sq, double rho0);
    void validate() const;
};

// Two-sided power at significance alpha:
//   Phi(z_{a/2} + tau/sqrt(V)) + Phi(z_{a/2} - tau/sqrt(V)),
// with V = kappa^2 (1/n1 + 1/(gamma n0)).
double aipw_power(const PowerSpec& spec);
double aipw_design_variance(const PowerSpec& spec);

struct SampleSizeResult {
    bool feasible = false;
    std::size_t n1 = 0;
    double achieved_power = 0.0;
    double variance_floor = 0.0; // kappa^2/(gamma n0), the n1 -> inf limit
};

// Smallest integer n1 reaching target_power; infeasible when even the
// variance floor cannot deliver it. Search capped at n1 = 1e7.
SampleSizeResult solve_n1(const PowerSpec& spec_without_n1, double target_power);

// n1 / n_RCT for a 1:1 RCT with matched power: (1-rho0^2)/4 * (1 + n1/(gamma n0)).
double rct_ratio(std::size_t n1, std::size_t n0, double gamma, double rho0 = 0.0);

// Effect of augmenting the historical pool: discrete P1 / P0A / P0B with
// sizes n_a, n_b. Enforces gamma*(n_a+n_b) >= gamma_a*n_a.
struct AugmentationGain {
    double gamma_a = 1.0;
    double gamma_combined = 1.0;
    double n_eff_a = 0.0;
    double n_eff_combined = 0.0;
    double p0b_overlap_mass = 0.0; // P0B mass on the support of P1
};

AugmentationGain augmentation_gain(const std::vector<double>& p1, const std::vector<double>& p0a,
                                   double n_a, const std::vector<double>& p0b, double n_b);

} // namespace scarm
