#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scarm/data.hpp"

namespace scarm {

enum class Method { PSM, IPW, OM, AIPW };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

// Common-support interval of the estimated propensity distribution:
// [max of per-arm minima, min of per-arm maxima].
struct OverlapRegion {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t kept_treated = 0;
    std::size_t kept_control = 0;
    std::size_t dropped_treated = 0;
    std::size_t dropped_control = 0;
};

struct TrimResult {
    PooledSample sample;
    std::vector<double> e_hat;       // aligned with sample
    std::vector<std::size_t> kept_rows; // indices into the input sample
    OverlapRegion region;
};

// Restricts to the overlap region; throws EstimationError when the arms do
// not overlap or either arm empties.
TrimResult trim_overlap(const PooledSample& sample, const std::vector<double>& e_hat);

struct MatchPair {
    std::size_t treated = 0;
    std::size_t control = 0;
    double logit_distance = 0.0;
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::size_t unmatched_treated = 0;
    double caliper = 0.0;     // on the logit scale
    double sd_logit = 0.0;
    bool with_replacement = true;
};

struct AttEstimate {
    Method method = Method::AIPW;
    double tau_hat = 0.0;
    double variance = std::numeric_limits<double>::quiet_NaN();
    double ci_lo = std::numeric_limits<double>::quiet_NaN();
    double ci_hi = std::numeric_limits<double>::quiet_NaN();
    std::size_t n1_used = 0;
    std::size_t n0_used = 0;
    std::optional<double> gamma_hat;
    std::map<std::string, double> diagnostics;

    // normal-approximation interval tau_hat +/- 1.96 sqrt(v)
    void set_variance(double v);
};

struct PsmOptions {
    bool with_replacement = true;   // matches the reference methodology
    double caliper_scale = 0.2;     // caliper = scale * SD(logit e_hat), pooled
};

// Nearest-neighbour one-to-one matching on |logit e|, caliper-limited.
// Without replacement, treated units are processed in descending e_hat order
// and each control is used at most once. Ties go to the lowest control index.
// Treated units with no in-caliper neighbour are dropped and counted.
std::pair<AttEstimate, MatchResult> psm_att(const PooledSample& sample,
                                            const std::vector<double>& e_hat,
                                            const PsmOptions& options = {});

// tau = mean_1 Y - (1/n1) sum_0 w Y with w = e/(1-e). Callers are expected
// to trim to the overlap region first.
AttEstimate ipw_att(const PooledSample& sample, const std::vector<double>& e_hat);

// Plug-in: tau = (1/n1) sum_1 (Y - mu0). mu0_all is aligned with all rows;
// NaN entries on treated rows are an error listing the subjects.
AttEstimate om_att(const PooledSample& sample, const std::vector<double>& mu0_all);

// AIPW: plug-in plus the propensity-weighted control-residual correction.
AttEstimate aipw_att(const PooledSample& sample, const std::vector<double>& e_hat,
                     const std::vector<double>& mu0_all);

// propensity odds helper
std::vector<double> propensity_odds(const std::vector<double>& e_hat);

} // namespace scarm
