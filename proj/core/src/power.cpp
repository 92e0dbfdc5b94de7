#include "scarm/power.hpp"

#include <algorithm>
#include <cmath>

#include "scarm/errors.hpp"
#include "scarm/stats.hpp"

namespace scarm {

GammaEstimate gamma_pilot(const CovariateTable& proxy_trial, const CovariateTable& historical,
                          const PropensityConfig& config) {
    const std::size_t n1 = proxy_trial.n_rows();
    const std::size_t n0 = historical.n_rows();
    if (n1 < 10 || n0 < 10)
        throw ValidationError("gamma_pilot: both cohorts need at least 10 rows");
    if (proxy_trial.n_cols() != historical.n_cols())
        throw ValidationError("gamma_pilot: cohorts must share the covariate layout");

    // pool: trial rows first with A=1, then historical with A=0
    const MaskedMatrix m1 = to_masked(proxy_trial);
    const MaskedMatrix m0 = to_masked(historical);
    MaskedMatrix pooled;
    pooled.names = m1.names;
    pooled.values.resize(m1.values.rows() + m0.values.rows(), m1.values.cols());
    pooled.missing.resize(pooled.values.rows(), pooled.values.cols());
    pooled.values << m1.values, m0.values;
    pooled.missing << m1.missing, m0.missing;
    std::vector<std::uint8_t> label(n1, 1);
    label.insert(label.end(), n0, 0);

    const PropensityFitResult fit = fit_propensity_raw(pooled, label, config);

    double sum_w2 = 0.0;
    for (std::size_t i = n1; i < n1 + n0; ++i) {
        const double w = fit.oof[i] / (1.0 - fit.oof[i]);
        sum_w2 += w * w;
    }
    GammaEstimate g;
    g.method = "pilot";
    g.n1 = n1;
    g.n0 = n0;
    g.sum_w2 = sum_w2;
    g.raw_value = sum_w2 > 0.0
                      ? static_cast<double>(n1) * static_cast<double>(n1) / sum_w2 /
                            static_cast<double>(n0)
                      : 1.0;
    g.value = std::clamp(g.raw_value, 1e-12, 1.0);
    return g;
}

GammaEstimate gamma_smd(const std::vector<double>& smds,
                        const std::vector<std::pair<double, double>>& binary_terms) {
    double d2 = 0.0;
    for (double s : smds) d2 += s * s;
    for (const auto& [pi1, pi0] : binary_terms) {
        if (!(pi1 > 0.0 && pi1 < 1.0) || !(pi0 > 0.0 && pi0 < 1.0))
            throw ValidationError("gamma_smd: binary prevalences must lie strictly in (0,1)");
        const double d = pi1 - pi0;
        d2 += d * d / (pi1 * (1.0 - pi1));
    }
    GammaEstimate g;
    g.method = binary_terms.empty() ? "gaussian-smd" : "mixed";
    g.d_m_sq = d2;
    g.raw_value = std::exp(-d2);
    g.value = std::clamp(g.raw_value, 1e-300, 1.0);
    return g;
}

GammaEstimate gamma_discrete_oracle(const std::vector<double>& p1,
                                    const std::vector<double>& p0) {
    if (p1.size() != p0.size() || p1.empty())
        throw ValidationError("gamma_discrete_oracle: distributions must align on atoms");
    double s1 = 0.0, s0 = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i] < 0.0 || p0[i] < 0.0)
            throw ValidationError("gamma_discrete_oracle: negative mass");
        s1 += p1[i];
        s0 += p0[i];
    }
    if (std::abs(s1 - 1.0) > 1e-8 || std::abs(s0 - 1.0) > 1e-8)
        throw ValidationError("gamma_discrete_oracle: distributions must sum to 1");
    double chi2 = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p0[i] <= 0.0) {
            if (p1[i] > 0.0)
                throw ValidationError("gamma_discrete_oracle: positivity violated (P1 mass on an "
                                      "atom with zero P0 mass)");
            continue;
        }
        const double d = p1[i] - p0[i];
        chi2 += d * d / p0[i];
    }
    GammaEstimate g;
    g.method = "discrete-chi2";
    g.d_m_sq = chi2;
    g.raw_value = 1.0 / (1.0 + chi2);
    g.value = g.raw_value;
    return g;
}

double PowerSpec::kappa_from(double sigma0_sq, double rho0) {
    if (!(sigma0_sq >= 0.0)) throw ValidationError("sigma0_sq must be non-negative");
    if (!(rho0 >= -1.0 && rho0 <= 1.0)) throw ValidationError("rho0 must lie in [-1,1]");
    return sigma0_sq * (1.0 - rho0 * rho0);
}

void PowerSpec::validate() const {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw ValidationError("alpha must lie in (0, 0.5]");
    if (!(kappa_sq > 0.0)) throw ValidationError("kappa_sq must be positive");
    if (n1 < 1 || n0 < 1) throw ValidationError("n1 and n0 must be at least 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
}

double aipw_design_variance(const PowerSpec& spec) {
    return spec.kappa_sq * (1.0 / static_cast<double>(spec.n1) +
                            1.0 / (spec.gamma * static_cast<double>(spec.n0)));
}

double aipw_power(const PowerSpec& spec) {
    spec.validate();
    const double v = aipw_design_variance(spec);
    const double z = normal_quantile(spec.alpha / 2.0);
    const double shift = spec.tau / std::sqrt(v);
    return normal_cdf(z + shift) + normal_cdf(z - shift);
}

SampleSizeResult solve_n1(const PowerSpec& spec_without_n1, double target_power) {
    PowerSpec spec = spec_without_n1;
    spec.n1 = 1;
    spec.validate();
    if (!(target_power > spec.alpha && target_power < 1.0))
        throw ValidationError("target power must lie in (alpha, 1)");

    SampleSizeResult res;
    res.variance_floor = spec.kappa_sq / (spec.gamma * static_cast<double>(spec.n0));

    // n1 -> infinity limit decides feasibility analytically
    const double z = normal_quantile(spec.alpha / 2.0);
    const double shift_floor = std::abs(spec.tau) / std::sqrt(res.variance_floor);
    const double power_floor = normal_cdf(z + shift_floor) + normal_cdf(z - shift_floor);
    if (power_floor < target_power) {
        res.feasible = false;
        return res;
    }

    const std::size_t cap = 10'000'000;
    auto power_at = [&](std::size_t n1) {
        spec.n1 = n1;
        return aipw_power(spec);
    };
    std::size_t lo = 1, hi = 1;
    while (hi < cap && power_at(hi) < target_power) {
        lo = hi;
        hi = std::min(cap, hi * 2);
    }
    if (power_at(hi) < target_power) {
        res.feasible = false;
        return res;
    }
    while (lo + 1 < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (power_at(mid) >= target_power)
            hi = mid;
        else
            lo = mid;
    }
    res.feasible = true;
    res.n1 = power_at(lo) >= target_power ? lo : hi;
    res.achieved_power = power_at(res.n1);
    return res;
}

double rct_ratio(std::size_t n1, std::size_t n0, double gamma, double rho0) {
    if (n1 < 1 || n0 < 1 || !(gamma > 0.0 && gamma <= 1.0))
        throw ValidationError("rct_ratio: n1, n0 positive and gamma in (0,1] required");
    if (!(rho0 >= -1.0 && rho0 <= 1.0)) throw ValidationError("rct_ratio: rho0 in [-1,1]");
    const double ratio = static_cast<double>(n1) / (gamma * static_cast<double>(n0));
    return 0.25 * (1.0 - rho0 * rho0) * (1.0 + ratio);
}

AugmentationGain augmentation_gain(const std::vector<double>& p1, const std::vector<double>& p0a,
                                   double n_a, const std::vector<double>& p0b, double n_b) {
    if (p1.size() != p0a.size() || p1.size() != p0b.size())
        throw ValidationError("augmentation_gain: distributions must align on atoms");
    if (!(n_a > 0.0) || !(n_b >= 0.0))
        throw ValidationError("augmentation_gain: cohort sizes must be positive");

    AugmentationGain out;
    out.gamma_a = gamma_discrete_oracle(p1, p0a).value;
    out.n_eff_a = out.gamma_a * n_a;

    const double alpha = n_a / (n_a + n_b);
    std::vector<double> mix(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i)
        mix[i] = alpha * p0a[i] + (1.0 - alpha) * p0b[i];
    out.gamma_combined = gamma_discrete_oracle(p1, mix).value;
    out.n_eff_combined = out.gamma_combined * (n_a + n_b);

    for (std::size_t i = 0; i < p1.size(); ++i)
        if (p1[i] > 0.0) out.p0b_overlap_mass += p0b[i];

    if (out.n_eff_combined < out.n_eff_a * (1.0 - 1e-12))
        throw EstimationError("augmentation_gain: effective sample size decreased, which should "
                              "be impossible under positivity");
    return out;
}

} // namespace scarm
