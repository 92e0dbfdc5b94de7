#include "scarm/inference.hpp"

#include <algorithm>
#include <cmath>

#include "scarm/errors.hpp"
#include "scarm/nuisance.hpp"
#include "scarm/parallel.hpp"
#include "scarm/rng.hpp"
#include "scarm/stats.hpp"

namespace scarm {

namespace {

void require(bool ok, const char* component) {
    if (!ok)
        throw EstimationError(std::string("asymptotic_variance: missing component ") + component);
}

bool has(double v) { return std::isfinite(v); }

} // namespace

double asymptotic_variance(Method method, const VarianceComponents& c, PsmVarianceForm psm_form) {
    require(c.n1 > 0, "n1");
    const double n1 = static_cast<double>(c.n1);
    switch (method) {
        case Method::PSM:
            if (psm_form == PsmVarianceForm::ConditionalKappa) {
                require(has(c.kappa_sq), "kappa_sq");
                return 2.0 * c.kappa_sq / n1;
            }
            require(has(c.sigma1_sq), "sigma1_sq");
            return 2.0 * c.sigma1_sq / n1;
        case Method::OM:
            require(has(c.kappa_sq), "kappa_sq");
            return c.kappa_sq / n1;
        case Method::IPW: {
            require(has(c.sigma1_sq), "sigma1_sq");
            require(has(c.kappa_sq), "kappa_sq");
            require(has(c.delta), "delta");
            require(has(c.gamma), "gamma");
            require(c.n0 > 0, "n0");
            const double neff = c.gamma * static_cast<double>(c.n0);
            return c.sigma1_sq / n1 + (c.kappa_sq + c.delta) / neff;
        }
        case Method::AIPW: {
            require(has(c.kappa_sq), "kappa_sq");
            require(has(c.gamma), "gamma");
            require(c.n0 > 0, "n0");
            const double neff = c.gamma * static_cast<double>(c.n0);
            return c.kappa_sq * (1.0 / n1 + 1.0 / neff);
        }
    }
    throw EstimationError("asymptotic_variance: unknown method");
}

VarianceComponents estimate_components(const PooledSample& sample,
                                       const std::vector<double>& e_hat,
                                       const std::vector<double>& mu0_all, KappaForm kappa_form) {
    const auto& Y = sample.outcome();
    const auto& A = sample.treatment();
    VarianceComponents c;
    c.n1 = sample.n_treated();
    c.n0 = sample.n_control();

    std::vector<double> y1, y0, mu0_ctrl, w_ctrl;
    y1.reserve(c.n1);
    y0.reserve(c.n0);
    const bool have_mu0 = mu0_all.size() == sample.n();
    const bool have_e = e_hat.size() == sample.n();
    for (std::size_t i = 0; i < sample.n(); ++i) {
        if (A[i]) {
            y1.push_back(Y[i]);
            continue;
        }
        y0.push_back(Y[i]);
        if (have_mu0 && std::isfinite(mu0_all[i])) mu0_ctrl.push_back(mu0_all[i]);
        if (have_e) w_ctrl.push_back(e_hat[i] / (1.0 - e_hat[i]));
    }
    c.sigma1_sq = sample_variance(std::span<const double>(y1));
    c.sigma0_sq = sample_variance(std::span<const double>(y0));

    const bool full_mu0 = mu0_ctrl.size() == y0.size() && mu0_ctrl.size() >= 3;
    if (full_mu0) {
        bool degen = false;
        c.rho0 = estimate_rho0(mu0_ctrl, y0, &degen);
        c.rho0_degenerate = degen;
        if (kappa_form == KappaForm::ResidualVariance) {
            std::vector<double> r(y0.size());
            for (std::size_t i = 0; i < y0.size(); ++i) r[i] = y0[i] - mu0_ctrl[i];
            c.kappa_sq = sample_variance(std::span<const double>(r));
        } else {
            c.kappa_sq = c.sigma0_sq * (1.0 - c.rho0 * c.rho0);
        }
    } else {
        // no outcome model: conservative kappa^2 = sigma0^2 (rho0 = 0)
        c.rho0 = 0.0;
        c.rho0_degenerate = true;
        c.kappa_sq = c.sigma0_sq;
    }

    if (have_e && !w_ctrl.empty()) {
        double sw2 = 0.0;
        for (double w : w_ctrl) sw2 += w * w;
        const double n1 = static_cast<double>(c.n1);
        const double n0 = static_cast<double>(c.n0);
        c.gamma = sw2 > 0.0 ? std::min(1.0, n1 * n1 / (n0 * sw2)) : 1.0;
        if (mu0_ctrl.size() == w_ctrl.size() && !mu0_ctrl.empty()) {
            std::vector<double> wmu(w_ctrl.size());
            for (std::size_t i = 0; i < w_ctrl.size(); ++i) wmu[i] = w_ctrl[i] * mu0_ctrl[i];
            c.delta = sample_variance(std::span<const double>(wmu)) / (sw2 / n0);
        } else {
            c.delta = 0.0;
            c.delta_optimistic = true;
        }
    }
    return c;
}

EifVector eif_values(const PooledSample& sample, const std::vector<double>& e_hat,
                     const std::vector<double>& mu0_all, double tau_hat) {
    if (e_hat.size() != sample.n() || mu0_all.size() != sample.n())
        throw ValidationError("eif_values: inputs not aligned with sample rows");
    const double p1 = static_cast<double>(sample.n_treated()) / static_cast<double>(sample.n());
    if (!(p1 > 0.0)) throw ValidationError("eif_values: no treated rows");
    EifVector out;
    out.tau_ref = tau_hat;
    out.phi.resize(sample.n());
    const auto& Y = sample.outcome();
    const auto& A = sample.treatment();
    for (std::size_t i = 0; i < sample.n(); ++i) {
        const double r = Y[i] - mu0_all[i];
        if (A[i]) {
            out.phi[i] = (r - tau_hat) / p1;
        } else {
            const double e = e_hat[i];
            out.phi[i] = -(e / (1.0 - e)) * r / p1;
        }
    }
    return out;
}

double eif_variance(const EifVector& eif) {
    return sample_variance(std::span<const double>(eif.phi)) /
           static_cast<double>(eif.phi.size());
}

namespace {

ResampleVariance run_replicates(std::size_t B, std::uint64_t seed, unsigned threads,
                                const std::function<std::vector<std::size_t>(Rng&)>& draw,
                                const ReplicateFn& replicate, double rescale) {
    if (B < 100) throw ConfigError("resampling needs B >= 100 replicates");
    std::vector<double> taus(B, std::numeric_limits<double>::quiet_NaN());
    parallel_for(B, threads, [&](std::size_t b) {
        auto rng = make_rng(derive_seed(seed, b));
        const auto rows = draw(rng);
        try {
            taus[b] = replicate(rows, derive_seed(seed, B + b));
        } catch (const EstimationError&) {
            // dropped and counted below
        }
    });
    std::vector<double> ok;
    ok.reserve(B);
    for (double t : taus)
        if (std::isfinite(t)) ok.push_back(t);
    ResampleVariance rv;
    rv.used = ok.size();
    rv.failed = B - ok.size();
    if (rv.failed * 20 > B)
        throw EstimationError("resampling: " + std::to_string(rv.failed) + " of " +
                              std::to_string(B) + " replicates failed (> 5%)");
    if (ok.size() < 2) throw EstimationError("resampling: not enough successful replicates");
    rv.variance = sample_variance(std::span<const double>(ok)) * rescale;
    return rv;
}

} // namespace

ResampleVariance bootstrap_variance(const PooledSample& sample, const ReplicateFn& replicate,
                                    std::size_t B, std::uint64_t seed, unsigned threads) {
    const auto treated = sample.treated_rows();
    const auto controls = sample.control_rows();
    auto draw = [&](Rng& rng) {
        std::vector<std::size_t> rows;
        rows.reserve(sample.n());
        std::uniform_int_distribution<std::size_t> d1(0, treated.size() - 1);
        std::uniform_int_distribution<std::size_t> d0(0, controls.size() - 1);
        for (std::size_t i = 0; i < treated.size(); ++i) rows.push_back(treated[d1(rng)]);
        for (std::size_t i = 0; i < controls.size(); ++i) rows.push_back(controls[d0(rng)]);
        return rows;
    };
    return run_replicates(B, seed, threads, draw, replicate, 1.0);
}

std::size_t default_subsample_size(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
}

ResampleVariance subsample_variance(const PooledSample& sample, const ReplicateFn& replicate,
                                    std::size_t b, std::size_t B, std::uint64_t seed,
                                    unsigned threads) {
    const std::size_t n = sample.n();
    if (b == 0) b = default_subsample_size(n);
    if (b >= n) throw ConfigError("subsample size b must be smaller than n");
    const auto treated = sample.treated_rows();
    const auto controls = sample.control_rows();
    // preserve the treated fraction
    std::size_t b1 = static_cast<std::size_t>(
        std::llround(static_cast<double>(b) * static_cast<double>(treated.size()) /
                     static_cast<double>(n)));
    b1 = std::min(std::max<std::size_t>(b1, 2), treated.size());
    std::size_t b0 = b - b1;
    b0 = std::min(std::max<std::size_t>(b0, 2), controls.size());
    if (b1 + b0 < 4)
        throw EstimationError("subsample too small to estimate a matching variance");

    auto draw = [&, b1, b0](Rng& rng) {
        std::vector<std::size_t> t = treated, c = controls;
        shuffle_inplace(t, rng);
        shuffle_inplace(c, rng);
        std::vector<std::size_t> rows(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(b1));
        rows.insert(rows.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(b0));
        return rows;
    };
    const double rescale = static_cast<double>(b1 + b0) / static_cast<double>(n);
    return run_replicates(B, seed, threads, draw, replicate, rescale);
}

double standardized_bias(double tau_hat, double tau_expected, double sd_hist) {
    if (!(sd_hist > 0.0)) throw ValidationError("standardized_bias: sd_hist must be positive");
    return std::abs(tau_hat - tau_expected) / sd_hist;
}

} // namespace scarm
