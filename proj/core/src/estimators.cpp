#include "scarm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "scarm/errors.hpp"
#include "scarm/stats.hpp"

namespace scarm {

Method method_from_string(const std::string& s) {
    if (s == "PSM" || s == "psm") return Method::PSM;
    if (s == "IPW" || s == "ipw") return Method::IPW;
    if (s == "OM" || s == "om") return Method::OM;
    if (s == "AIPW" || s == "aipw") return Method::AIPW;
    throw ConfigError("unknown estimator '" + s + "' (expected PSM|IPW|OM|AIPW)");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::PSM: return "PSM";
        case Method::IPW: return "IPW";
        case Method::OM: return "OM";
        case Method::AIPW: return "AIPW";
    }
    return "?";
}

void AttEstimate::set_variance(double v) {
    if (v < 0.0) throw EstimationError("negative variance estimate");
    variance = v;
    const double half = 1.96 * std::sqrt(v);
    ci_lo = tau_hat - half;
    ci_hi = tau_hat + half;
}

TrimResult trim_overlap(const PooledSample& sample, const std::vector<double>& e_hat) {
    if (e_hat.size() != sample.n())
        throw ValidationError("trim_overlap: e_hat not aligned with sample rows");
    double min1 = 1.0, max1 = 0.0, min0 = 1.0, max0 = 0.0;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        const double e = e_hat[i];
        if (!(e > 0.0 && e < 1.0))
            throw ValidationError("trim_overlap: propensity outside (0,1) at row " +
                                  std::to_string(i + 1));
        if (sample.treatment()[i]) {
            min1 = std::min(min1, e);
            max1 = std::max(max1, e);
        } else {
            min0 = std::min(min0, e);
            max0 = std::max(max0, e);
        }
    }
    OverlapRegion region;
    region.lower = std::max(min1, min0);
    region.upper = std::min(max1, max0);
    if (!(region.lower < region.upper))
        throw EstimationError("no overlap between treated and control propensity ranges");

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        const bool in = e_hat[i] >= region.lower && e_hat[i] <= region.upper;
        if (in) {
            kept.push_back(i);
            (sample.treatment()[i] ? region.kept_treated : region.kept_control)++;
        } else {
            (sample.treatment()[i] ? region.dropped_treated : region.dropped_control)++;
        }
    }
    if (region.kept_treated == 0 || region.kept_control == 0)
        throw EstimationError("overlap trim leaves an empty arm");

    TrimResult out{sample.subset(kept), {}, kept, region};
    out.e_hat.reserve(kept.size());
    for (auto i : kept) out.e_hat.push_back(e_hat[i]);
    return out;
}

std::vector<double> propensity_odds(const std::vector<double>& e_hat) {
    std::vector<double> w;
    w.reserve(e_hat.size());
    for (double e : e_hat) {
        if (!(e > 0.0 && e < 1.0))
            throw ValidationError("propensity outside (0,1); cannot form odds");
        w.push_back(e / (1.0 - e));
    }
    return w;
}

namespace {

struct SortedControls {
    // (logit e, control row) ascending; equal logits ordered by row index
    std::vector<std::pair<double, std::size_t>> items;
};

// Nearest entry to x among items in [first, last); ties by lowest row index.
// Returns index into items or npos when empty.
template <typename It>
It nearest_in(It first, It last, double x) {
    if (first == last) return last;
    auto hi = std::lower_bound(first, last, std::make_pair(x, std::size_t{0}));
    // candidates: start of the equal-logit run at/after x, and the run before
    It right = hi;
    It left = last;
    if (hi != first) {
        It p = hi;
        --p;
        const double lv = p->first;
        while (p != first) {
            It q = p;
            --q;
            if (q->first != lv) break;
            p = q;
        }
        left = p;
    }
    if (right == last) return left;
    if (left == last) return right;
    const double dl = x - left->first;
    const double dr = right->first - x;
    if (dl < dr) return left;
    if (dr < dl) return right;
    return left->second < right->second ? left : right;
}

} // namespace

std::pair<AttEstimate, MatchResult> psm_att(const PooledSample& sample,
                                            const std::vector<double>& e_hat,
                                            const PsmOptions& options) {
    if (e_hat.size() != sample.n())
        throw ValidationError("psm_att: e_hat not aligned with sample rows");
    std::vector<double> logits(sample.n());
    for (std::size_t i = 0; i < sample.n(); ++i) {
        if (!(e_hat[i] > 0.0 && e_hat[i] < 1.0))
            throw ValidationError("psm_att: propensity outside (0,1) at row " +
                                  std::to_string(i + 1));
        logits[i] = logit(e_hat[i]);
    }
    MatchResult match;
    match.with_replacement = options.with_replacement;
    match.sd_logit = std::sqrt(sample_variance(std::span<const double>(logits)));
    match.caliper = options.caliper_scale * match.sd_logit;

    const auto treated = sample.treated_rows();
    const auto controls = sample.control_rows();

    std::vector<std::pair<double, std::size_t>> pool;
    pool.reserve(controls.size());
    for (auto c : controls) pool.emplace_back(logits[c], c);
    std::sort(pool.begin(), pool.end());

    const auto& Y = sample.outcome();
    std::set<std::size_t> used_controls;

    if (options.with_replacement) {
        for (auto t : treated) {
            const auto it = nearest_in(pool.begin(), pool.end(), logits[t]);
            if (it == pool.end() || std::abs(it->first - logits[t]) > match.caliper) {
                ++match.unmatched_treated;
                continue;
            }
            match.pairs.push_back({t, it->second, std::abs(it->first - logits[t])});
            used_controls.insert(it->second);
        }
    } else {
        // greedy by descending e_hat; each control used at most once
        std::vector<std::size_t> order = treated;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return e_hat[a] > e_hat[b]; });
        std::set<std::pair<double, std::size_t>> avail(pool.begin(), pool.end());
        for (auto t : order) {
            const double x = logits[t];
            auto hi = avail.lower_bound({x, 0});
            auto best = avail.end();
            if (hi != avail.begin()) {
                auto p = std::prev(hi);
                const double lv = p->first;
                while (p != avail.begin() && std::prev(p)->first == lv) --p;
                best = p;
            }
            if (hi != avail.end()) {
                if (best == avail.end()) {
                    best = hi;
                } else {
                    const double dl = x - best->first;
                    const double dr = hi->first - x;
                    if (dr < dl || (dr == dl && hi->second < best->second)) best = hi;
                }
            }
            if (best == avail.end() || std::abs(best->first - x) > match.caliper) {
                ++match.unmatched_treated;
                continue;
            }
            match.pairs.push_back({t, best->second, std::abs(best->first - x)});
            used_controls.insert(best->second);
            avail.erase(best);
        }
    }

    if (match.pairs.empty())
        throw EstimationError("psm_att: no treated unit has an in-caliper match");

    double s = 0.0;
    for (const auto& p : match.pairs) s += Y[p.treated] - Y[p.control];

    AttEstimate est;
    est.method = Method::PSM;
    est.tau_hat = s / static_cast<double>(match.pairs.size());
    est.n1_used = match.pairs.size();
    est.n0_used = used_controls.size();
    est.diagnostics["caliper_logit"] = match.caliper;
    est.diagnostics["sd_logit"] = match.sd_logit;
    est.diagnostics["unmatched_treated"] = static_cast<double>(match.unmatched_treated);
    est.diagnostics["with_replacement"] = options.with_replacement ? 1.0 : 0.0;
    return {est, match};
}

AttEstimate ipw_att(const PooledSample& sample, const std::vector<double>& e_hat) {
    if (e_hat.size() != sample.n())
        throw ValidationError("ipw_att: e_hat not aligned with sample rows");
    const auto& Y = sample.outcome();
    const auto& A = sample.treatment();
    const double n1 = static_cast<double>(sample.n_treated());
    const double n0 = static_cast<double>(sample.n_control());

    double sum_y1 = 0.0, sum_wy0 = 0.0, sum_w = 0.0, sum_w2 = 0.0, max_w = 0.0;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        if (A[i]) {
            sum_y1 += Y[i];
        } else {
            const double e = e_hat[i];
            if (!(e > 0.0 && e < 1.0))
                throw ValidationError("ipw_att: control propensity outside (0,1)");
            const double w = e / (1.0 - e);
            if (!std::isfinite(w)) throw EstimationError("ipw_att: non-finite weight");
            sum_wy0 += w * Y[i];
            sum_w += w;
            sum_w2 += w * w;
            max_w = std::max(max_w, w);
        }
    }
    AttEstimate est;
    est.method = Method::IPW;
    est.tau_hat = sum_y1 / n1 - sum_wy0 / n1;
    est.n1_used = sample.n_treated();
    est.n0_used = sample.n_control();
    est.gamma_hat = sum_w2 > 0.0 ? std::min(1.0, n1 * n1 / (n0 * sum_w2)) : 1.0;
    est.diagnostics["max_weight"] = max_w;
    est.diagnostics["mean_weight_over_n1"] = sum_w / n1;
    return est;
}

namespace {

double treated_residual_mean(const PooledSample& sample, const std::vector<double>& mu0_all) {
    const auto& Y = sample.outcome();
    const auto& A = sample.treatment();
    double s = 0.0;
    std::string missing;
    std::size_t n_missing = 0;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        if (!A[i]) continue;
        if (!std::isfinite(mu0_all[i])) {
            ++n_missing;
            if (!missing.empty()) missing += ", ";
            if (n_missing <= 5) missing += sample.subject_id()[i];
            continue;
        }
        s += Y[i] - mu0_all[i];
    }
    if (n_missing > 0)
        throw EstimationError("missing counterfactual prediction for " +
                              std::to_string(n_missing) + " treated subject(s): " + missing +
                              (n_missing > 5 ? ", ..." : ""));
    return s / static_cast<double>(sample.n_treated());
}

double control_correction(const PooledSample& sample, const std::vector<double>& e_hat,
                          const std::vector<double>& mu0_all) {
    const auto& Y = sample.outcome();
    const auto& A = sample.treatment();
    double s = 0.0;
    for (std::size_t i = 0; i < sample.n(); ++i) {
        if (A[i]) continue;
        if (!std::isfinite(mu0_all[i]))
            throw EstimationError("missing control prediction for subject '" +
                                  sample.subject_id()[i] + "'");
        const double e = e_hat[i];
        if (!(e > 0.0 && e < 1.0))
            throw ValidationError("aipw_att: control propensity outside (0,1)");
        s += (e / (1.0 - e)) * (Y[i] - mu0_all[i]);
    }
    return s / static_cast<double>(sample.n_treated());
}

} // namespace

AttEstimate om_att(const PooledSample& sample, const std::vector<double>& mu0_all) {
    if (mu0_all.size() != sample.n())
        throw ValidationError("om_att: mu0 not aligned with sample rows");
    AttEstimate est;
    est.method = Method::OM;
    est.tau_hat = treated_residual_mean(sample, mu0_all);
    est.n1_used = sample.n_treated();
    est.n0_used = sample.n_control();
    return est;
}

AttEstimate aipw_att(const PooledSample& sample, const std::vector<double>& e_hat,
                     const std::vector<double>& mu0_all) {
    if (e_hat.size() != sample.n() || mu0_all.size() != sample.n())
        throw ValidationError("aipw_att: inputs not aligned with sample rows");
    const double om_part = treated_residual_mean(sample, mu0_all);
    const double corr = control_correction(sample, e_hat, mu0_all);
    const double tau = om_part - corr;

    // identity check against the plug-in route
    const double om_route = om_att(sample, mu0_all).tau_hat - corr;
    const double scale = std::max({1.0, std::abs(om_part), std::abs(corr)});
    if (std::abs(tau - om_route) > 1e-12 * scale)
        throw EstimationError("aipw_att: plug-in decomposition identity violated");

    AttEstimate est;
    est.method = Method::AIPW;
    est.tau_hat = tau;
    est.n1_used = sample.n_treated();
    est.n0_used = sample.n_control();
    double sum_w2 = 0.0;
    for (std::size_t i = 0; i < sample.n(); ++i)
        if (!sample.treatment()[i]) {
            const double w = e_hat[i] / (1.0 - e_hat[i]);
            sum_w2 += w * w;
        }
    const double n1 = static_cast<double>(sample.n_treated());
    const double n0 = static_cast<double>(sample.n_control());
    est.gamma_hat = sum_w2 > 0.0 ? std::min(1.0, n1 * n1 / (n0 * sum_w2)) : 1.0;
    est.diagnostics["plugin_part"] = om_part;
    est.diagnostics["control_correction"] = corr;
    return est;
}

} // namespace scarm
