#include "scarm/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "scarm/errors.hpp"

namespace scarm {

CovariateTable::CovariateTable(std::vector<Column> columns, std::size_t n_rows)
    : columns_(std::move(columns)), n_rows_(n_rows) {
    if (n_rows_ < 1) throw ValidationError("covariate table must have at least one row");
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (c.name.empty()) throw ValidationError("covariate column with empty name");
        if (!seen.insert(c.name).second)
            throw ValidationError("duplicate covariate column name '" + c.name + "'");
        if (c.values.size() != n_rows_ || c.missing.size() != n_rows_)
            throw ValidationError("column '" + c.name + "' length does not match row count");
        bool any_observed = false;
        for (auto m : c.missing)
            if (!m) { any_observed = true; break; }
        if (!any_observed)
            throw ValidationError("column '" + c.name + "' is entirely missing");
    }
}

std::size_t CovariateTable::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (columns_[j].name == name) return j;
    throw ValidationError("unknown covariate column '" + name + "'");
}

bool CovariateTable::has_column(const std::string& name) const {
    for (const auto& c : columns_)
        if (c.name == name) return true;
    return false;
}

CovariateTable CovariateTable::subset(const std::vector<std::size_t>& rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column s;
        s.name = c.name;
        s.values.reserve(rows.size());
        s.missing.reserve(rows.size());
        for (auto r : rows) {
            s.values.push_back(c.values[r]);
            s.missing.push_back(c.missing[r]);
        }
        cols.push_back(std::move(s));
    }
    return CovariateTable(std::move(cols), rows.size());
}

PooledSample::PooledSample(CovariateTable covariates, std::vector<std::uint8_t> treatment,
                           std::vector<double> outcome, std::vector<std::string> subject_id)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      subject_id_(std::move(subject_id)) {
    const std::size_t n = treatment_.size();
    if (covariates_.n_rows() != n || outcome_.size() != n || subject_id_.size() != n)
        throw ValidationError("pooled sample: misaligned covariates/treatment/outcome/id");
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        if (treatment_[i] > 1)
            throw ValidationError("treatment outside {0,1} in row " + std::to_string(i + 1));
        if (!std::isfinite(outcome_[i]))
            throw ValidationError("non-finite or missing outcome in row " + std::to_string(i + 1));
        if (!ids.insert(subject_id_[i]).second)
            throw ValidationError("duplicate subject id '" + subject_id_[i] + "'");
        if (treatment_[i]) ++n1_; else ++n0_;
    }
    if (n1_ < 2 || n0_ < 2)
        throw ValidationError("pooled sample needs at least 2 treated and 2 control rows (n1=" +
                              std::to_string(n1_) + ", n0=" + std::to_string(n0_) + ")");
}

std::vector<std::size_t> PooledSample::treated_rows() const {
    std::vector<std::size_t> r;
    r.reserve(n1_);
    for (std::size_t i = 0; i < treatment_.size(); ++i)
        if (treatment_[i]) r.push_back(i);
    return r;
}

std::vector<std::size_t> PooledSample::control_rows() const {
    std::vector<std::size_t> r;
    r.reserve(n0_);
    for (std::size_t i = 0; i < treatment_.size(); ++i)
        if (!treatment_[i]) r.push_back(i);
    return r;
}

PooledSample PooledSample::subset(const std::vector<std::size_t>& rows) const {
    std::vector<std::uint8_t> a;
    std::vector<double> y;
    std::vector<std::string> id;
    a.reserve(rows.size());
    y.reserve(rows.size());
    id.reserve(rows.size());
    for (auto r : rows) {
        a.push_back(treatment_[r]);
        y.push_back(outcome_[r]);
        id.push_back(subject_id_[r]);
    }
    return PooledSample(covariates_.subset(rows), std::move(a), std::move(y), std::move(id));
}

PooledSample PooledSample::resample(const std::vector<std::size_t>& rows) const {
    std::vector<std::uint8_t> a;
    std::vector<double> y;
    std::vector<std::string> id;
    a.reserve(rows.size());
    y.reserve(rows.size());
    id.reserve(rows.size());
    std::unordered_map<std::string, std::size_t> seen;
    for (auto r : rows) {
        a.push_back(treatment_[r]);
        y.push_back(outcome_[r]);
        const auto& base = subject_id_[r];
        auto [it, inserted] = seen.try_emplace(base, 0);
        id.push_back(inserted ? base : base + "#" + std::to_string(it->second));
        ++it->second;
    }
    return PooledSample(covariates_.subset(rows), std::move(a), std::move(y), std::move(id));
}

EligibilityFilter::EligibilityFilter(std::vector<EligibilityRule> rules)
    : rules_(std::move(rules)) {
    // min <= max when both bound the same column
    for (const auto& r : rules_) {
        if (r.kind != EligibilityRule::Kind::Min) continue;
        for (const auto& s : rules_) {
            if (s.kind == EligibilityRule::Kind::Max && s.column == r.column &&
                r.threshold > s.threshold)
                throw ValidationError("eligibility rules on '" + r.column +
                                      "': min threshold exceeds max threshold");
        }
    }
}

void EligibilityFilter::validate_against(const CovariateTable& table) const {
    for (const auto& r : rules_)
        if (!table.has_column(r.column))
            throw ValidationError("eligibility rule references unknown column '" + r.column + "'");
}

namespace {

bool rule_holds(const EligibilityRule& rule, double v) {
    switch (rule.kind) {
        case EligibilityRule::Kind::Min: return v >= rule.threshold;
        case EligibilityRule::Kind::Max: return v <= rule.threshold;
        case EligibilityRule::Kind::InSet:
            return std::find(rule.values.begin(), rule.values.end(), v) != rule.values.end();
    }
    return false;
}

} // namespace

PooledSample apply_eligibility(const PooledSample& sample, const EligibilityFilter& filter,
                               EligibilityReport* report) {
    const auto& table = sample.covariates();
    filter.validate_against(table);

    EligibilityReport rep;
    rep.rows_in = sample.n();
    rep.per_rule.resize(filter.rules().size());
    for (std::size_t k = 0; k < filter.rules().size(); ++k)
        rep.per_rule[k].column = filter.rules()[k].column;

    std::vector<std::size_t> kept;
    kept.reserve(sample.n());
    for (std::size_t i = 0; i < sample.n(); ++i) {
        bool keep = true;
        for (std::size_t k = 0; k < filter.rules().size(); ++k) {
            const auto& rule = filter.rules()[k];
            const std::size_t j = table.column_index(rule.column);
            if (table.is_missing(i, j)) {
                ++rep.per_rule[k].excluded_missing;
                keep = false;
            } else if (!rule_holds(rule, table.value(i, j))) {
                ++rep.per_rule[k].excluded_failed;
                keep = false;
            }
        }
        if (keep) kept.push_back(i);
    }
    rep.rows_kept = kept.size();

    std::size_t n1 = 0, n0 = 0;
    for (auto i : kept)
        (sample.treatment()[i] ? n1 : n0)++;
    if (n1 < 2 || n0 < 2)
        throw ValidationError("eligibility filter leaves a degenerate cohort (n1=" +
                              std::to_string(n1) + ", n0=" + std::to_string(n0) + ")");
    if (report) *report = rep;
    return sample.subset(kept);
}

LongitudinalRecord::LongitudinalRecord(std::string id, double t0_, double y0_,
                                       std::vector<Visit> v, std::size_t row)
    : subject_id(std::move(id)), t0(t0_), y0(y0_), visits(std::move(v)), covariate_row(row) {
    if (!std::isfinite(y0))
        throw ValidationError("record '" + subject_id + "': baseline outcome missing");
    std::set<double> times;
    for (const auto& vis : visits) {
        if (vis.t < t0)
            throw ValidationError("record '" + subject_id + "': visit before baseline");
        if (!times.insert(vis.t).second)
            throw ValidationError("record '" + subject_id + "': duplicate visit time");
    }
}

VelocityData compute_velocities(const std::vector<LongitudinalRecord>& records,
                                double horizon, double window) {
    if (window <= 0.0) throw ValidationError("velocity window must be positive");
    VelocityData out;
    for (const auto& rec : records) {
        const VelocityRow* best = nullptr;
        std::vector<VelocityRow> rows;
        rows.reserve(rec.visits.size());
        for (const auto& vis : rec.visits) {
            const double dt = vis.t - rec.t0;
            if (dt <= 0.0) {  // t == t0: velocity undefined
                ++out.skipped_visits;
                continue;
            }
            VelocityRow r;
            r.subject_id = rec.subject_id;
            r.covariate_row = rec.covariate_row;
            r.t = vis.t;
            r.t0 = rec.t0;
            r.y0 = rec.y0;
            r.y = vis.y;
            r.v = (vis.y - rec.y0) / dt;
            rows.push_back(r);
        }
        for (const auto& r : rows) out.training.push_back(r);
        const double target = rec.t0 + horizon;
        for (const auto& r : rows) {
            if (std::abs(r.t - target) > window) continue;
            if (!best || std::abs(r.t - target) < std::abs(best->t - target) ||
                (std::abs(r.t - target) == std::abs(best->t - target) && r.t < best->t))
                best = &r;
        }
        if (best)
            out.evaluation.push_back(*best);
        else
            ++out.excluded_subjects;
    }
    return out;
}

} // namespace scarm
