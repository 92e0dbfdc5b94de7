#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scarm {

// One baseline covariate column. Missing cells are tracked by an explicit
// mask so downstream imputation can distinguish observed zeros from holes.
struct Column {
    std::string name;
    std::vector<double> values;       // undefined where missing[i] != 0
    std::vector<std::uint8_t> missing;
};

class CovariateTable {
public:
    CovariateTable() = default;
    CovariateTable(std::vector<Column> columns, std::size_t n_rows);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t j) const { return columns_[j]; }
    // Index of a named column; throws ValidationError when absent.
    std::size_t column_index(const std::string& name) const;
    bool has_column(const std::string& name) const;

    bool is_missing(std::size_t row, std::size_t col) const {
        return columns_[col].missing[row] != 0;
    }
    double value(std::size_t row, std::size_t col) const {
        return columns_[col].values[row];
    }

    CovariateTable subset(const std::vector<std::size_t>& rows) const;

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

// Pooled trial (A=1) plus external control (A=0) sample. Immutable after
// construction; estimation code only ever reads it.
class PooledSample {
public:
    PooledSample() = default;
    PooledSample(CovariateTable covariates, std::vector<std::uint8_t> treatment,
                 std::vector<double> outcome, std::vector<std::string> subject_id);

    const CovariateTable& covariates() const { return covariates_; }
    const std::vector<std::uint8_t>& treatment() const { return treatment_; }
    const std::vector<double>& outcome() const { return outcome_; }
    const std::vector<std::string>& subject_id() const { return subject_id_; }

    std::size_t n() const { return treatment_.size(); }
    std::size_t n_treated() const { return n1_; }
    std::size_t n_control() const { return n0_; }

    std::vector<std::size_t> treated_rows() const;
    std::vector<std::size_t> control_rows() const;

    PooledSample subset(const std::vector<std::size_t>& rows) const;

    // subset that tolerates repeated rows (bootstrap draws): the k-th
    // duplicate of a subject id gets a "#k" suffix so each drawn row counts
    // as its own subject downstream.
    PooledSample resample(const std::vector<std::size_t>& rows) const;

private:
    CovariateTable covariates_;
    std::vector<std::uint8_t> treatment_;
    std::vector<double> outcome_;
    std::vector<std::string> subject_id_;
    std::size_t n1_ = 0, n0_ = 0;
};

struct EligibilityRule {
    enum class Kind { Min, Max, InSet };
    std::string column;
    Kind kind = Kind::Min;
    double threshold = 0.0;          // Min / Max
    std::vector<double> values;      // InSet
};

class EligibilityFilter {
public:
    EligibilityFilter() = default;
    explicit EligibilityFilter(std::vector<EligibilityRule> rules);
    const std::vector<EligibilityRule>& rules() const { return rules_; }
    // Checks referenced columns exist and min <= max per column.
    void validate_against(const CovariateTable& table) const;

private:
    std::vector<EligibilityRule> rules_;
};

struct EligibilityReport {
    struct PerRule {
        std::string column;
        std::size_t excluded_failed = 0;   // value present, rule violated
        std::size_t excluded_missing = 0;  // value missing in filtered column
    };
    std::vector<PerRule> per_rule;
    std::size_t rows_in = 0;
    std::size_t rows_kept = 0;
};

// Keeps rows satisfying every rule; rows with a missing value in a filtered
// column are dropped. Throws ValidationError when either arm ends below 2.
PooledSample apply_eligibility(const PooledSample& sample, const EligibilityFilter& filter,
                               EligibilityReport* report = nullptr);

// ---- Longitudinal outcomes -> per-visit velocities ----

struct Visit {
    double t = 0.0; // days
    double y = 0.0;
};

struct LongitudinalRecord {
    std::string subject_id;
    double t0 = 0.0;
    double y0 = 0.0;             // baseline outcome, required non-missing
    std::vector<Visit> visits;   // t >= t0, unique times
    std::size_t covariate_row = 0;

    LongitudinalRecord() = default;
    LongitudinalRecord(std::string id, double t0_, double y0_, std::vector<Visit> v,
                       std::size_t row);
};

struct VelocityRow {
    std::string subject_id;
    std::size_t covariate_row = 0;
    double t = 0.0;   // visit time
    double t0 = 0.0;
    double y0 = 0.0;
    double y = 0.0;   // observed outcome at t
    double v = 0.0;   // (y - y0) / (t - t0)
};

struct VelocityData {
    std::vector<VelocityRow> training;    // one row per usable post-baseline visit
    std::vector<VelocityRow> evaluation;  // one row per subject with a visit near horizon
    std::size_t skipped_visits = 0;       // t == t0 guard hits
    std::size_t excluded_subjects = 0;    // no visit within horizon +/- window
};

// Training rows: v = (y(t) - y0) / (t - t0) for every visit with t > t0.
// Evaluation rows: the visit nearest to `horizon` within +/- `window`
// (ties resolved toward the earlier visit); subjects with none are excluded.
VelocityData compute_velocities(const std::vector<LongitudinalRecord>& records,
                                double horizon, double window);

} // namespace scarm
