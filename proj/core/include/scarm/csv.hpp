#pragma once

#include <string>
#include <vector>

#include "scarm/data.hpp"

namespace scarm {

// Column-role map for a pooled cross-sectional CSV. Eligibility rules are
// applied separately; this only names the columns.
struct PooledSchema {
    std::string id;
    std::string treatment;
    std::string outcome;
    std::vector<std::string> covariates;
};

// Raw rectangular CSV: header + string cells. Missing is "" or "NA".
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t column_index(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

// Parses and validates a pooled sample: treatment must be 0/1, outcome and id
// non-missing, ids unique, covariate missingness preserved via the mask.
// Row numbers in error messages are 1-based data rows (header excluded).
PooledSample load_pooled(const std::string& path, const PooledSchema& schema);

// Inverse of load_pooled up to column order: id, treatment, outcome, then
// covariates in schema order. Doubles are printed round-trip exact.
void save_pooled(const std::string& path, const PooledSample& sample,
                 const PooledSchema& schema);

// Long-format visits table (one row per subject-visit) for velocity models.
struct VisitsSchema {
    std::string id;
    std::string time;
    std::string value;
};

struct SubjectVisits {
    std::string subject_id;
    std::vector<Visit> visits; // sorted by time
};

std::vector<SubjectVisits> load_visits(const std::string& path, const VisitsSchema& schema);

std::string format_double(double v);

} // namespace scarm
