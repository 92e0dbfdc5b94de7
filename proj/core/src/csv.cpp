#include "scarm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "scarm/errors.hpp"

namespace scarm {

namespace {

bool is_missing_cell(const std::string& s) { return s.empty() || s == "NA"; }

std::vector<std::string> split_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            if (!cell.empty())
                throw ConfigError("CSV parse error at line " + std::to_string(lineno) +
                                  ": quote inside unquoted cell");
            quoted = true;
        } else if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    if (quoted)
        throw ConfigError("CSV parse error at line " + std::to_string(lineno) +
                          ": unterminated quote");
    out.push_back(cell);
    return out;
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("CSV parse error in row " + std::to_string(row) + ", column '" + col +
                          "': cannot parse '" + s + "' as a number");
    return v;
}

} // namespace

std::size_t CsvTable::column_index(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw ConfigError("CSV is missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && lineno > 1) continue;
        auto cells = split_line(line, lineno);
        if (lineno == 1) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError("CSV parse error at line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " cells, found " +
                              std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw ConfigError("CSV file '" + path + "' has no header row");
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file '" + path + "'");
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const std::string& c = cells[j];
            const bool quote = c.find_first_of(",\"\n") != std::string::npos;
            if (j) out << ',';
            if (quote) {
                out << '"';
                for (char ch : c) {
                    if (ch == '"') out << "\"\"";
                    else out << ch;
                }
                out << '"';
            } else {
                out << c;
            }
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows) emit(r);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

PooledSample load_pooled(const std::string& path, const PooledSchema& schema) {
    if (schema.id.empty() || schema.treatment.empty() || schema.outcome.empty())
        throw ConfigError("pooled schema must name id, treatment and outcome columns");
    const CsvTable t = read_csv(path);
    const std::size_t jid = t.column_index(schema.id);
    const std::size_t jtr = t.column_index(schema.treatment);
    const std::size_t jy = t.column_index(schema.outcome);
    std::vector<std::size_t> jcov;
    for (const auto& name : schema.covariates) jcov.push_back(t.column_index(name));

    const std::size_t n = t.rows.size();
    if (n == 0) throw ValidationError("'" + path + "' contains no data rows");

    std::vector<std::uint8_t> a(n);
    std::vector<double> y(n);
    std::vector<std::string> id(n);
    std::vector<Column> cols(jcov.size());
    for (std::size_t k = 0; k < jcov.size(); ++k) {
        cols[k].name = schema.covariates[k];
        cols[k].values.assign(n, 0.0);
        cols[k].missing.assign(n, 0);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = t.rows[i];
        const std::size_t rowno = i + 1;
        if (is_missing_cell(r[jid]))
            throw ValidationError("missing subject id in row " + std::to_string(rowno));
        id[i] = r[jid];
        if (is_missing_cell(r[jtr]))
            throw ValidationError("missing treatment value in row " + std::to_string(rowno));
        const double av = parse_double(r[jtr], rowno, schema.treatment);
        if (av != 0.0 && av != 1.0)
            throw ValidationError("treatment value " + r[jtr] + " outside {0,1} in row " +
                                  std::to_string(rowno));
        a[i] = static_cast<std::uint8_t>(av);
        if (is_missing_cell(r[jy]))
            throw ValidationError("missing outcome in row " + std::to_string(rowno));
        y[i] = parse_double(r[jy], rowno, schema.outcome);
        for (std::size_t k = 0; k < jcov.size(); ++k) {
            const std::string& cell = r[jcov[k]];
            if (is_missing_cell(cell)) {
                cols[k].missing[i] = 1;
            } else {
                cols[k].values[i] = parse_double(cell, rowno, schema.covariates[k]);
            }
        }
    }
    return PooledSample(CovariateTable(std::move(cols), n), std::move(a), std::move(y),
                        std::move(id));
}

void save_pooled(const std::string& path, const PooledSample& sample,
                 const PooledSchema& schema) {
    CsvTable t;
    t.header.push_back(schema.id);
    t.header.push_back(schema.treatment);
    t.header.push_back(schema.outcome);
    for (const auto& c : schema.covariates) t.header.push_back(c);
    const auto& table = sample.covariates();
    std::vector<std::size_t> jcov;
    for (const auto& c : schema.covariates) jcov.push_back(table.column_index(c));
    for (std::size_t i = 0; i < sample.n(); ++i) {
        std::vector<std::string> row;
        row.push_back(sample.subject_id()[i]);
        row.push_back(sample.treatment()[i] ? "1" : "0");
        row.push_back(format_double(sample.outcome()[i]));
        for (auto j : jcov)
            row.push_back(table.is_missing(i, j) ? "NA" : format_double(table.value(i, j)));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

std::vector<SubjectVisits> load_visits(const std::string& path, const VisitsSchema& schema) {
    const CsvTable t = read_csv(path);
    const std::size_t jid = t.column_index(schema.id);
    const std::size_t jt = t.column_index(schema.time);
    const std::size_t jv = t.column_index(schema.value);
    std::map<std::string, std::vector<Visit>> by_id;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::size_t rowno = i + 1;
        if (is_missing_cell(r[jid]))
            throw ValidationError("missing subject id in visits row " + std::to_string(rowno));
        if (is_missing_cell(r[jt]) || is_missing_cell(r[jv])) continue; // unusable visit
        Visit v;
        v.t = parse_double(r[jt], rowno, schema.time);
        v.y = parse_double(r[jv], rowno, schema.value);
        auto [it, inserted] = by_id.try_emplace(r[jid]);
        if (inserted) order.push_back(r[jid]);
        it->second.push_back(v);
    }
    std::vector<SubjectVisits> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        SubjectVisits sv;
        sv.subject_id = id;
        sv.visits = by_id[id];
        std::sort(sv.visits.begin(), sv.visits.end(),
                  [](const Visit& a, const Visit& b) { return a.t < b.t; });
        out.push_back(std::move(sv));
    }
    return out;
}

} // namespace scarm
