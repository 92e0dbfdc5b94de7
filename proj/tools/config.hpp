#pragma once

#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scarm/csv.hpp"
#include "scarm/data.hpp"
#include "scarm/pipeline.hpp"
#include "scarm/power.hpp"
#include "scarm/simulation.hpp"

namespace scarm::cli {

using nlohmann::json;

// Strict reader: every key must be consumed, unknown keys are rejected with
// their JSON-pointer path. Pre-specified analyses should not silently ignore
// typos.
class ConfigReader {
public:
    ConfigReader(const json& node, std::string path);

    bool has(const std::string& key) const;
    ConfigReader child(const std::string& key);
    std::optional<ConfigReader> child_optional(const std::string& key);

    template <typename T>
    T require(const std::string& key) {
        mark(key);
        const json* v = find(key);
        if (!v) missing(key);
        return convert<T>(*v, key);
    }

    template <typename T>
    T value_or(const std::string& key, T fallback) {
        mark(key);
        const json* v = find(key);
        if (!v || v->is_null()) return fallback;
        return convert<T>(*v, key);
    }

    const json& raw(const std::string& key); // consumes without conversion

    // throws listing any unconsumed keys
    void finish() const;

    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& message) const;

private:
    const json& node_;
    std::string path_;
    std::set<std::string> consumed_;

    const json* find(const std::string& key) const;
    void mark(const std::string& key) { consumed_.insert(key); }
    [[noreturn]] void missing(const std::string& key) const;

    template <typename T>
    T convert(const json& v, const std::string& key) const {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config error at " + path_ + "/" + key + ": wrong type");
        }
    }
};

struct EstimateCommand {
    std::string csv_path;
    PooledSchema schema;
    EligibilityFilter eligibility;
    bool has_eligibility = false;

    // velocity mode (optional)
    bool velocity = false;
    std::string visits_csv;
    VisitsSchema visits_schema;
    double horizon = 0.0;
    double window = 60.0;

    AnalysisConfig analysis;
    double expected_tau = 0.0;
    std::optional<double> sd_hist; // default: control outcome SD
};

struct DesignCommand {
    PowerSpec spec;                 // n1 may be 0 when solving
    bool have_n1 = false;
    std::optional<double> target_power;
    double rho0 = 0.0;
    GammaEstimate gamma;            // resolved from gamma | gamma_smd | gamma_pilot
    std::vector<double> grid_n0_over_n1;
    std::vector<double> grid_gamma;
};

struct SimulateCommand {
    DgpSpec dgp;
    McEstimatorSpec estimator;
    std::size_t reps = 500;
};

struct SweepCommand {
    SweepConfig config;
};

struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::optional<EstimateCommand> estimate;
    std::optional<DesignCommand> design;
    std::optional<SimulateCommand> simulate;
    std::optional<SweepCommand> sweep;
    std::string config_hash; // FNV-1a of the effective config
};

RunConfig parse_config(const json& root, std::optional<std::uint64_t> seed_override,
                       std::optional<std::string> out_override);

std::string fnv1a_hex(const std::string& bytes);

} // namespace scarm::cli
