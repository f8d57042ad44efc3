#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "duprate/analysis.hpp"
#include "duprate/estimators.hpp"
#include "duprate/intervals.hpp"
#include "duprate/metropolis.hpp"
#include "duprate/sim_engine.hpp"

namespace duprate::io {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

/// Malformed configuration; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& problem)
        : std::runtime_error(key + ": " + problem), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

std::string sha256_hex(std::string_view data);

/// Header carried by every output file.
struct Provenance {
    std::string config_sha;
    std::uint64_t seed = 0;

    /// "# duprate <version> config_sha=<hex> seed=<n>"
    std::string comment() const;
    json to_json() const;
};

Provenance make_provenance(const json& config, std::uint64_t seed);

json load_json(const std::string& path);
void write_json(const std::string& path, json body, const Provenance& prov);

// ---- configuration blocks -------------------------------------------------

sim::SimConfig parse_sim_config(const json& block, std::uint64_t seed);
sim::CalibrationOptions parse_calibration_options(const json& block);
sim::ReportLogSpec parse_report_log_spec(const json& block, std::uint64_t seed);
intervals::BuildOptions parse_build_options(const json& block);
estimators::ModelSpec parse_model_spec(const json& block);
estimators::OptimizerOptions parse_optimizer_options(const json& block);
metropolis::SamplerOptions parse_sampler_options(const json& block, std::uint64_t seed);
intervals::StandardizationStats parse_standardization(const json& block);
json standardization_to_json(const intervals::StandardizationStats& stats);
analysis::CovariateProfile parse_profile(const json& block, const std::string& key);

// ---- tables ---------------------------------------------------------------

/// Required columns: report_id, incident_id, created. Optional: category,
/// tract_id, first_name, last_name, phone, email, inspection,
/// workorder_created, workorder_closed, closed. Every other column is kept as
/// a label and, when numeric, as a covariate.
std::vector<intervals::ReportRow> read_reports(const std::string& path);
void write_reports(std::ostream& out, const std::vector<intervals::ReportRow>& rows, const Provenance& prov);

std::vector<intervals::ObservationRecord> read_observations(const std::string& path);
void write_observations(std::ostream& out, const std::vector<intervals::ObservationRecord>& records,
                        const Provenance& prov);

void write_traces(std::ostream& out, const std::vector<sim::IncidentTrace>& traces, int replicate,
                  const Provenance& prov);

/// Columns: name, mean, sd, q2.5, q97.5. Drop-one reference levels are
/// written as zero rows.
void write_coefficients(std::ostream& out, const estimators::FitResult& fit, const Provenance& prov);
estimators::FitResult read_coefficients(const std::string& path);

json fit_diagnostics(const estimators::FitResult& fit);

// ---- conversions ----------------------------------------------------------

/// One report per simulated report time. Reports of an incident share its id;
/// every report has a distinct caller; `closed` is the death time unless the
/// incident outlived the horizon. Times are offset by `epoch_day`.
std::vector<intervals::ReportRow> traces_to_reports(const std::vector<sim::IncidentTrace>& traces,
                                                    Days epoch_day = 0.0);

/// Report rows for a synthetic log, with covariates as numeric columns and
/// factor levels as labels.
std::vector<intervals::ReportRow> synthetic_to_reports(const std::vector<sim::SyntheticIncident>& log,
                                                       const sim::ReportLogSpec& spec,
                                                       Days epoch_day = 0.0);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace duprate::io
