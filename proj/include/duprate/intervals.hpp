#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "duprate/timestamp.hpp"

namespace duprate::intervals {

/// One service request as it appears in a raw report log.
struct ReportRow {
    std::string report_id;
    std::optional<std::string> incident_id;
    Days created = 0.0;
    std::string category;
    std::optional<std::string> tract_id;
    // Hashed caller identifiers.
    std::optional<std::string> first_name;
    std::optional<std::string> last_name;
    std::optional<std::string> phone;
    std::optional<std::string> email;
    std::optional<Days> inspection;
    std::optional<Days> workorder;       // work order placed
    std::optional<Days> workorder_done;  // work order completed
    std::optional<Days> closed;
    std::map<std::string, double> numeric;
    std::map<std::string, std::string> labels;

    bool has_caller_info() const { return first_name || last_name || phone || email; }
};

enum class IntervalVariant { NYC, Chicago, IncorrectLastReport };

struct IntervalPolicy {
    IntervalVariant variant = IntervalVariant::NYC;
    double max_duration = 100.0;                // days
    std::optional<Days> data_retrieval_time;    // Chicago only
    double min_duration = 0.1;                  // days

    void validate() const;

    static IntervalPolicy nyc(double max_duration = 100.0, double min_duration = 0.1);
    static IntervalPolicy chicago(Days retrieval_time, double max_duration = 100.0,
                                  double min_duration = 0.01);
    static IntervalPolicy last_report(double min_duration = 0.0);
};

/// One analysis row: duplicates counted in the interval (start, end].
struct ObservationRecord {
    std::string incident_id;
    Days start = 0.0;
    Days end = 0.0;
    std::size_t m_tilde = 0;
    std::map<std::string, double> covariates;
    std::map<std::string, std::string> labels;
    std::optional<Days> inspection;
    std::optional<Days> workorder_done;

    double exposure() const { return end - start; }
};

struct Rejection {
    std::string incident_id;
    std::string reason;
};

using IntervalOutcome = std::variant<ObservationRecord, Rejection>;

// Rejection reasons, used as keys of the filter report.
inline constexpr const char* kRepeatCaller = "repeat caller";
inline constexpr const char* kMissingIncident = "missing incident id";
inline constexpr const char* kInspectionBeforeReport = "inspection before first report";
inline constexpr const char* kNonPositiveExposure = "non-positive exposure";
inline constexpr const char* kShortExposure = "exposure below minimum";
inline constexpr const char* kMissingCovariate = "missing covariate";

struct RepeatFilterResult {
    std::vector<ReportRow> rows;
    std::size_t dropped = 0;
};

/// Within each incident, drops a report matching an earlier retained report
/// on phone, on email, or on both first and last name. In conservative mode a
/// report without any caller information also matches an earlier one without
/// caller information. Rows without an incident id pass through unchanged.
RepeatFilterResult filter_repeat_callers(std::vector<ReportRow> rows, bool conservative);

/// True when `later` counts as a repeat of `earlier` under the rule above.
bool same_caller(const ReportRow& earlier, const ReportRow& later, bool conservative);

struct GroupingResult {
    std::map<std::string, std::vector<ReportRow>> groups;  // sorted by created
    std::size_t missing_incident_id = 0;
};

GroupingResult group_into_incidents(std::vector<ReportRow> rows);

struct IntervalInputs {
    std::vector<std::string> covariates;  // numeric columns copied into the record
    std::vector<std::string> labels;      // categorical columns copied into the record
};

/// Builds the observation interval for one incident. Incident-level fields
/// come from the first report; timestamps of inspection / work order / closure
/// use the earliest value present in the group.
IntervalOutcome build_interval(std::span<const ReportRow> group, const IntervalPolicy& policy,
                               const IntervalInputs& inputs = {});

struct StandardizationStats {
    struct Entry {
        std::string name;
        double mean = 0.0;
        double sd = 1.0;
        bool log_transformed = false;
    };
    std::vector<Entry> entries;

    const Entry* find(const std::string& name) const;
    /// Log (when configured) then (x - mean) / sd.
    double apply(const std::string& name, double raw) const;
};

class StandardizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StandardizeResult {
    std::vector<ObservationRecord> records;
    StandardizationStats stats;
};

/// Training mode (no stats): log-transform the listed covariates, then
/// standardize each covariate with its mean and sample standard deviation.
/// Scoring mode: apply the given stats. Zero variance throws, naming the
/// covariate.
StandardizeResult standardize_covariates(std::vector<ObservationRecord> records,
                                         const std::optional<StandardizationStats>& stats,
                                         const std::vector<std::string>& log_transform = {});

struct FilterReport {
    std::size_t input_rows = 0;
    std::size_t incidents = 0;
    std::size_t records = 0;
    std::map<std::string, std::size_t> dropped;  // reason -> count
};

struct BuildOptions {
    IntervalPolicy policy;
    bool conservative_repeat_filter = false;
    IntervalInputs inputs;
    bool standardize = true;
    std::vector<std::string> log_transform;
};

struct BuildResult {
    std::vector<ObservationRecord> records;
    StandardizationStats stats;
    FilterReport report;
};

/// Repeat-caller filtering, grouping, interval construction, and
/// standardization in one pass.
BuildResult build_observations(std::vector<ReportRow> rows, const BuildOptions& options,
                               const std::optional<StandardizationStats>& stats = std::nullopt);

}  // namespace duprate::intervals
