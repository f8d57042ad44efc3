#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "duprate/rng.hpp"

namespace duprate::sim {

/// Per-type rates of the incident / report / death process.
///
/// Incidents of this type are born at rate exp(incident_log_rate) and, while
/// alive, are reported at rate exp(report_log_rate). After m reports the
/// death clock runs at death_base_rate * death_scale^m.
struct TypeSpec {
    int index = 0;
    std::vector<double> covariates;
    double incident_log_rate = 0.0;
    double report_log_rate = 0.0;
    double death_base_rate = 0.0;  // per day
    double death_scale = 1.0;      // multiplier per report, >= 1

    double incident_rate() const;
    double report_rate() const;
    double death_rate_after(std::size_t reports) const;

    /// Throws std::invalid_argument on a violated invariant.
    void validate() const;

    /// Rates as log-linear functions of the type covariates.
    static TypeSpec from_regression(int index, std::vector<double> theta,
                                    double incident_intercept,
                                    std::span<const double> incident_coefs,
                                    double report_intercept,
                                    std::span<const double> report_coefs,
                                    double death_base_rate, double death_scale);
};

struct IncidentTrace {
    std::uint64_t id = 0;
    int type_index = 0;
    double birth = 0.0;
    /// Death time, capped at the horizon when `censored`.
    double death = 0.0;
    bool censored = false;
    std::vector<double> report_times;

    std::size_t total_reports() const { return report_times.size(); }
    bool observed() const { return !report_times.empty(); }
};

/// Distribution of incident lifetimes for the independent-duration model.
class DurationDistribution {
public:
    struct Exponential { double rate; };
    struct PointMass { double value; };
    struct Empirical { std::vector<double> samples; };

    static DurationDistribution exponential(double rate);
    static DurationDistribution point_mass(double value);
    static DurationDistribution empirical(std::vector<double> samples);

    double sample(SplitMix64& rng) const;

    /// E[exp(-s T)] for T ~ this distribution.
    double laplace_transform(double s) const;

    const std::variant<Exponential, PointMass, Empirical>& kind() const { return kind_; }

private:
    explicit DurationDistribution(std::variant<Exponential, PointMass, Empirical> k)
        : kind_(std::move(k)) {}
    std::variant<Exponential, PointMass, Empirical> kind_;
};

struct SimConfig {
    std::vector<TypeSpec> types;
    double horizon = 300.0;
    std::uint64_t seed = 0;
    int replicates = 1;

    void validate() const;
};

/// Competing exponential clocks: after m reports a death clock
/// Exp(mu * gamma^m) races a report clock Exp(lambda). Ties go to death.
/// Reports past the horizon are discarded.
IncidentTrace simulate_incident(const TypeSpec& type, double birth, double horizon,
                                SplitMix64& rng);

/// Lifetime drawn from `lifetime` independently of reports; reports form a
/// Poisson(report_rate) process on [birth, min(birth + T, horizon)].
IncidentTrace simulate_incident_with_duration(double report_rate,
                                              const DurationDistribution& lifetime,
                                              double birth, double horizon, SplitMix64& rng);

/// All incidents born on [0, horizon] that were reported at least once,
/// ordered by type then birth. Each replicate uses its own substreams.
std::vector<IncidentTrace> simulate_system(const SimConfig& config, int replicate = 0);

/// Births of one type over [0, horizon] and their traces, unobserved included.
std::vector<IncidentTrace> simulate_type(const TypeSpec& type, double horizon,
                                         std::uint64_t seed, int replicate);

struct ReportSummary {
    std::size_t incidents = 0;
    std::size_t reports = 0;
    std::size_t duplicates = 0;
    double duplicate_fraction() const;
};

/// Counts over observed traces; `type_index` < 0 summarizes every type.
ReportSummary summarize(std::span<const IncidentTrace> traces, int type_index = -1);

/// Steady-state rate of newly observed incidents,
/// Lambda * (1 - E[exp(-lambda T)]).
double steady_state_observed_rate(double incident_rate, double report_rate,
                                  const DurationDistribution& lifetime);

struct ObservedRateEstimate {
    double rate = 0.0;
    double standard_error = 0.0;
    std::size_t count = 0;
};

/// Simulated rate of first reports inside [burn_in, horizon] under the
/// independent-duration model.
ObservedRateEstimate simulate_observed_incident_rate(double incident_rate, double report_rate,
                                                     const DurationDistribution& lifetime,
                                                     double horizon, double burn_in,
                                                     std::uint64_t seed);

struct CalibrationOptions {
    double tolerance = 0.01;
    double min_rate = 1e-6;
    double max_rate = 1e3;
    int replicates = 10;
    int max_iterations = 200;
};

struct CalibrationResult {
    double death_base_rate = 0.0;
    double death_scale = 1.0;
    double achieved_fraction = 0.0;
    int iterations = 0;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bisection on log(mu) at fixed death_scale so that the simulated duplicate
/// fraction matches the target. Common random numbers across evaluations.
CalibrationResult calibrate_death_params(double target_duplicate_fraction, double report_rate,
                                         double incident_rate, double horizon,
                                         double death_scale, std::uint64_t seed,
                                         const CalibrationOptions& options = {});

/// Simulated duplicate fraction for a single-type system.
double simulated_duplicate_fraction(double death_base_rate, double death_scale,
                                    double report_rate, double incident_rate, double horizon,
                                    std::uint64_t seed, int replicates);

/// Ground truth for a report log with known regression structure.
///
/// Every incident is first reported at a uniform time in [0, span_days].
/// With probability `zero_inflation` nobody else reports it; otherwise
/// further reports arrive at rate exp(intercept + coefs . x + level effects).
/// Inspection happens Exp(inspection_rate) after the first report and the
/// work order is finished Exp(workorder_rate) after inspection; reports keep
/// arriving until the work order is done.
struct ReportLogSpec {
    struct Factor {
        std::string name;
        std::vector<std::string> levels;
        std::vector<double> effects;  // one per level
    };
    std::size_t incidents = 1000;
    double intercept = 0.0;
    std::vector<std::string> covariate_names;
    std::vector<double> covariate_coefs;
    std::vector<Factor> factors;
    double zero_inflation = 0.0;
    double span_days = 365.0;
    double inspection_rate = 0.2;
    double workorder_rate = 0.5;
    /// Chance that a report is followed by a repeat call from the same caller.
    double repeat_call_probability = 0.0;
    std::uint64_t seed = 0;
};

struct SyntheticReport {
    double created = 0.0;
    int caller = 0;  // caller id unique within the incident
};

struct SyntheticIncident {
    std::uint64_t id = 0;
    std::vector<double> covariates;
    std::vector<int> levels;  // index into ReportLogSpec::factors[k].levels
    bool zero_inflated = false;
    double log_rate = 0.0;
    double inspection = 0.0;
    double workorder_done = 0.0;
    std::vector<SyntheticReport> reports;  // sorted, first is the initial report
};

std::vector<SyntheticIncident> simulate_report_log(const ReportLogSpec& spec);

}  // namespace duprate::sim
