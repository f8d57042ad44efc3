#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "duprate/estimators.hpp"
#include "duprate/intervals.hpp"

namespace duprate::analysis {

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Covariate values and factor levels describing one kind of incident.
/// `covariates` are raw unless `standardized` is set, in which case they are
/// used as-is.
struct CovariateProfile {
    std::map<std::string, std::string> levels;
    std::map<std::string, double> covariates;
    bool standardized = false;
};

/// Linear predictor of the fitted log reporting rate for a profile. Factor
/// coefficients are matched by "factor[level]" names; drop-one reference
/// levels contribute zero.
double linear_predictor(const estimators::FitResult& fit, const CovariateProfile& profile,
                        const intervals::StandardizationStats* stats);

CovariateProfile profile_of(const intervals::ObservationRecord& record);

struct DelayEstimate {
    double rate = 0.0;        // reports per day
    double mean_delay = 0.0;  // 1 / rate
    std::optional<double> window;
    std::optional<double> conditional_mean;  // E[D | D < window]
};

DelayEstimate expected_delay(const estimators::FitResult& fit, const CovariateProfile& profile,
                             const intervals::StandardizationStats* stats,
                             std::optional<double> window = std::nullopt);

/// E[D | D < W] for D ~ Exponential(rate).
double conditional_mean_delay(double rate, double window);

/// Monte Carlo estimate of the same quantity from `draws` truncated draws.
double conditional_mean_delay_mc(double rate, double window, std::uint64_t draws, std::uint64_t seed);

/// Dot product of a standardized profile with matching coefficients.
double cumulative_association(std::span<const double> coefficients, std::span<const double> profile);

/// Same, with coefficients looked up by name in a fit.
double cumulative_association(const estimators::FitResult& fit,
                              const std::map<std::string, double>& profile);

struct PredictiveCheck {
    std::size_t cap = 0;                    // last bin counts values >= cap
    std::vector<std::uint64_t> predicted;   // counts per bin over all draws
    std::vector<std::uint64_t> observed;    // counts per bin, once per record
    std::vector<double> mean_prediction;    // (1 - gamma) * lambda_i * tau_i per record
    double analytic_mean = 0.0;             // average of mean_prediction
    double simulated_mean = 0.0;            // average simulated count
    double mean_correlation = 0.0;          // Pearson(mean_prediction, observed counts)
    double histogram_correlation = 0.0;     // Pearson over normalized bin frequencies
};

PredictiveCheck posterior_predictive(const estimators::FitResult& fit,
                                     std::span<const intervals::ObservationRecord> records,
                                     std::size_t draws, std::uint64_t seed, std::size_t cap = 20);

struct Bin {
    std::size_t count = 0;
    double mean_predicted = 0.0;
    double mean_observed = 0.0;
};

struct BinnedComparison {
    std::vector<Bin> bins;
    double bin_correlation = 0.0;
    double individual_correlation = 0.0;
};

/// Equal-count bins on the predicted value. Pairs are ordered by (predicted,
/// observed) so the result does not depend on input order.
BinnedComparison binned_validation(std::span<const double> predicted, std::span<const double> observed,
                                   std::size_t n_bins = 30);

struct EndToEndOptions {
    std::string group_by = "borough";
    std::vector<std::string> groups;  // reporting order; every group present when empty
    bool impute_missing_as_infinite = false;
};

struct GroupDelays {
    std::string group;
    std::size_t records = 0;
    double reporting = 0.0;  // medians, days
    double inspection = 0.0;
    double workorder = 0.0;
    double total = 0.0;  // median of per-record totals
};

struct RelativeRow {
    std::string group;
    std::string component;  // reporting, inspection, workorder, total
    double median_days = 0.0;
    double relative_pct = 0.0;  // 100 * (group median - citywide median) / citywide median
};

struct EndToEndResult {
    std::vector<GroupDelays> groups;
    GroupDelays citywide;
    std::vector<RelativeRow> relative;
    std::vector<std::string> warnings;
    std::size_t excluded = 0;  // records without inspection or work-order times
};

EndToEndResult end_to_end_delays(std::span<const intervals::ObservationRecord> records,
                                 const estimators::FitResult& fit, const EndToEndOptions& options);

}  // namespace duprate::analysis
