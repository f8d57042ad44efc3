#include "duprate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "duprate/rng.hpp"
#include "duprate/stats.hpp"

namespace duprate::analysis {

namespace {

constexpr std::uint64_t kPredictiveStream = 0x99;

struct ParsedName {
    std::string factor;
    std::string level;
};

std::optional<ParsedName> parse_level_name(const std::string& name) {
    const auto open = name.find('[');
    if (open == std::string::npos || open == 0 || name.back() != ']') return std::nullopt;
    return ParsedName{name.substr(0, open), name.substr(open + 1, name.size() - open - 2)};
}

}  // namespace

CovariateProfile profile_of(const intervals::ObservationRecord& record) {
    CovariateProfile p;
    p.levels = record.labels;
    p.covariates = record.covariates;
    p.standardized = true;
    return p;
}

double linear_predictor(const estimators::FitResult& fit, const CovariateProfile& profile,
                        const intervals::StandardizationStats* stats) {
    double eta = 0.0;
    std::set<std::string> factors;
    std::map<std::string, double> level_coefs;
    for (const auto& c : fit.coefficients) {
        if (c.name == estimators::kZeroInflationName) continue;
        if (c.name == "Intercept") {
            eta += c.estimate;
        } else if (auto parsed = parse_level_name(c.name)) {
            factors.insert(parsed->factor);
            level_coefs[c.name] = c.estimate;
        } else {
            auto it = profile.covariates.find(c.name);
            if (it == profile.covariates.end())
                throw AnalysisError("profile lacks covariate '" + c.name + "'");
            double z = it->second;
            if (!profile.standardized) {
                if (!stats)
                    throw AnalysisError("raw covariate '" + c.name +
                                        "' given without standardization stats");
                z = stats->apply(c.name, z);
            }
            eta += c.estimate * z;
        }
    }
    for (const auto& [name, ref] : fit.reference_levels) factors.insert(name);
    for (const auto& f : factors) {
        auto lv = profile.levels.find(f);
        if (lv == profile.levels.end()) throw AnalysisError("profile lacks factor '" + f + "'");
        auto coef = level_coefs.find(design::level_name(f, lv->second));
        if (coef != level_coefs.end()) {
            eta += coef->second;
            continue;
        }
        auto ref = fit.reference_levels.find(f);
        if (ref == fit.reference_levels.end() || ref->second != lv->second)
            throw AnalysisError("unseen level '" + lv->second + "' for factor '" + f + "'");
    }
    return eta;
}

DelayEstimate expected_delay(const estimators::FitResult& fit, const CovariateProfile& profile,
                             const intervals::StandardizationStats* stats, std::optional<double> window) {
    DelayEstimate d;
    d.rate = std::exp(linear_predictor(fit, profile, stats));
    d.mean_delay = 1.0 / d.rate;
    if (window) {
        d.window = window;
        d.conditional_mean = conditional_mean_delay(d.rate, *window);
    }
    return d;
}

double conditional_mean_delay(double rate, double window) {
    if (!(rate > 0.0)) throw std::invalid_argument("conditional_mean_delay: rate must be > 0");
    if (!(window > 0.0)) throw std::invalid_argument("conditional_mean_delay: window must be > 0");
    if (std::isinf(rate)) return 0.0;
    const double x = rate * window;
    if (x < 1e-12) return window / 2.0;
    return 1.0 / rate - window / std::expm1(x);
}

double conditional_mean_delay_mc(double rate, double window, std::uint64_t draws, std::uint64_t seed) {
    if (!(rate > 0.0) || !(window > 0.0) || draws == 0)
        throw std::invalid_argument("conditional_mean_delay_mc: rate, window and draws must be > 0");
    auto g = substream(seed, kPredictiveStream, 1);
    const double mass = -std::expm1(-rate * window);  // P(D < W)
    long double sum = 0.0L;
    for (std::uint64_t i = 0; i < draws; ++i) sum += -std::log1p(-uniform01(g) * mass) / rate;
    return static_cast<double>(sum / static_cast<long double>(draws));
}

double cumulative_association(std::span<const double> coefficients, std::span<const double> profile) {
    if (coefficients.size() != profile.size())
        throw AnalysisError("profile has " + std::to_string(profile.size()) + " entries but " +
                            std::to_string(coefficients.size()) + " coefficients were given");
    double s = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i) s += coefficients[i] * profile[i];
    return s;
}

double cumulative_association(const estimators::FitResult& fit,
                              const std::map<std::string, double>& profile) {
    std::vector<double> coefs, values;
    for (const auto& [name, value] : profile) {
        const auto* c = fit.find(name);
        if (!c) throw AnalysisError("fit has no coefficient '" + name + "'");
        coefs.push_back(c->estimate);
        values.push_back(value);
    }
    return cumulative_association(coefs, values);
}

PredictiveCheck posterior_predictive(const estimators::FitResult& fit,
                                     std::span<const intervals::ObservationRecord> records,
                                     std::size_t draws, std::uint64_t seed, std::size_t cap) {
    if (cap == 0) throw std::invalid_argument("posterior_predictive: cap must be >= 1");
    PredictiveCheck out;
    out.cap = cap;
    out.predicted.assign(cap + 1, 0);
    out.observed.assign(cap + 1, 0);
    const double gamma = fit.zero_inflation.value_or(0.0);
    std::vector<double> observed_counts;
    long double simulated_total = 0.0L;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const double mean = std::exp(linear_predictor(fit, profile_of(r), nullptr)) * r.exposure();
        out.mean_prediction.push_back((1.0 - gamma) * mean);
        observed_counts.push_back(static_cast<double>(r.m_tilde));
        ++out.observed[std::min<std::size_t>(r.m_tilde, cap)];
        auto g = substream(seed, kPredictiveStream, 0, i);
        for (std::size_t k = 0; k < draws; ++k) {
            const std::uint64_t m = uniform01(g) < gamma ? 0 : poisson(g, mean);
            simulated_total += static_cast<long double>(m);
            ++out.predicted[std::min<std::uint64_t>(m, cap)];
        }
    }
    if (!records.empty()) {
        out.analytic_mean = stats::mean(out.mean_prediction);
        if (draws > 0)
            out.simulated_mean = static_cast<double>(
                simulated_total / static_cast<long double>(records.size() * draws));
        out.mean_correlation = stats::pearson(out.mean_prediction, observed_counts);
        std::vector<double> fp, fo;
        for (std::size_t b = 0; b <= cap; ++b) {
            fp.push_back(draws ? static_cast<double>(out.predicted[b]) /
                                     static_cast<double>(records.size() * draws)
                               : 0.0);
            fo.push_back(static_cast<double>(out.observed[b]) / static_cast<double>(records.size()));
        }
        out.histogram_correlation = stats::pearson(fp, fo);
    }
    return out;
}

BinnedComparison binned_validation(std::span<const double> predicted, std::span<const double> observed,
                                   std::size_t n_bins) {
    if (predicted.size() != observed.size())
        throw AnalysisError("predicted and observed delays differ in length");
    if (n_bins < 2) throw AnalysisError("need at least two bins");
    const std::size_t n = predicted.size();
    if (n_bins > n)
        throw AnalysisError(std::to_string(n_bins) + " bins requested for " + std::to_string(n) +
                            " records");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (predicted[a] != predicted[b]) return predicted[a] < predicted[b];
        return observed[a] < observed[b];
    });
    BinnedComparison out;
    std::vector<double> bp, bo;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t lo = b * n / n_bins, hi = (b + 1) * n / n_bins;
        std::vector<double> ps, os;
        for (std::size_t k = lo; k < hi; ++k) {
            ps.push_back(predicted[order[k]]);
            os.push_back(observed[order[k]]);
        }
        Bin bin{hi - lo, stats::mean(ps), stats::mean(os)};
        bp.push_back(bin.mean_predicted);
        bo.push_back(bin.mean_observed);
        out.bins.push_back(bin);
    }
    out.bin_correlation = stats::pearson(bp, bo);
    out.individual_correlation = stats::pearson(predicted, observed);
    return out;
}

namespace {

struct ComponentDelays {
    std::vector<double> reporting, inspection, workorder, total;

    GroupDelays medians(std::string group) const {
        return {std::move(group), reporting.size(), stats::median(reporting), stats::median(inspection),
                stats::median(workorder), stats::median(total)};
    }
};

double relative_pct(double group, double city) {
    if (city == 0.0 || !std::isfinite(city)) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * (group - city) / city;
}

}  // namespace

EndToEndResult end_to_end_delays(std::span<const intervals::ObservationRecord> records,
                                 const estimators::FitResult& fit, const EndToEndOptions& options) {
    EndToEndResult out;
    std::map<std::string, ComponentDelays> by_group;
    ComponentDelays city;
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        auto label = r.labels.find(options.group_by);
        if (label == r.labels.end())
            throw AnalysisError("record " + r.incident_id + " lacks grouping label '" +
                                options.group_by + "'");
        if (!r.inspection || (!r.workorder_done && !options.impute_missing_as_infinite)) {
            ++out.excluded;
            continue;
        }
        const double reporting = expected_delay(fit, profile_of(r), nullptr).mean_delay;
        const double inspection = *r.inspection - r.start;
        const double workorder = r.workorder_done ? *r.workorder_done - *r.inspection : inf;
        for (ComponentDelays* c : {&by_group[label->second], &city}) {
            c->reporting.push_back(reporting);
            c->inspection.push_back(inspection);
            c->workorder.push_back(workorder);
            c->total.push_back(reporting + inspection + workorder);
        }
    }
    std::vector<std::string> groups = options.groups;
    if (groups.empty())
        for (const auto& [g, _] : by_group) groups.push_back(g);

    out.citywide = city.medians("citywide");
    for (const auto& g : groups) {
        auto it = by_group.find(g);
        if (it == by_group.end()) {
            out.warnings.push_back("group '" + g + "' has no records; omitted");
            continue;
        }
        const GroupDelays d = it->second.medians(g);
        out.groups.push_back(d);
        out.relative.push_back({g, "reporting", d.reporting, relative_pct(d.reporting, out.citywide.reporting)});
        out.relative.push_back({g, "inspection", d.inspection, relative_pct(d.inspection, out.citywide.inspection)});
        out.relative.push_back({g, "workorder", d.workorder, relative_pct(d.workorder, out.citywide.workorder)});
        out.relative.push_back({g, "total", d.total, relative_pct(d.total, out.citywide.total)});
    }
    return out;
}

}  // namespace duprate::analysis
