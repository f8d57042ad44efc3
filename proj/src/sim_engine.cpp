#include "duprate/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace duprate::sim {

namespace {

// Stream tags keep birth and per-incident draws apart.
constexpr std::uint64_t kBirthStream = 0xb1;
constexpr std::uint64_t kIncidentStream = 0x1c;
constexpr std::uint64_t kLifetimeStream = 0x7e;
constexpr std::uint64_t kLogStream = 0x10;

}  // namespace

double TypeSpec::incident_rate() const { return std::exp(incident_log_rate); }
double TypeSpec::report_rate() const { return std::exp(report_log_rate); }

double TypeSpec::death_rate_after(std::size_t reports) const {
    return death_base_rate * std::pow(death_scale, static_cast<double>(reports));
}

void TypeSpec::validate() const {
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument("type " + std::to_string(index) + ": " + what);
    };
    if (!std::isfinite(incident_log_rate) && incident_log_rate != -INFINITY)
        fail("incident_log_rate must be finite");
    if (!std::isfinite(report_log_rate)) fail("report_log_rate must be finite");
    if (!(death_base_rate >= 0.0)) fail("death_base_rate must be >= 0");
    if (!(death_scale >= 1.0)) fail("death_scale must be >= 1");
}

TypeSpec TypeSpec::from_regression(int index, std::vector<double> theta, double incident_intercept,
                                   std::span<const double> incident_coefs,
                                   double report_intercept,
                                   std::span<const double> report_coefs,
                                   double death_base_rate, double death_scale) {
    if (incident_coefs.size() != theta.size() || report_coefs.size() != theta.size())
        throw std::invalid_argument("coefficient length does not match covariate length");
    TypeSpec t;
    t.index = index;
    t.incident_log_rate = incident_intercept +
        std::inner_product(theta.begin(), theta.end(), incident_coefs.begin(), 0.0);
    t.report_log_rate = report_intercept +
        std::inner_product(theta.begin(), theta.end(), report_coefs.begin(), 0.0);
    t.covariates = std::move(theta);
    t.death_base_rate = death_base_rate;
    t.death_scale = death_scale;
    t.validate();
    return t;
}

DurationDistribution DurationDistribution::exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential lifetime needs rate > 0");
    return DurationDistribution{Exponential{rate}};
}

DurationDistribution DurationDistribution::point_mass(double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("point-mass lifetime must be >= 0");
    return DurationDistribution{PointMass{value}};
}

DurationDistribution DurationDistribution::empirical(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical lifetime needs samples");
    for (double s : samples)
        if (!(s >= 0.0)) throw std::invalid_argument("empirical lifetimes must be >= 0");
    return DurationDistribution{Empirical{std::move(samples)}};
}

double DurationDistribution::sample(SplitMix64& rng) const {
    struct Visitor {
        SplitMix64& rng;
        double operator()(const Exponential& e) const { return duprate::exponential(rng, e.rate); }
        double operator()(const PointMass& p) const { return p.value; }
        double operator()(const Empirical& e) const {
            const auto n = e.samples.size();
            auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
            return e.samples[std::min(i, n - 1)];
        }
    };
    return std::visit(Visitor{rng}, kind_);
}

double DurationDistribution::laplace_transform(double s) const {
    struct Visitor {
        double s;
        double operator()(const Exponential& e) const {
            // Truncate where the lifetime tail mass drops below 1e-10.
            const double t_max = std::log(1e10) / e.rate;
            auto integrand = [&](double t) { return std::exp(-s * t) * e.rate * std::exp(-e.rate * t); };
            return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                integrand, 0.0, t_max, 15, 1e-12);
        }
        double operator()(const PointMass& p) const { return std::exp(-s * p.value); }
        double operator()(const Empirical& e) const {
            double acc = 0.0;
            for (double t : e.samples) acc += std::exp(-s * t);
            return acc / static_cast<double>(e.samples.size());
        }
    };
    return std::visit(Visitor{s}, kind_);
}

void SimConfig::validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon_days must be > 0");
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    for (const auto& t : types) t.validate();
}

IncidentTrace simulate_incident(const TypeSpec& type, double birth, double horizon,
                                SplitMix64& rng) {
    IncidentTrace trace;
    trace.type_index = type.index;
    trace.birth = birth;
    const double report_rate = type.report_rate();
    double now = birth;
    for (std::size_t m = 0;; ++m) {
        const double death_wait = exponential(rng, type.death_rate_after(m));
        const double report_wait = exponential(rng, report_rate);
        if (death_wait <= report_wait) {
            now += death_wait;
            if (now > horizon) {
                trace.death = horizon;
                trace.censored = true;
            } else {
                trace.death = now;
            }
            break;
        }
        now += report_wait;
        if (now > horizon) {
            trace.death = horizon;
            trace.censored = true;
            break;
        }
        trace.report_times.push_back(now);
    }
    return trace;
}

IncidentTrace simulate_incident_with_duration(double report_rate,
                                              const DurationDistribution& lifetime,
                                              double birth, double horizon, SplitMix64& rng) {
    IncidentTrace trace;
    trace.birth = birth;
    const double end = birth + lifetime.sample(rng);
    trace.censored = end > horizon;
    trace.death = std::min(end, horizon);
    double now = birth;
    for (;;) {
        now += exponential(rng, report_rate);
        if (now > trace.death) break;
        trace.report_times.push_back(now);
    }
    return trace;
}

std::vector<IncidentTrace> simulate_type(const TypeSpec& type, double horizon, std::uint64_t seed,
                                         int replicate) {
    std::vector<IncidentTrace> out;
    const double rate = type.incident_rate();
    if (!(rate > 0.0)) return out;
    auto births = substream(seed, replicate, type.index, kBirthStream);
    double t = 0.0;
    for (std::uint64_t j = 0;; ++j) {
        t += exponential(births, rate);
        if (t > horizon) break;
        auto rng = substream(seed, replicate, type.index, kIncidentStream, j);
        out.push_back(simulate_incident(type, t, horizon, rng));
    }
    return out;
}

std::vector<IncidentTrace> simulate_system(const SimConfig& config, int replicate) {
    config.validate();
    std::vector<IncidentTrace> out;
    std::uint64_t next_id = 0;
    for (const auto& type : config.types) {
        for (auto& trace : simulate_type(type, config.horizon, config.seed, replicate)) {
            if (!trace.observed()) continue;
            trace.id = next_id++;
            out.push_back(std::move(trace));
        }
    }
    return out;
}

double ReportSummary::duplicate_fraction() const {
    return reports == 0 ? 0.0 : static_cast<double>(duplicates) / static_cast<double>(reports);
}

ReportSummary summarize(std::span<const IncidentTrace> traces, int type_index) {
    ReportSummary s;
    for (const auto& t : traces) {
        if (!t.observed()) continue;
        if (type_index >= 0 && t.type_index != type_index) continue;
        ++s.incidents;
        s.reports += t.total_reports();
        s.duplicates += t.total_reports() - 1;
    }
    return s;
}

double steady_state_observed_rate(double incident_rate, double report_rate,
                                  const DurationDistribution& lifetime) {
    if (!(incident_rate > 0.0) || !(report_rate > 0.0))
        throw std::invalid_argument("steady_state_observed_rate needs positive rates");
    return incident_rate * (1.0 - lifetime.laplace_transform(report_rate));
}

ObservedRateEstimate simulate_observed_incident_rate(double incident_rate, double report_rate,
                                                     const DurationDistribution& lifetime,
                                                     double horizon, double burn_in,
                                                     std::uint64_t seed) {
    if (!(burn_in >= 0.0 && burn_in < horizon))
        throw std::invalid_argument("burn_in must lie in [0, horizon)");
    auto births = substream(seed, kBirthStream);
    ObservedRateEstimate est;
    double t = 0.0;
    for (std::uint64_t j = 0;; ++j) {
        t += exponential(births, incident_rate);
        if (t > horizon) break;
        auto rng = substream(seed, kLifetimeStream, j);
        const auto trace = simulate_incident_with_duration(report_rate, lifetime, t, horizon, rng);
        if (trace.observed() && trace.report_times.front() >= burn_in) ++est.count;
    }
    const double window = horizon - burn_in;
    est.rate = static_cast<double>(est.count) / window;
    est.standard_error = std::sqrt(static_cast<double>(est.count)) / window;
    return est;
}

double simulated_duplicate_fraction(double death_base_rate, double death_scale,
                                    double report_rate, double incident_rate, double horizon,
                                    std::uint64_t seed, int replicates) {
    TypeSpec type;
    type.incident_log_rate = std::log(incident_rate);
    type.report_log_rate = std::log(report_rate);
    type.death_base_rate = death_base_rate;
    type.death_scale = death_scale;
    ReportSummary total;
    for (int r = 0; r < replicates; ++r) {
        const auto traces = simulate_type(type, horizon, seed, r);
        const auto s = summarize(traces);
        total.incidents += s.incidents;
        total.reports += s.reports;
        total.duplicates += s.duplicates;
    }
    return total.duplicate_fraction();
}

CalibrationResult calibrate_death_params(double target, double report_rate, double incident_rate,
                                         double horizon, double death_scale, std::uint64_t seed,
                                         const CalibrationOptions& options) {
    if (!(target > 0.0 && target < 1.0))
        throw std::invalid_argument("target duplicate fraction must lie in (0, 1)");
    if (!(death_scale >= 1.0)) throw std::invalid_argument("death_scale must be >= 1");
    auto fraction = [&](double mu) {
        return simulated_duplicate_fraction(mu, death_scale, report_rate, incident_rate, horizon,
                                            seed, options.replicates);
    };
    // Duplicates become rarer as the death rate grows.
    double lo = std::log(options.min_rate);
    double hi = std::log(options.max_rate);
    const double f_lo = fraction(options.min_rate);
    const double f_hi = fraction(options.max_rate);
    if (!(f_lo >= target && f_hi <= target)) {
        std::ostringstream msg;
        msg << "target duplicate fraction " << target << " is outside the bracket: mu in ["
            << options.min_rate << ", " << options.max_rate << "] gives fractions [" << f_hi
            << ", " << f_lo << "]";
        throw CalibrationError(msg.str());
    }
    CalibrationResult result;
    result.death_scale = death_scale;
    double mid = 0.5 * (lo + hi);
    double f_mid = fraction(std::exp(mid));
    for (result.iterations = 1; result.iterations < options.max_iterations; ++result.iterations) {
        if (hi - lo < 1e-7) break;
        if (f_mid > target)
            lo = mid;
        else
            hi = mid;
        mid = 0.5 * (lo + hi);
        f_mid = fraction(std::exp(mid));
    }
    result.death_base_rate = std::exp(mid);
    result.achieved_fraction = f_mid;
    if (std::abs(f_mid - target) > options.tolerance) {
        std::ostringstream msg;
        msg << "calibration stalled at mu=" << result.death_base_rate << " with fraction " << f_mid
            << " (target " << target << " +/- " << options.tolerance << ")";
        throw CalibrationError(msg.str());
    }
    return result;
}

std::vector<SyntheticIncident> simulate_report_log(const ReportLogSpec& spec) {
    if (spec.covariate_coefs.size() != spec.covariate_names.size())
        throw std::invalid_argument("covariate names and coefficients differ in length");
    for (const auto& f : spec.factors)
        if (f.levels.empty() || f.levels.size() != f.effects.size())
            throw std::invalid_argument("factor '" + f.name + "' needs one effect per level");
    if (!(spec.zero_inflation >= 0.0 && spec.zero_inflation < 1.0))
        throw std::invalid_argument("zero_inflation must lie in [0, 1)");

    std::vector<SyntheticIncident> out;
    out.reserve(spec.incidents);
    for (std::size_t i = 0; i < spec.incidents; ++i) {
        auto rng = substream(spec.seed, kLogStream, i);
        SyntheticIncident inc;
        inc.id = i;
        double eta = spec.intercept;
        for (std::size_t k = 0; k < spec.covariate_coefs.size(); ++k) {
            const double x = standard_normal(rng);
            inc.covariates.push_back(x);
            eta += spec.covariate_coefs[k] * x;
        }
        for (const auto& f : spec.factors) {
            const auto n = f.levels.size();
            auto level = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
            level = std::min(level, n - 1);
            inc.levels.push_back(static_cast<int>(level));
            eta += f.effects[level];
        }
        inc.log_rate = eta;
        inc.zero_inflated = uniform01(rng) < spec.zero_inflation;
        const double first = uniform01(rng) * spec.span_days;
        inc.inspection = first + exponential(rng, spec.inspection_rate);
        inc.workorder_done = inc.inspection + exponential(rng, spec.workorder_rate);

        int callers = 0;
        auto add_report = [&](double t) {
            inc.reports.push_back({t, callers++});
            if (spec.repeat_call_probability > 0.0 && uniform01(rng) < spec.repeat_call_probability) {
                // Same caller again, shortly after.
                const double again = t + exponential(rng, 24.0);
                if (again < inc.workorder_done) inc.reports.push_back({again, callers - 1});
            }
        };
        add_report(first);
        if (!inc.zero_inflated) {
            const double rate = std::exp(eta);
            double t = first;
            for (;;) {
                t += exponential(rng, rate);
                if (t >= inc.workorder_done) break;
                add_report(t);
            }
        }
        std::stable_sort(inc.reports.begin(), inc.reports.end(),
                         [](const SyntheticReport& a, const SyntheticReport& b) {
                             return a.created < b.created;
                         });
        out.push_back(std::move(inc));
    }
    return out;
}

}  // namespace duprate::sim
