#include "duprate/intervals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

namespace duprate::intervals {

namespace {

bool equal_present(const std::optional<std::string>& a, const std::optional<std::string>& b) {
    return a && b && !a->empty() && *a == *b;
}

template <typename Member>
std::optional<Days> earliest(std::span<const ReportRow> group, Member member) {
    std::optional<Days> best;
    for (const auto& r : group) {
        const auto& v = r.*member;
        if (v && (!best || *v < *best)) best = v;
    }
    return best;
}

std::string month_label(Days t) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{static_cast<long long>(std::floor(t))}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()));
    return buf;
}

std::optional<std::string> label_of(const ReportRow& row, const std::string& name, Days start) {
    if (name == "category") return row.category.empty() ? std::nullopt : std::optional(row.category);
    if (name == "tract") return row.tract_id;
    if (name == "month") return month_label(start);
    auto it = row.labels.find(name);
    if (it == row.labels.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

}  // namespace

void IntervalPolicy::validate() const {
    if (!(max_duration > 0.0)) throw std::invalid_argument("max_duration must be > 0");
    if (!(min_duration >= 0.0)) throw std::invalid_argument("min_duration must be >= 0");
    if (variant == IntervalVariant::Chicago && !data_retrieval_time)
        throw std::invalid_argument("the Chicago interval rule needs data_retrieval_time");
}

IntervalPolicy IntervalPolicy::nyc(double max_duration, double min_duration) {
    return {IntervalVariant::NYC, max_duration, std::nullopt, min_duration};
}

IntervalPolicy IntervalPolicy::chicago(Days retrieval_time, double max_duration,
                                       double min_duration) {
    return {IntervalVariant::Chicago, max_duration, retrieval_time, min_duration};
}

IntervalPolicy IntervalPolicy::last_report(double min_duration) {
    return {IntervalVariant::IncorrectLastReport, std::numeric_limits<double>::infinity(),
            std::nullopt, min_duration};
}

bool same_caller(const ReportRow& earlier, const ReportRow& later, bool conservative) {
    if (equal_present(earlier.phone, later.phone)) return true;
    if (equal_present(earlier.email, later.email)) return true;
    if (equal_present(earlier.first_name, later.first_name) &&
        equal_present(earlier.last_name, later.last_name))
        return true;
    return conservative && !earlier.has_caller_info() && !later.has_caller_info();
}

RepeatFilterResult filter_repeat_callers(std::vector<ReportRow> rows, bool conservative) {
    std::unordered_map<std::string, std::vector<std::size_t>> by_incident;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].incident_id) by_incident[*rows[i].incident_id].push_back(i);

    std::vector<bool> keep(rows.size(), true);
    RepeatFilterResult result;
    for (auto& [id, idx] : by_incident) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return rows[a].created < rows[b].created;
        });
        std::vector<std::size_t> retained;
        for (std::size_t i : idx) {
            const bool repeat = std::any_of(retained.begin(), retained.end(), [&](std::size_t j) {
                return same_caller(rows[j], rows[i], conservative);
            });
            if (repeat) {
                keep[i] = false;
                ++result.dropped;
            } else {
                retained.push_back(i);
            }
        }
    }
    result.rows.reserve(rows.size() - result.dropped);
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (keep[i]) result.rows.push_back(std::move(rows[i]));
    return result;
}

GroupingResult group_into_incidents(std::vector<ReportRow> rows) {
    GroupingResult result;
    for (auto& r : rows) {
        if (!r.incident_id || r.incident_id->empty()) {
            ++result.missing_incident_id;
            continue;
        }
        result.groups[*r.incident_id].push_back(std::move(r));
    }
    for (auto& [id, group] : result.groups)
        std::stable_sort(group.begin(), group.end(),
                         [](const ReportRow& a, const ReportRow& b) { return a.created < b.created; });
    return result;
}

IntervalOutcome build_interval(std::span<const ReportRow> group, const IntervalPolicy& policy,
                               const IntervalInputs& inputs) {
    if (group.empty()) throw std::invalid_argument("build_interval: empty incident group");
    policy.validate();
    const auto first_it = std::min_element(
        group.begin(), group.end(),
        [](const ReportRow& a, const ReportRow& b) { return a.created < b.created; });
    const ReportRow& first = *first_it;
    const std::string id = first.incident_id.value_or(first.report_id);
    const Days start = first.created;

    const auto inspection = earliest(group, &ReportRow::inspection);
    const auto workorder = earliest(group, &ReportRow::workorder);
    const auto closed = earliest(group, &ReportRow::closed);

    Days end = start + policy.max_duration;
    switch (policy.variant) {
        case IntervalVariant::NYC:
            if (inspection && *inspection < start) return Rejection{id, kInspectionBeforeReport};
            if (inspection) end = std::min(end, *inspection);
            if (workorder) end = std::min(end, *workorder);
            break;
        case IntervalVariant::Chicago:
            if (closed) end = std::min(end, *closed);
            end = std::min(end, *policy.data_retrieval_time);
            break;
        case IntervalVariant::IncorrectLastReport: {
            end = start;
            for (const auto& r : group) end = std::max(end, r.created);
            break;
        }
    }
    if (!(end > start)) return Rejection{id, kNonPositiveExposure};
    if (end - start < policy.min_duration) return Rejection{id, kShortExposure};

    ObservationRecord rec;
    rec.incident_id = id;
    rec.start = start;
    rec.end = end;
    rec.inspection = inspection;
    rec.workorder_done = earliest(group, &ReportRow::workorder_done);
    for (const auto& r : group)
        if (r.created > start && r.created <= end) ++rec.m_tilde;

    for (const auto& name : inputs.covariates) {
        auto it = first.numeric.find(name);
        if (it == first.numeric.end() || !std::isfinite(it->second))
            return Rejection{id, kMissingCovariate};
        rec.covariates.emplace(name, it->second);
    }
    for (const auto& name : inputs.labels) {
        auto v = label_of(first, name, start);
        if (!v) return Rejection{id, kMissingCovariate};
        rec.labels.emplace(name, std::move(*v));
    }
    return rec;
}

const StandardizationStats::Entry* StandardizationStats::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

double StandardizationStats::apply(const std::string& name, double raw) const {
    const Entry* e = find(name);
    if (!e) throw StandardizationError("no standardization stats for covariate '" + name + "'");
    double x = raw;
    if (e->log_transformed) {
        if (!(x > 0.0))
            throw StandardizationError("covariate '" + name + "' must be > 0 to log-transform");
        x = std::log(x);
    }
    return (x - e->mean) / e->sd;
}

StandardizeResult standardize_covariates(std::vector<ObservationRecord> records,
                                         const std::optional<StandardizationStats>& stats,
                                         const std::vector<std::string>& log_transform) {
    StandardizeResult result;
    if (stats) {
        result.stats = *stats;
    } else if (!records.empty()) {
        for (const auto& [name, value] : records.front().covariates) {
            StandardizationStats::Entry e;
            e.name = name;
            e.log_transformed =
                std::find(log_transform.begin(), log_transform.end(), name) != log_transform.end();
            std::vector<double> xs;
            xs.reserve(records.size());
            for (const auto& r : records) {
                auto it = r.covariates.find(name);
                if (it == r.covariates.end())
                    throw StandardizationError("covariate '" + name + "' missing from a record");
                double x = it->second;
                if (e.log_transformed) {
                    if (!(x > 0.0))
                        throw StandardizationError("covariate '" + name +
                                                   "' must be > 0 to log-transform");
                    x = std::log(x);
                }
                xs.push_back(x);
            }
            const double n = static_cast<double>(xs.size());
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= n;
            double ss = 0.0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            if (!(sd > 0.0))
                throw StandardizationError("covariate '" + name + "' has zero variance");
            e.mean = mean;
            e.sd = sd;
            result.stats.entries.push_back(e);
        }
    }
    for (auto& r : records)
        for (auto& [name, value] : r.covariates) value = result.stats.apply(name, value);
    result.records = std::move(records);
    return result;
}

BuildResult build_observations(std::vector<ReportRow> rows, const BuildOptions& options,
                               const std::optional<StandardizationStats>& stats) {
    options.policy.validate();
    BuildResult out;
    out.report.input_rows = rows.size();
    for (const char* reason : {kRepeatCaller, kMissingIncident, kInspectionBeforeReport,
                               kNonPositiveExposure, kShortExposure, kMissingCovariate})
        out.report.dropped[reason] = 0;

    auto filtered = filter_repeat_callers(std::move(rows), options.conservative_repeat_filter);
    out.report.dropped[kRepeatCaller] = filtered.dropped;
    auto grouped = group_into_incidents(std::move(filtered.rows));
    out.report.dropped[kMissingIncident] = grouped.missing_incident_id;
    out.report.incidents = grouped.groups.size();

    std::vector<ObservationRecord> records;
    for (const auto& [id, group] : grouped.groups) {
        auto outcome = build_interval(group, options.policy, options.inputs);
        if (auto* rec = std::get_if<ObservationRecord>(&outcome))
            records.push_back(std::move(*rec));
        else
            ++out.report.dropped[std::get<Rejection>(outcome).reason];
    }
    out.report.records = records.size();
    if (options.standardize) {
        auto st = standardize_covariates(std::move(records), stats, options.log_transform);
        out.records = std::move(st.records);
        out.stats = std::move(st.stats);
    } else {
        out.records = std::move(records);
    }
    return out;
}

}  // namespace duprate::intervals
