// Command-line driver: simulation, dataset construction, fitting and analysis.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "duprate/analysis.hpp"
#include "duprate/csv.hpp"
#include "duprate/estimators.hpp"
#include "duprate/io.hpp"
#include "duprate/metropolis.hpp"
#include "duprate/sim_engine.hpp"

namespace fs = std::filesystem;
using duprate::io::json;
namespace io = duprate::io;
namespace csv = duprate::csv;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string reports, observations, fit, stats, delays, pairs;
};

struct Context {
    json config;
    std::uint64_t seed = 0;
    io::Provenance prov;
    fs::path out;

    const json& block(const std::string& name) const {
        static const json empty = json::object();
        auto it = config.find(name);
        return it == config.end() ? empty : *it;
    }
    const json& required_block(const std::string& name) const {
        auto it = config.find(name);
        if (it == config.end()) throw io::ConfigError(name, "required block is missing");
        return *it;
    }
    std::string path(const std::string& file) const { return (out / file).string(); }
};

/// Exit status for a fit that did not converge; outputs are still written.
constexpr int kNotConverged = 3;

Context make_context(const Common& c) {
    Context ctx;
    ctx.config = c.config_path.empty() ? json::object() : io::load_json(c.config_path);
    if (!ctx.config.is_object()) throw io::ConfigError("<root>", "expected a JSON object");
    if (c.seed) {
        ctx.seed = *c.seed;
    } else {
        auto it = ctx.config.find("seed");
        if (it == ctx.config.end()) throw io::ConfigError("seed", "no seed in config and no --seed flag");
        if (!it->is_number_unsigned()) throw io::ConfigError("seed", "expected a non-negative integer");
        ctx.seed = it->get<std::uint64_t>();
    }
    ctx.prov = io::make_provenance(ctx.config, ctx.seed);
    ctx.out = c.out;
    fs::create_directories(ctx.out);
    return ctx;
}

void require_input(const std::string& value, const char* flag) {
    if (value.empty()) throw std::runtime_error(std::string("missing required input ") + flag);
}

std::string to_text(const auto& writer) {
    std::ostringstream s;
    writer(s);
    return s.str();
}

std::string fmt(double v) { return csv::format_double(v); }

int run_simulate(const Context& ctx) {
    const bool has_sim = ctx.config.contains("simulate");
    const bool has_log = ctx.config.contains("report_log");
    if (!has_sim && !has_log) throw io::ConfigError("simulate", "need a 'simulate' or 'report_log' block");
    json summary = json::object();
    if (has_sim) {
        const auto cfg = io::parse_sim_config(ctx.config["simulate"], ctx.seed);
        const bool write_reports = ctx.config["simulate"].value("write_reports", false);
        std::ostringstream traces;
        json reps = json::array();
        double fraction_sum = 0.0;
        for (int r = 0; r < cfg.replicates; ++r) {
            const auto tr = duprate::sim::simulate_system(cfg, r);
            io::write_traces(traces, tr, r, ctx.prov);
            json types = json::array();
            for (const auto& t : cfg.types) {
                const auto s = duprate::sim::summarize(tr, t.index);
                types.push_back({{"type", t.index}, {"incidents", s.incidents}, {"reports", s.reports},
                                 {"duplicate_fraction", s.duplicate_fraction()},
                                 {"naive_rate", duprate::estimators::naive_rate(s.reports, cfg.horizon)}});
            }
            const auto all = duprate::sim::summarize(tr);
            fraction_sum += all.duplicate_fraction();
            reps.push_back({{"replicate", r}, {"incidents", all.incidents}, {"reports", all.reports},
                            {"duplicate_fraction", all.duplicate_fraction()}, {"types", types}});
            if (r == 0 && write_reports) {
                const auto rows = io::traces_to_reports(tr);
                io::write_text_file(ctx.path("sim_reports.csv"),
                                    to_text([&](std::ostream& o) { io::write_reports(o, rows, ctx.prov); }));
            }
        }
        io::write_text_file(ctx.path("traces.csv"), traces.str());
        summary["replicates"] = reps;
        summary["mean_duplicate_fraction"] = fraction_sum / cfg.replicates;
    }
    if (has_log) {
        const auto spec = io::parse_report_log_spec(ctx.config["report_log"], ctx.seed);
        const auto log = duprate::sim::simulate_report_log(spec);
        const double epoch = ctx.config["report_log"].value("epoch_day", 18262.0);  // 2020-01-01
        const auto rows = io::synthetic_to_reports(log, spec, epoch);
        io::write_text_file(ctx.path("reports.csv"),
                            to_text([&](std::ostream& o) { io::write_reports(o, rows, ctx.prov); }));
        summary["report_log"] = {{"incidents", log.size()}, {"reports", rows.size()}};
    }
    io::write_json(ctx.path("summary.json"), summary, ctx.prov);
    return 0;
}

int run_calibrate(const Context& ctx) {
    const json& b = ctx.required_block("calibrate");
    auto need = [&](const char* key) {
        if (!b.contains(key) || !b[key].is_number())
            throw io::ConfigError(std::string("calibrate.") + key, "required number is missing");
        return b[key].get<double>();
    };
    const double target = need("target_fraction");
    const double report_rate = need("report_rate");
    const double incident_rate = b.value("incident_rate", 1.0);
    const double horizon = b.value("horizon_days", 300.0);
    const double scale = b.value("death_scale", 100.0);
    const auto opts = io::parse_calibration_options(b);
    const auto res = duprate::sim::calibrate_death_params(target, report_rate, incident_rate, horizon, scale,
                                                         ctx.seed, opts);
    io::write_json(ctx.path("calibration.json"),
                   {{"death_base_rate", res.death_base_rate}, {"death_scale", res.death_scale},
                    {"achieved_fraction", res.achieved_fraction}, {"target_fraction", target},
                    {"iterations", res.iterations}},
                   ctx.prov);
    return 0;
}

int run_build(const Context& ctx, const Common& c) {
    require_input(c.reports, "--reports");
    const auto options = io::parse_build_options(ctx.required_block("build"));
    std::optional<duprate::intervals::StandardizationStats> stats;
    if (!c.stats.empty()) stats = io::parse_standardization(io::load_json(c.stats).at("standardization"));
    auto rows = io::read_reports(c.reports);
    const auto built = duprate::intervals::build_observations(std::move(rows), options, stats);
    io::write_text_file(ctx.path("observations.csv"), to_text([&](std::ostream& o) {
                            io::write_observations(o, built.records, ctx.prov);
                        }));
    json report = {{"input_rows", built.report.input_rows},
                   {"incidents", built.report.incidents},
                   {"records", built.report.records},
                   {"dropped", built.report.dropped}};
    io::write_json(ctx.path("filter_report.json"), report, ctx.prov);
    io::write_json(ctx.path("standardization.json"),
                   {{"standardization", io::standardization_to_json(built.stats)}}, ctx.prov);
    return 0;
}

int run_fit(const Context& ctx, const Common& c) {
    require_input(c.observations, "--observations");
    const json& block = ctx.required_block("fit");
    const auto spec = io::parse_model_spec(block);
    const auto opts = io::parse_optimizer_options(block.contains("optimizer") ? block["optimizer"] : json());
    const auto records = io::read_observations(c.observations);
    const auto post = duprate::estimators::LogPosterior::build(spec, records);
    duprate::estimators::FitResult fit;
    int status = 0;
    try {
        fit = duprate::estimators::fit_map(post, opts);
        duprate::estimators::laplace_intervals(post, fit);
    } catch (const duprate::estimators::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        fit = e.partial();
        status = kNotConverged;
    }
    io::write_text_file(ctx.path("coefficients.csv"),
                        to_text([&](std::ostream& o) { io::write_coefficients(o, fit, ctx.prov); }));
    json diag = io::fit_diagnostics(fit);
    diag["records"] = records.size();
    io::write_json(ctx.path("diagnostics.json"), diag, ctx.prov);
    return status;
}

int run_sample(const Context& ctx, const Common& c) {
    require_input(c.observations, "--observations");
    const json& block = ctx.required_block("fit");
    const auto spec = io::parse_model_spec(block);
    const auto opts = io::parse_optimizer_options(block.contains("optimizer") ? block["optimizer"] : json());
    const auto sopts = io::parse_sampler_options(ctx.block("sample"), ctx.seed);
    const auto records = io::read_observations(c.observations);
    const auto post = duprate::estimators::LogPosterior::build(spec, records);
    const auto res = duprate::metropolis::sample_posterior(post, sopts, opts);
    std::ostringstream s;
    s << ctx.prov.comment() << '\n';
    csv::write_row(s, {"name", "mean", "sd", "q2.5", "q97.5", "rhat", "ess"});
    for (const auto& p : res.summary)
        csv::write_row(s, {p.name, fmt(p.mean), fmt(p.sd), fmt(p.q025), fmt(p.q975), fmt(p.rhat), fmt(p.ess)});
    io::write_text_file(ctx.path("posterior_summary.csv"), s.str());
    io::write_json(ctx.path("sampler.json"),
                   {{"converged", res.converged}, {"acceptance", res.acceptance}, {"chains", sopts.chains},
                    {"warmup", sopts.warmup}, {"draws", sopts.draws}},
                   ctx.prov);
    if (!res.converged) std::cerr << "warning: split R-hat above " << sopts.rhat_threshold << "\n";
    return 0;
}

int run_ppc(const Context& ctx, const Common& c) {
    require_input(c.fit, "--fit");
    require_input(c.observations, "--observations");
    const json& b = ctx.block("ppc");
    const auto draws = b.value("draws", 100);
    const auto cap = b.value("cap", 20);
    if (draws < 1) throw io::ConfigError("ppc.draws", "must be >= 1");
    if (cap < 1) throw io::ConfigError("ppc.cap", "must be >= 1");
    const auto fit = io::read_coefficients(c.fit);
    const auto records = io::read_observations(c.observations);
    const auto ppc = duprate::analysis::posterior_predictive(fit, records, static_cast<std::size_t>(draws),
                                                             ctx.seed, static_cast<std::size_t>(cap));
    std::ostringstream s;
    s << ctx.prov.comment() << '\n';
    csv::write_row(s, {"count", "predicted", "observed", "predicted_frequency", "observed_frequency"});
    const double np = static_cast<double>(records.size()) * draws, no = static_cast<double>(records.size());
    for (std::size_t k = 0; k <= ppc.cap; ++k)
        csv::write_row(s, {k == ppc.cap ? std::to_string(k) + "+" : std::to_string(k),
                           std::to_string(ppc.predicted[k]), std::to_string(ppc.observed[k]),
                           fmt(np > 0 ? ppc.predicted[k] / np : 0.0), fmt(no > 0 ? ppc.observed[k] / no : 0.0)});
    io::write_text_file(ctx.path("ppc.csv"), s.str());
    io::write_json(ctx.path("ppc.json"),
                   {{"records", records.size()}, {"draws", draws},
                    {"analytic_mean", ppc.analytic_mean}, {"simulated_mean", ppc.simulated_mean},
                    {"mean_correlation", ppc.mean_correlation},
                    {"histogram_correlation", ppc.histogram_correlation}},
                   ctx.prov);
    return 0;
}

int run_validate(const Context& ctx, const Common& c) {
    const json& b = ctx.block("validate");
    const auto bins = b.value("bins", 30);
    if (bins < 2) throw io::ConfigError("validate.bins", "must be >= 2");
    std::optional<double> window;
    if (b.contains("window_days")) {
        if (!b["window_days"].is_number()) throw io::ConfigError("validate.window_days", "expected a number");
        window = b["window_days"].get<double>();
    }
    const bool truncate = b.value("truncate_observed", false);
    std::vector<double> predicted, observed;
    if (!c.pairs.empty()) {
        const auto t = csv::Table::read_file(c.pairs);
        const auto cp = t.require_column("predicted"), co = t.require_column("observed");
        for (const auto& row : t.rows()) {
            auto p = csv::parse_double(row[cp]), o = csv::parse_double(row[co]);
            if (!p || !o) throw std::runtime_error("non-numeric predicted/observed value in " + c.pairs);
            predicted.push_back(*p);
            observed.push_back(*o);
        }
    } else {
        require_input(c.fit, "--fit or --pairs");
        require_input(c.observations, "--observations");
        require_input(c.delays, "--delays");
        const auto fit = io::read_coefficients(c.fit);
        const auto records = io::read_observations(c.observations);
        const auto t = csv::Table::read_file(c.delays);
        const auto ci = t.require_column("incident_id"), co = t.require_column("observed");
        std::map<std::string, double> obs;
        for (const auto& row : t.rows()) {
            auto o = csv::parse_double(row[co]);
            if (!o) throw std::runtime_error("non-numeric observed delay for incident " + row[ci]);
            obs[row[ci]] = *o;
        }
        for (const auto& r : records) {
            auto it = obs.find(r.incident_id);
            if (it == obs.end()) continue;
            const auto d = duprate::analysis::expected_delay(fit, duprate::analysis::profile_of(r), nullptr, window);
            predicted.push_back(d.conditional_mean.value_or(d.mean_delay));
            observed.push_back(it->second);
        }
    }
    if (truncate && window) {
        std::vector<double> p2, o2;
        for (std::size_t i = 0; i < observed.size(); ++i)
            if (observed[i] < *window) {
                p2.push_back(predicted[i]);
                o2.push_back(observed[i]);
            }
        predicted.swap(p2);
        observed.swap(o2);
    }
    const auto cmp = duprate::analysis::binned_validation(predicted, observed, static_cast<std::size_t>(bins));
    std::ostringstream s;
    s << ctx.prov.comment() << '\n';
    csv::write_row(s, {"bin", "count", "mean_predicted", "mean_observed"});
    for (std::size_t k = 0; k < cmp.bins.size(); ++k)
        csv::write_row(s, {std::to_string(k), std::to_string(cmp.bins[k].count), fmt(cmp.bins[k].mean_predicted),
                           fmt(cmp.bins[k].mean_observed)});
    io::write_text_file(ctx.path("binned.csv"), s.str());
    io::write_json(ctx.path("validation.json"),
                   {{"pairs", predicted.size()}, {"bins", bins}, {"bin_correlation", cmp.bin_correlation},
                    {"individual_correlation", cmp.individual_correlation}},
                   ctx.prov);
    return 0;
}

int run_delays(const Context& ctx, const Common& c) {
    require_input(c.fit, "--fit");
    require_input(c.observations, "--observations");
    const json& b = ctx.block("delays");
    duprate::analysis::EndToEndOptions opts;
    opts.group_by = b.value("group_by", opts.group_by);
    if (b.contains("groups")) opts.groups = b["groups"].get<std::vector<std::string>>();
    opts.impute_missing_as_infinite = b.value("impute_missing_as_infinite", false);
    const auto fit = io::read_coefficients(c.fit);
    const auto records = io::read_observations(c.observations);
    const auto res = duprate::analysis::end_to_end_delays(records, fit, opts);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

    std::ostringstream rel;
    rel << ctx.prov.comment() << '\n';
    csv::write_row(rel, {"group", "component", "median_days", "relative_pct"});
    for (const auto& r : res.relative)
        csv::write_row(rel, {r.group, r.component, fmt(r.median_days), fmt(r.relative_pct)});
    io::write_text_file(ctx.path("end_to_end.csv"), rel.str());

    std::ostringstream med;
    med << ctx.prov.comment() << '\n';
    csv::write_row(med, {"group", "records", "reporting", "inspection", "workorder", "total"});
    auto row = [&](const duprate::analysis::GroupDelays& g) {
        csv::write_row(med, {g.group, std::to_string(g.records), fmt(g.reporting), fmt(g.inspection),
                             fmt(g.workorder), fmt(g.total)});
    };
    for (const auto& g : res.groups) row(g);
    row(res.citywide);
    io::write_text_file(ctx.path("group_medians.csv"), med.str());
    io::write_json(ctx.path("delays.json"), {{"excluded", res.excluded}, {"warnings", res.warnings}}, ctx.prov);
    return 0;
}

int run_contextualize(const Context& ctx, const Common& c) {
    require_input(c.fit, "--fit");
    const json& b = ctx.required_block("contextualize");
    const auto fit = io::read_coefficients(c.fit);
    std::optional<duprate::intervals::StandardizationStats> stats;
    if (b.contains("standardization")) stats = io::parse_standardization(b["standardization"]);
    std::optional<double> window;
    if (b.contains("window_days")) window = b["window_days"].get<double>();
    if (!b.contains("profiles") || !b["profiles"].is_array())
        throw io::ConfigError("contextualize.profiles", "expected an array of profiles");
    std::ostringstream s;
    s << ctx.prov.comment() << '\n';
    csv::write_row(s, {"profile", "rate_per_day", "mean_delay_days", "conditional_mean_days"});
    const auto& profiles = b["profiles"];
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const std::string key = "contextualize.profiles[" + std::to_string(i) + "]";
        const auto profile = io::parse_profile(profiles[i], key);
        const std::string name = profiles[i].value("name", "profile" + std::to_string(i));
        try {
            const auto d = duprate::analysis::expected_delay(fit, profile, stats ? &*stats : nullptr, window);
            csv::write_row(s, {name, fmt(d.rate), fmt(d.mean_delay),
                               d.conditional_mean ? fmt(*d.conditional_mean) : ""});
        } catch (const duprate::analysis::AnalysisError& e) {
            throw io::ConfigError(key, e.what());
        }
    }
    io::write_text_file(ctx.path("contextualized_delays.csv"), s.str());
    if (b.contains("association")) {
        const auto& a = b["association"];
        if (!a.is_object()) throw io::ConfigError("contextualize.association", "expected {coefficient: value}");
        std::map<std::string, double> profile;
        for (const auto& [k, v] : a.items()) profile[k] = v.get<double>();
        io::write_json(ctx.path("association.json"),
                       {{"score", duprate::analysis::cumulative_association(fit, profile)}}, ctx.prov);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimate heterogeneous reporting rates from duplicate crowdsourced reports"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON configuration file");
        sub->add_option("--seed", common.seed, "Random seed (overrides the config 'seed' key)");
        sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    };
    auto* simulate = app.add_subcommand("simulate", "Simulate incident traces and/or a synthetic report log");
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate the death clock to a duplicate fraction");
    auto* build = app.add_subcommand("build", "Build observation intervals from a report log");
    auto* fit = app.add_subcommand("fit", "Fit the (zero-inflated) Poisson reporting-rate model");
    auto* sample = app.add_subcommand("sample", "Sample the posterior with random-walk Metropolis");
    auto* ppc = app.add_subcommand("ppc", "Posterior predictive check of report counts");
    auto* validate = app.add_subcommand("validate", "Binned comparison of predicted and observed delays");
    auto* delays = app.add_subcommand("delays", "End-to-end delay decomposition by group");
    auto* contextualize = app.add_subcommand("contextualize", "Expected reporting delays for profiles");
    for (auto* s : {simulate, calibrate, build, fit, sample, ppc, validate, delays, contextualize}) add_common(s);
    build->add_option("--reports", common.reports, "Report log CSV");
    build->add_option("--stats", common.stats, "Standardization JSON to apply instead of learning one");
    for (auto* s : {fit, sample, ppc, validate, delays})
        s->add_option("--observations", common.observations, "Observations CSV");
    for (auto* s : {ppc, validate, delays, contextualize})
        s->add_option("--fit", common.fit, "Coefficients CSV");
    validate->add_option("--delays", common.delays, "CSV of incident_id, observed delay");
    validate->add_option("--pairs", common.pairs, "CSV of predicted, observed delays");

    CLI11_PARSE(app, argc, argv);

    try {
        const Context ctx = make_context(common);
        if (*simulate) return run_simulate(ctx);
        if (*calibrate) return run_calibrate(ctx);
        if (*build) return run_build(ctx, common);
        if (*fit) return run_fit(ctx, common);
        if (*sample) return run_sample(ctx, common);
        if (*ppc) return run_ppc(ctx, common);
        if (*validate) return run_validate(ctx, common);
        if (*delays) return run_delays(ctx, common);
        if (*contextualize) return run_contextualize(ctx, common);
    } catch (const io::ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
